#include "cpss/stability.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>
#include <cmath>
#include <exception>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "cpss/error.hpp"

namespace cpss {

namespace {

constexpr double kTauSlack = 1e-12;

std::vector<int> threshold(const std::vector<int>& counts, int denom, double tau) {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(counts.size()); ++k) {
        if (static_cast<double>(counts[k]) / denom >= tau - kTauSlack) out.push_back(k);
    }
    return out;
}

int on_grid(double v, int denom, const std::string& what, int line) {
    const double scaled = v * denom;
    const double r = std::round(scaled);
    if (!std::isfinite(v) || v < 0.0 || v > 1.0 || std::abs(scaled - r) > 1e-6) {
        throw InputError(fmt::format("frequency profile line {}: {}={} is not a multiple of 1/{}", line, what, v, denom));
    }
    return static_cast<int>(r);
}

}  // namespace

std::vector<int> FunctionSelector::select(const Dataset& data) const {
    auto s = fn_(data);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

std::vector<double> FrequencyProfile::pi_hat() const {
    std::vector<double> v(selected.size());
    for (int k = 0; k < p(); ++k) v[k] = pi_hat(k);
    return v;
}

std::vector<double> FrequencyProfile::pi_tilde() const {
    std::vector<double> v(both.size());
    for (int k = 0; k < p(); ++k) v[k] = pi_tilde(k);
    return v;
}

double FrequencyProfile::q_hat() const {
    long long total = 0;
    for (int c : selected) total += c;
    return static_cast<double>(total) / (2.0 * B);
}

void FrequencyProfile::write_csv(std::ostream& out) const {
    out << "# B=" << B << '\n' << "# p=" << p() << '\n';
    out << "variable,pi_hat,pi_tilde\n";
    for (int k = 0; k < p(); ++k) {
        const std::string name = k < static_cast<int>(names.size()) ? names[k] : fmt::format("x{}", k + 1);
        out << fmt::format("{},{:.17g},{:.17g}\n", name, pi_hat(k), pi_tilde(k));
    }
}

FrequencyProfile FrequencyProfile::read_csv(std::istream& in) {
    FrequencyProfile prof;
    std::optional<int> declared_p;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            int v = 0;
            if (std::sscanf(line.c_str(), "# B=%d", &v) == 1) prof.B = v;
            if (std::sscanf(line.c_str(), "# p=%d", &v) == 1) declared_p = v;
            continue;
        }
        if (!header_seen) {
            if (line != "variable,pi_hat,pi_tilde") {
                throw InputError("frequency profile: expected header 'variable,pi_hat,pi_tilde'");
            }
            header_seen = true;
            continue;
        }
        if (prof.B < 1) throw InputError("frequency profile: missing '# B=' line before the data");
        std::istringstream ss(line);
        std::string name, a, b;
        if (!std::getline(ss, name, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b)) {
            throw InputError(fmt::format("frequency profile line {}: expected three fields", lineno));
        }
        double ph = 0.0, pt = 0.0;
        try {
            ph = std::stod(a);
            pt = std::stod(b);
        } catch (const std::exception&) {
            throw InputError(fmt::format("frequency profile line {}: non-numeric frequency", lineno));
        }
        prof.names.push_back(name);
        prof.selected.push_back(on_grid(ph, 2 * prof.B, "pi_hat", lineno));
        prof.both.push_back(on_grid(pt, prof.B, "pi_tilde", lineno));
    }
    if (!header_seen) throw InputError("frequency profile: no header found");
    if (declared_p && *declared_p != prof.p()) {
        throw InputError(fmt::format("frequency profile: declared p={} but found {} rows", *declared_p, prof.p()));
    }
    return prof;
}

FrequencyProfile selection_frequencies(const Dataset& data, const SelectionProcedure& proc,
                                       const SubsamplePlan& plan, int threads) {
    if (plan.n != data.n()) {
        throw DomainError(fmt::format("subsample plan is for n={} but the dataset has {} rows", plan.n, data.n()));
    }
    const int B = plan.B;
    const int p = data.p();
    std::vector<std::array<std::vector<int>, 2>> chosen(static_cast<std::size_t>(B));
    std::vector<std::string> errors(static_cast<std::size_t>(B));
    std::vector<char> failed(static_cast<std::size_t>(B), 0);

#ifdef _OPENMP
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
#endif
    for (int task = 0; task < 2 * B; ++task) {
        const int j = task / 2;
        const int h = task % 2;
        try {
            const Dataset sub = data.subset(plan.half(static_cast<std::size_t>(j), h));
            auto s = proc.select(sub);
            for (int k : s) {
                if (k < 0 || k >= p) throw std::out_of_range(fmt::format("variable index {} out of range", k));
            }
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            chosen[j][h] = std::move(s);
        } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical(cpss_selection_errors)
#endif
            {
                failed[j] = 1;
                if (errors[j].empty()) errors[j] = e.what();
            }
        }
    }
#ifndef _OPENMP
    (void)threads;
#endif

    for (int j = 0; j < B; ++j) {
        if (failed[j]) throw SelectionFailure(static_cast<std::size_t>(j), errors[j]);
    }

    FrequencyProfile prof;
    prof.B = B;
    prof.n = data.n();
    prof.names = data.names;
    prof.selected.assign(static_cast<std::size_t>(p), 0);
    prof.both.assign(static_cast<std::size_t>(p), 0);
    std::vector<char> in_first(static_cast<std::size_t>(p));
    for (int j = 0; j < B; ++j) {
        std::fill(in_first.begin(), in_first.end(), 0);
        for (int k : chosen[j][0]) {
            in_first[k] = 1;
            ++prof.selected[k];
        }
        for (int k : chosen[j][1]) {
            ++prof.selected[k];
            if (in_first[k]) ++prof.both[k];
        }
    }
    return prof;
}

std::vector<int> cpss_select(const FrequencyProfile& profile, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("cpss_select: tau must lie in [0, 1]");
    return threshold(profile.selected, 2 * profile.B, tau);
}

std::vector<int> simultaneous_select(const FrequencyProfile& profile, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("simultaneous_select: tau must lie in [0, 1]");
    return threshold(profile.both, profile.B, tau);
}

double estimate_q(const FrequencyProfile& profile) { return profile.q_hat(); }

}  // namespace cpss
