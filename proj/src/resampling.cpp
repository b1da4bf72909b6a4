#include "cpss/resampling.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "cpss/error.hpp"
#include "cpss/rng.hpp"

namespace cpss {

namespace {

void check_B(int B) {
    if (B < 1) throw DomainError("number of pairs B must be >= 1");
}

template <typename Label>
SubsamplePlan stratified_impl(std::span<const Label> labels, int B, std::uint64_t seed) {
    check_B(B);
    const int n = static_cast<int>(labels.size());
    if (n < 2) throw DomainError("stratified_pairs: need at least two observations");

    std::map<Label, std::vector<int>> classes;
    for (int i = 0; i < n; ++i) classes[labels[i]].push_back(i);
    for (const auto& [label, members] : classes) {
        if (members.size() < 2) {
            throw DomainError(fmt::format("stratified_pairs: class '{}' has fewer than two observations", label));
        }
    }

    SubsamplePlan plan{n, B, seed, {}};
    plan.pairs.resize(static_cast<std::size_t>(B));
    for (int j = 0; j < B; ++j) {
        Engine eng = make_engine(seed, static_cast<std::uint64_t>(j));
        auto& [first, second] = plan.pairs[j];
        for (const auto& [label, members] : classes) {
            const int nc = static_cast<int>(members.size());
            const auto perm = random_permutation(nc, eng);
            const int h = nc / 2;
            for (int i = 0; i < h; ++i) first.push_back(members[perm[i]]);
            for (int i = h; i < 2 * h; ++i) second.push_back(members[perm[i]]);
        }
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
    }
    return plan;
}

}  // namespace

SubsamplePlan complementary_pairs(int n, int B, std::uint64_t seed) {
    check_B(B);
    if (n < 2) throw DomainError("complementary_pairs: n must be >= 2");
    SubsamplePlan plan{n, B, seed, {}};
    plan.pairs.resize(static_cast<std::size_t>(B));
    const int h = n / 2;
    for (int j = 0; j < B; ++j) {
        Engine eng = make_engine(seed, static_cast<std::uint64_t>(j));
        const auto perm = random_permutation(n, eng);
        auto& [first, second] = plan.pairs[j];
        first.assign(perm.begin(), perm.begin() + h);
        second.assign(perm.begin() + h, perm.begin() + 2 * h);
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
    }
    return plan;
}

SubsamplePlan stratified_pairs(std::span<const std::string> labels, int B, std::uint64_t seed) {
    return stratified_impl(labels, B, seed);
}

SubsamplePlan stratified_pairs(std::span<const double> labels, int B, std::uint64_t seed) {
    return stratified_impl(labels, B, seed);
}

void SubsamplePlan::write(std::ostream& out) const {
    out << "# n=" << n << " B=" << B << " seed=" << seed << '\n';
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        for (int h = 0; h < 2; ++h) {
            out << (j + 1) << ' ' << (h + 1);
            for (int idx : pairs[j][h]) out << ' ' << (idx + 1);
            out << '\n';
        }
    }
}

SubsamplePlan SubsamplePlan::read(std::istream& in) {
    SubsamplePlan plan;
    std::string line;
    if (!std::getline(in, line) ||
        std::sscanf(line.c_str(), "# n=%d B=%d seed=%" SCNu64, &plan.n, &plan.B, &plan.seed) != 3) {
        throw InputError("subsample plan: missing '# n= B= seed=' header");
    }
    if (plan.n < 2 || plan.B < 1) throw InputError("subsample plan: bad header values");
    plan.pairs.resize(static_cast<std::size_t>(plan.B));
    std::vector<std::array<bool, 2>> seen(static_cast<std::size_t>(plan.B), {false, false});
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int j = 0, h = 0;
        if (!(ss >> j >> h) || j < 1 || j > plan.B || h < 1 || h > 2) {
            throw InputError(fmt::format("subsample plan line {}: bad pair/half fields", lineno));
        }
        auto& half = plan.pairs[j - 1][h - 1];
        int idx = 0;
        while (ss >> idx) {
            if (idx < 1 || idx > plan.n) throw InputError(fmt::format("subsample plan line {}: index out of range", lineno));
            half.push_back(idx - 1);
        }
        if (!ss.eof()) throw InputError(fmt::format("subsample plan line {}: non-integer index", lineno));
        std::sort(half.begin(), half.end());
        seen[j - 1][h - 1] = true;
    }
    for (const auto& s : seen) {
        if (!s[0] || !s[1]) throw InputError("subsample plan: some halves are missing");
    }
    return plan;
}

}  // namespace cpss
