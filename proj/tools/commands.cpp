#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cpss/bounds.hpp"
#include "cpss/dataset.hpp"
#include "cpss/error.hpp"
#include "cpss/lasso.hpp"
#include "cpss/lattice.hpp"
#include "cpss/resampling.hpp"
#include "cpss/simlab.hpp"
#include "cpss/stability.hpp"

namespace cpss::cli {

namespace {

std::vector<double> tau_steps(double lo, double hi, double step) {
    // Integer stepping keeps the grid free of accumulated rounding.
    const long first = std::lround(lo / step), last = std::lround(hi / step);
    if (std::abs(first * step - lo) > 1e-9 || std::abs(last * step - hi) > 1e-9) {
        throw InputError(fmt::format("tau range [{}, {}] is not on the {} grid", lo, hi, step));
    }
    if (last < first) throw InputError("tau range is empty");
    std::vector<double> out;
    for (long i = first; i <= last; ++i) out.push_back(static_cast<double>(i) * step);
    return out;
}

std::string sci3(double v) { return fmt::format("{:.2e}", v); }

double clip(double v, double p) { return std::clamp(v, 0.0, p); }

// Rows of string cells rendered either as CSV or as right-aligned columns.
void emit_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows, TableFormat format) {
    if (format == TableFormat::Csv) {
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << r[j];
            out << '\n';
        }
        return;
    }
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()), 0);
        for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
    }
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            out << (j ? "  " : "") << std::string(width[j] - r[j].size(), ' ') << r[j];
        }
        out << '\n';
    }
}

}  // namespace

void cmd_run(const RunConfig& cfg, std::ostream& out) {
    if (cfg.q.has_value() == cfg.lambda.has_value()) throw InputError("run: give exactly one of q and lambda");
    if (!(cfg.level > 0.0)) throw InputError("run: level must be positive");
    if (cfg.B < 1) throw InputError("run: B must be >= 1");
    const Family family = parse_family(cfg.family);
    const Dataset data = load_csv(cfg.input, cfg.response);
    const int p = data.p();

    std::unique_ptr<SelectionProcedure> selector;
    if (cfg.q) {
        if (*cfg.q < 1 || *cfg.q > p) throw InputError(fmt::format("run: q must lie in [1, {}]", p));
        selector = std::make_unique<LassoSelector>(*cfg.q, family);
    } else {
        selector = std::make_unique<FixedLambdaSelector>(*cfg.lambda, family);
    }

    SubsamplePlan plan;
    if (cfg.stratify) {
        const std::vector<double> labels(data.y.data(), data.y.data() + data.n());
        plan = stratified_pairs(labels, cfg.B, cfg.seed);
    } else {
        plan = complementary_pairs(data.n(), cfg.B, cfg.seed);
    }
    const FrequencyProfile profile = selection_frequencies(data, *selector, plan, cfg.threads);
    if (!cfg.profile_out.empty()) {
        std::ofstream pf(cfg.profile_out);
        if (!pf) throw InputError(fmt::format("cannot write '{}'", cfg.profile_out));
        profile.write_csv(pf);
    }

    const double q_used = cfg.q ? static_cast<double>(*cfg.q) : estimate_q(profile);
    const double theta = cfg.theta.value_or(q_used / p);
    if (!(theta > 0.0 && theta < 1.0)) {
        throw InputError(fmt::format("run: theta = {} is outside (0, 1); no variable was selected often enough", theta));
    }
    const double tau = choose_threshold(theta, cfg.B, cfg.level, p);
    const double bound = tau <= theta ? static_cast<double>(p) : p * combined_bound(theta, tau, cfg.B);
    const auto chosen = cpss_select(profile, tau);

    fmt::print(out, "# input={} response={} family={}\n", cfg.input, cfg.response, to_string(family));
    fmt::print(out, "# selector={}\n", selector->descriptor());
    fmt::print(out, "# n={} p={} B={} seed={}{}\n", data.n(), p, cfg.B, cfg.seed, cfg.stratify ? " stratified" : "");
    if (cfg.q) {
        fmt::print(out, "# q={}\n", *cfg.q);
    } else {
        fmt::print(out, "# q_hat={}\n", q_used);
    }
    fmt::print(out, "# theta={}\n# level={}\n# tau={}\n", theta, cfg.level, tau);
    fmt::print(out, "# bound={:.6g}\n# selected={}\n", bound, chosen.size());
    out << "variable,pi_hat,pi_tilde,selected\n";
    std::vector<char> is_chosen(static_cast<std::size_t>(p), 0);
    for (int k : chosen) is_chosen[k] = 1;
    for (int k = 0; k < p; ++k) {
        fmt::print(out, "{},{},{},{}\n", profile.names[k], profile.pi_hat(k), profile.pi_tilde(k), int{is_chosen[k]});
    }
}

void cmd_dtable(const DTableConfig& cfg, std::ostream& out) {
    std::vector<double> thetas = cfg.thetas;
    if (thetas.empty()) {
        for (int i = 1; i <= 10; ++i) thetas.push_back(i / 100.0);
    }
    const auto taus = tau_steps(cfg.tau_min, cfg.tau_max, 0.01);
    const TailMaximizer mode = cfg.reference ? TailMaximizer::PublishedReference : TailMaximizer::Sharp;

    std::vector<CombinedBound> bounds;
    for (double th : thetas) {
        if (!(th > 0.0 && th < 1.0)) throw InputError(fmt::format("dtable: theta {} is outside (0, 1)", th));
        bounds.emplace_back(th, cfg.B, mode);
    }
    std::vector<std::vector<std::string>> rows;
    rows.emplace_back(std::vector<std::string>{"tau"});
    for (double th : thetas) rows[0].push_back(fmt::format("{}", th));
    for (double tau : taus) {
        std::vector<std::string> row{fmt::format("{:.2f}", tau)};
        for (const auto& b : bounds) row.push_back(sci3(b(tau)));
        rows.push_back(std::move(row));
    }
    emit_table(out, rows, cfg.format);
}

void cmd_bounds_compare(const CompareConfig& cfg, std::ostream& out) {
    if (cfg.p < 1 || !(cfg.q > 0.0) || !(cfg.q < cfg.p)) throw InputError("bounds-compare: need 0 < q < p");
    const double step = 1.0 / (2 * cfg.B);
    const double lo = cfg.tau_min.value_or(0.5 + step);
    if (!(lo > 0.5)) throw InputError("bounds-compare: tau must exceed 1/2");
    const auto taus = tau_steps(lo, cfg.tau_max, step);
    const double p = cfg.p, theta = cfg.q / p;
    const CombinedBound rc(theta, cfg.B);

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"tau", "mb", "worst_case", "unimodal", "r_concave"});
    for (double tau : taus) {
        std::string uni;
        try {
            uni = fmt::format("{:.6g}", clip(unimodal_factor_C(tau, cfg.B, theta) * theta * cfg.q, p));
        } catch (const UnsupportedRegime&) {
        } catch (const DomainError&) {
        }
        rows.push_back({fmt::format("{:.4f}", tau), fmt::format("{:.6g}", clip(mb_bound(cfg.q, cfg.p, tau), p)),
                        fmt::format("{:.6g}", clip(theta * worst_case_factor(tau) * cfg.q, p)), uni,
                        fmt::format("{:.6g}", clip(p * rc(tau), p))});
    }
    emit_table(out, rows, cfg.format);
}

void cmd_simulate(const SimulateConfig& cfg, std::ostream& out) {
    if (cfg.rho.empty() || cfg.family.empty()) throw InputError("simulate: rho and family need at least one value");
    const bool grid = cfg.rho.size() * cfg.family.size() > 1;
    ScenarioResult::write_csv_header(out);
    for (const auto& fam : cfg.family) {
        for (double rho : cfg.rho) {
            ScenarioConfig sc;
            sc.family = parse_family(fam);
            sc.id = grid ? fmt::format("{}-{}-rho{}", cfg.id, to_string(sc.family), rho) : cfg.id;
            sc.n = cfg.n;
            sc.p = cfg.p;
            sc.s = cfg.s;
            sc.rho = rho;
            sc.snr = cfg.snr;
            sc.bayes_error = cfg.bayes_error;
            sc.l = cfg.level;
            sc.B = cfg.B;
            sc.seed = cfg.seed;
            sc.replications = cfg.replications;
            sc.oracle_replications = cfg.oracle_replications;
            sc.q = cfg.q;
            sc.threads = cfg.threads;
            try {
                sc.validate();
            } catch (const DomainError& e) {
                throw InputError(e.what());
            }
            run_scenario(sc).write_csv_rows(out);
        }
    }
}

void cmd_check_shape(const ShapeConfig& cfg, std::ostream& out) {
    std::ifstream in(cfg.profile);
    if (!in) throw InputError(fmt::format("cannot open '{}'", cfg.profile));
    const FrequencyProfile f = FrequencyProfile::read_csv(in);
    if (cfg.statistic != "pi_hat" && cfg.statistic != "pi_tilde") {
        throw InputError("check-shape: statistic must be pi_hat or pi_tilde");
    }
    const bool hat = cfg.statistic == "pi_hat";
    std::vector<int> vars;
    if (cfg.variables.empty()) {
        for (int k = 0; k < f.p(); ++k) vars.push_back(k);
    } else {
        for (const auto& name : cfg.variables) {
            const auto it = std::find(f.names.begin(), f.names.end(), name);
            if (it == f.names.end()) throw InputError(fmt::format("check-shape: unknown variable '{}'", name));
            vars.push_back(static_cast<int>(it - f.names.begin()));
        }
    }
    for (double r : cfg.r) {
        if (!(r < 0.0)) throw InputError("check-shape: r values must be negative");
    }
    std::vector<double> values;
    for (int k : vars) values.push_back(hat ? f.pi_hat(k) : f.pi_tilde(k));
    const int grid = hat ? 2 * f.B : f.B;
    const LatticePmf pmf = LatticePmf::empirical(grid, values);
    const ShapeVerdict v = diagnose_shape(pmf, cfg.r, ShapeTolerance{cfg.slack});

    auto yn = [](bool b) { return b ? "yes" : "no"; };
    fmt::print(out, "# statistic={} grid=1/{} values={} slack={}\n", cfg.statistic, grid, values.size(), cfg.slack);
    fmt::print(out, "# unimodal={}\n", yn(v.unimodal));
    for (const auto& [r, ok] : v.r_concave_at) fmt::print(out, "# r_concave({})={}\n", r, yn(ok));
    fmt::print(out, "# log_concave={}\n", yn(v.log_concave));
    out << "value,mass\n";
    for (int i = 0; i <= grid; ++i) fmt::print(out, "{},{}\n", static_cast<double>(i) / grid, pmf[i]);
}

}  // namespace cpss::cli
