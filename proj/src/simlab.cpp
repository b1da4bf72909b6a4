#include "cpss/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "cpss/bounds.hpp"
#include "cpss/error.hpp"
#include "cpss/resampling.hpp"

namespace cpss {

namespace {

constexpr std::uint64_t kBetaStream = 0xbe7a;
constexpr std::uint64_t kGammaStream = 0x9a77a;
constexpr std::uint64_t kPlanStream = 0x91a7;

int thread_count(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

std::vector<double> equally_spaced(double a, double b, int m) {
    if (m == 1) return {std::abs(a) > std::abs(b) ? a : b};
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) v[i] = a + (b - a) * i / (m - 1);
    return v;
}

int count_in(const std::vector<int>& selected, const std::vector<char>& member) {
    int c = 0;
    for (int k : selected) c += member[k];
    return c;
}

std::vector<char> membership(const std::vector<int>& set, int p) {
    std::vector<char> m(static_cast<std::size_t>(p), 0);
    for (int k : set) m[k] = 1;
    return m;
}

McMean summarize(const std::vector<double>& values) {
    McMean out;
    if (values.empty()) return out;
    const double R = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / R;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.se = std::sqrt(ss / (R - 1.0) / R);
    }
    return out;
}

}  // namespace

int ScenarioConfig::effective_q() const {
    if (q) return *q;
    return static_cast<int>(std::floor(std::sqrt(0.8 * l * p)));
}

void ScenarioConfig::validate() const {
    if (n < 4) throw InputError("scenario: n must be >= 4");
    if (p < 2) throw InputError("scenario: p must be >= 2");
    if (s < 2 || s % 2 != 0 || s > p) throw InputError("scenario: s must be even with 2 <= s <= p");
    if (!(rho >= 0.0 && rho < 1.0)) throw InputError("scenario: rho must lie in [0, 1)");
    if (family == Family::Gaussian && !(snr > 0.0)) throw InputError("scenario: snr must be positive");
    if (family == Family::Binomial && !(bayes_error > 0.0 && bayes_error < 0.5)) {
        throw InputError("scenario: bayes_error must lie in (0, 0.5)");
    }
    if (!(l > 0.0)) throw InputError("scenario: level l must be positive");
    if (B < 1) throw InputError("scenario: B must be >= 1");
    if (replications < 1 || oracle_replications < 1) throw InputError("scenario: replication counts must be >= 1");
    const int qq = effective_q();
    if (qq < 1 || qq > p) throw InputError(fmt::format("scenario: q={} must lie in [1, p]", qq));
}

Eigen::MatrixXd toeplitz_sigma(int p, double rho) {
    if (p < 1) throw DomainError("toeplitz_sigma: p must be positive");
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("toeplitz_sigma: rho must lie in [0, 1)");
    Eigen::MatrixXd S(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            const int d = std::abs(i - j);
            const int circ = std::min(d, p - d);
            S(i, j) = circ == 0 ? 1.0 : std::pow(rho, circ);
        }
    }
    return S;
}

Signal make_beta(int p, int s, std::uint64_t seed) {
    if (s < 2 || s % 2 != 0) throw DomainError("make_beta: s must be even and >= 2");
    if (s > p) throw DomainError("make_beta: s must not exceed p");
    const double ratio = std::pow(p + 1.0, 1.0 / s);
    std::vector<char> used(static_cast<std::size_t>(p) + 1, 0);  // one-based
    Signal sig;
    for (int j = 0; j < s; ++j) {
        int idx = static_cast<int>(std::lround(std::pow(ratio, j)));
        idx = std::clamp(idx, 1, p);
        while (idx <= p && used[idx]) ++idx;
        if (idx > p) {
            idx = 1;
            while (used[idx]) ++idx;
        }
        used[idx] = 1;
        sig.support.push_back(idx - 1);
    }
    std::sort(sig.support.begin(), sig.support.end());

    auto values = equally_spaced(-1.0, -0.5, s / 2);
    const auto pos = equally_spaced(0.5, 1.0, s / 2);
    values.insert(values.end(), pos.begin(), pos.end());
    Engine eng = make_engine(seed, kBetaStream);
    const auto perm = random_permutation(s, eng);
    sig.beta = Eigen::VectorXd::Zero(p);
    for (int i = 0; i < s; ++i) sig.beta(sig.support[i]) = values[perm[i]];
    return sig;
}

GaussianDesign::GaussianDesign(const Eigen::MatrixXd& sigma) : p_(static_cast<int>(sigma.rows())) {
    identity_ = sigma.isIdentity(0.0);
    if (!identity_) {
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) throw NumericFailure("covariance matrix is not positive definite");
        L_ = llt.matrixL();
    }
}

Eigen::MatrixXd GaussianDesign::draw(int n, Engine& eng) const {
    boost::random::normal_distribution<double> normal;
    Eigen::MatrixXd G(n, p_);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < p_; ++k) G(i, k) = normal(eng);
    }
    if (identity_) return G;
    return G * L_.transpose();
}

Dataset gen_linear(int n, double snr, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                   const GaussianDesign& design, Engine& eng) {
    const double signal_var = beta.dot(sigma * beta);
    if (!(signal_var > 0.0)) throw DomainError("gen_linear: beta' Sigma beta must be positive for a finite SNR");
    if (!(snr > 0.0)) throw DomainError("gen_linear: snr must be positive");
    const double noise_sd = std::sqrt(signal_var) / snr;
    Dataset d;
    d.X = design.draw(n, eng);
    boost::random::normal_distribution<double> normal;
    d.y = d.X * beta;
    for (int i = 0; i < n; ++i) d.y(i) += noise_sd * normal(eng);
    d.names = default_names(design.p());
    return d;
}

Dataset gen_linear(const ScenarioConfig& cfg, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                   std::uint64_t seed) {
    const GaussianDesign design(sigma);
    Engine eng = make_engine(seed);
    return gen_linear(cfg.n, cfg.snr, beta, sigma, design, eng);
}

double bayes_error_mc(double gamma, double signal_var, std::uint64_t seed, int draws) {
    if (draws < 1) throw DomainError("bayes_error_mc: draws must be positive");
    Engine eng = make_engine(seed, kGammaStream);
    boost::random::normal_distribution<double> normal(0.0, std::sqrt(signal_var));
    double total = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double z = std::abs(normal(eng));
        total += 1.0 / (1.0 + std::exp(gamma * z));
    }
    return total / draws;
}

double calibrate_gamma(double target, double signal_var, std::uint64_t seed, int draws) {
    if (!(target > 0.0 && target < 0.5)) throw DomainError("calibrate_gamma: target must lie in (0, 0.5)");
    if (!(signal_var > 0.0)) throw DomainError("calibrate_gamma: signal variance must be positive");
    if (target * draws < 1.0) {
        throw NumericFailure(fmt::format("calibrate_gamma: Bayes error {} is below the Monte Carlo floor 1/{}", target, draws));
    }
    // Common random numbers: the same draws for every gamma, so the error is monotone in gamma.
    Engine eng = make_engine(seed, kGammaStream);
    boost::random::normal_distribution<double> normal(0.0, std::sqrt(signal_var));
    std::vector<double> z(static_cast<std::size_t>(draws));
    for (double& v : z) v = std::abs(normal(eng));
    const auto err = [&](double gamma) {
        double total = 0.0;
        for (double v : z) total += 1.0 / (1.0 + std::exp(gamma * v));
        return total / draws;
    };
    double lo = 0.0, hi = 1.0;
    while (err(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8) throw NumericFailure(fmt::format("calibrate_gamma: Bayes error {} is not attainable", target));
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (err(mid) > target ? lo : hi) = mid;
    }
    const double gamma = 0.5 * (lo + hi);
    if (std::abs(err(gamma) - target) > 0.002) {
        throw NumericFailure(fmt::format("calibrate_gamma: could not reach Bayes error {} within 0.002", target));
    }
    return gamma;
}

Dataset gen_logistic(int n, double gamma, const Eigen::VectorXd& beta, const GaussianDesign& design, Engine& eng) {
    Dataset d;
    d.X = design.draw(n, eng);
    const Eigen::VectorXd eta = gamma * (d.X * beta);
    boost::random::uniform_01<double> unif;
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-eta(i)));
        d.y(i) = unif(eng) < prob ? 1.0 : 0.0;
    }
    d.names = default_names(design.p());
    return d;
}

Dataset gen_logistic(const ScenarioConfig& cfg, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                     std::uint64_t seed) {
    const double gamma = calibrate_gamma(cfg.bayes_error, beta.dot(sigma * beta), seed);
    const GaussianDesign design(sigma);
    Engine eng = make_engine(seed);
    return gen_logistic(cfg.n, gamma, beta, design, eng);
}

ScenarioGenerator::ScenarioGenerator(const ScenarioConfig& cfg)
    : cfg_(cfg),
      signal_(make_beta(cfg.p, cfg.s, cfg.seed)),
      sigma_(toeplitz_sigma(cfg.p, cfg.rho)),
      design_(sigma_) {
    cfg_.validate();
    if (cfg_.family == Family::Binomial) {
        gamma_ = calibrate_gamma(cfg_.bayes_error, signal_.beta.dot(sigma_ * signal_.beta), cfg_.seed);
    }
}

Dataset ScenarioGenerator::dataset(int n, Purpose purpose, std::uint64_t index) const {
    Engine eng = make_engine(mix_seed(cfg_.seed, static_cast<std::uint64_t>(purpose)), index);
    if (cfg_.family == Family::Gaussian) return gen_linear(n, cfg_.snr, signal_.beta, sigma_, design_, eng);
    return gen_logistic(n, gamma_, signal_.beta, design_, eng);
}

double OracleTable::expected_low_selected() const {
    double s = 0.0;
    for (int k : L_theta) s += sel_prob[k];
    return s;
}

OracleTable estimate_selection_probs(const ScenarioGenerator& gen, const SelectionProcedure& proc, int replications) {
    if (replications < 1) throw DomainError("estimate_selection_probs: replications must be >= 1");
    const auto& cfg = gen.config();
    const int p = cfg.p;
    std::vector<long long> counts(static_cast<std::size_t>(p), 0);
    const int half = cfg.n / 2;

#ifdef _OPENMP
#pragma omp parallel num_threads(thread_count(cfg.threads))
#endif
    {
        std::vector<long long> local(static_cast<std::size_t>(p), 0);
#ifdef _OPENMP
#pragma omp for schedule(dynamic)
#endif
        for (int r = 0; r < replications; ++r) {
            const Dataset d = gen.dataset(half, ScenarioGenerator::Purpose::Oracle, static_cast<std::uint64_t>(r));
            for (int k : proc.select(d)) ++local[k];
        }
#ifdef _OPENMP
#pragma omp critical(cpss_oracle_counts)
#endif
        for (int k = 0; k < p; ++k) counts[k] += local[k];
    }

    OracleTable t;
    t.replications_used = replications;
    t.theta = cfg.theta();
    t.sel_prob.resize(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) {
        t.sel_prob[k] = static_cast<double>(counts[k]) / replications;
        if (t.sel_prob[k] <= t.theta) t.L_theta.push_back(k);
    }
    return t;
}

OracleTable estimate_selection_probs(const ScenarioConfig& cfg, const SelectionProcedure& proc, int replications) {
    return estimate_selection_probs(ScenarioGenerator(cfg), proc, replications);
}

std::vector<FrequencyProfile> simulate_profiles(const ScenarioGenerator& gen, const SelectionProcedure& proc,
                                                int replications, ScenarioGenerator::Purpose purpose) {
    const auto& cfg = gen.config();
    std::vector<FrequencyProfile> out(static_cast<std::size_t>(replications));
    const std::uint64_t plan_seed = mix_seed(cfg.seed, kPlanStream + static_cast<std::uint64_t>(purpose));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(cfg.threads))
#endif
    for (int r = 0; r < replications; ++r) {
        const Dataset d = gen.dataset(cfg.n, purpose, static_cast<std::uint64_t>(r));
        const auto plan = complementary_pairs(cfg.n, cfg.B, mix_seed(plan_seed, static_cast<std::uint64_t>(r)));
        out[r] = selection_frequencies(d, proc, plan, 1);
    }
    return out;
}

McMean mean_selected_in(const std::vector<FrequencyProfile>& profiles, const std::vector<int>& set, double tau) {
    std::vector<double> counts;
    counts.reserve(profiles.size());
    for (const auto& prof : profiles) {
        const auto member = membership(set, prof.p());
        counts.push_back(count_in(cpss_select(prof, tau), member));
    }
    return summarize(counts);
}

double tau_star_from_profiles(const std::vector<FrequencyProfile>& profiles, const std::vector<int>& L_theta,
                              double l) {
    if (profiles.empty()) throw DomainError("tau_star: no profiles");
    const int B = profiles.front().B;
    double last = 0.0;
    for (int i = 0; i <= 2 * B; ++i) {
        const double tau = static_cast<double>(i) / (2 * B);
        last = mean_selected_in(profiles, L_theta, tau).mean;
        if (last <= l) return tau;
    }
    throw InfeasibleLevel(fmt::format("tau*: level {} not reached even at tau=1 (mean {:.4g})", l, last), last);
}

double oracle_tau_star(const ScenarioConfig& cfg, const SelectionProcedure& proc, const OracleTable& oracle,
                       int replications) {
    const ScenarioGenerator gen(cfg);
    const auto profiles = simulate_profiles(gen, proc, replications, ScenarioGenerator::Purpose::TauStar);
    return tau_star_from_profiles(profiles, oracle.L_theta, cfg.l);
}

LambdaStar oracle_lambda_star(const ScenarioGenerator& gen, const OracleTable& oracle, int replications) {
    const auto& cfg = gen.config();
    const int n_grid = 200;
    const Dataset pilot = gen.dataset(cfg.n, ScenarioGenerator::Purpose::LassoOracle, 0);
    const double top = 2.0 * lambda_max(pilot.X, pilot.y, cfg.family);
    LassoOptions opts;
    opts.n_lambda = n_grid;
    opts.lambda_min_ratio = 1e-3;
    const auto grid = default_lambda_grid(top, opts);

    const auto low_member = membership(oracle.L_theta, cfg.p);
    const auto sig_member = membership(gen.signal().support, cfg.p);
    // Once a path selects this many low-probability variables it cannot matter
    // where the mean crosses l; later grid points reuse the last counts.
    const int cap = static_cast<int>(std::ceil(10.0 * (cfg.l + 1.0)));
    std::vector<std::vector<int>> low(static_cast<std::size_t>(replications)), sig(low.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(cfg.threads))
#endif
    for (int r = 0; r < replications; ++r) {
        const Dataset d = gen.dataset(cfg.n, ScenarioGenerator::Purpose::LassoOracle, static_cast<std::uint64_t>(r));
        std::vector<int> lo, sg;
        const auto path = fit_path(d.X, d.y, cfg.family, grid, LassoOptions{}, [&](const LassoFit& f) {
            return count_in(f.active_set, low_member) > cap;
        });
        for (const auto& f : path) {
            lo.push_back(count_in(f.active_set, low_member));
            sg.push_back(count_in(f.active_set, sig_member));
        }
        while (lo.size() < grid.size()) {
            lo.push_back(lo.back());
            sg.push_back(sg.back());
        }
        low[r] = std::move(lo);
        sig[r] = std::move(sg);
    }

    LambdaStar out;
    int best = -1;
    for (int j = 0; j < n_grid; ++j) {
        double s = 0.0;
        for (int r = 0; r < replications; ++r) s += low[r][j];
        if (s / replications > cfg.l) break;
        best = j;
    }
    if (best < 0) throw InfeasibleLevel("lambda*: level not reached even at the largest lambda", 0.0);
    std::vector<double> lv, sv;
    for (int r = 0; r < replications; ++r) {
        lv.push_back(low[r][best]);
        sv.push_back(sig[r][best]);
    }
    out.lambda = grid[best];
    out.low_selected = summarize(lv);
    out.signal_selected = summarize(sv);
    return out;
}

double oracle_lambda_star(const ScenarioConfig& cfg, const OracleTable& oracle, int replications) {
    return oracle_lambda_star(ScenarioGenerator(cfg), oracle, replications).lambda;
}

void ScenarioResult::write_csv_header(std::ostream& out) {
    out << "scenario_id,method,ratio,realized_control,control_se,level,threshold\n";
}

void ScenarioResult::write_csv_rows(std::ostream& out) const {
    for (const auto& r : rows) {
        out << fmt::format("{},{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g}\n", r.scenario_id, r.method, r.ratio,
                           r.realized_control, r.control_se, r.level, r.threshold);
    }
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const ScenarioGenerator gen(cfg);
    const int q = cfg.effective_q();
    const LassoSelector proc(q, cfg.family);

    const OracleTable oracle = estimate_selection_probs(gen, proc, cfg.oracle_replications);
    const auto profiles = simulate_profiles(gen, proc, cfg.replications);

    ScenarioResult res;
    res.scenario_id = cfg.id;
    res.q = q;
    res.theta = cfg.theta();
    res.L_theta_size = static_cast<int>(oracle.L_theta.size());
    res.tau_star = tau_star_from_profiles(profiles, oracle.L_theta, cfg.l);
    res.tau_tilde = choose_threshold(res.theta, cfg.B, cfg.l, cfg.p);
    const LambdaStar lstar = oracle_lambda_star(gen, oracle, cfg.replications);
    res.lambda_star = lstar.lambda;

    const auto& S = gen.signal().support;
    const double denom = mean_selected_in(profiles, S, res.tau_star).mean;
    const auto ratio = [&](double v) { return denom > 0.0 ? v / denom : std::numeric_limits<double>::quiet_NaN(); };
    const auto cpss_row = [&](const std::string& method, double tau) {
        const auto ctrl = mean_selected_in(profiles, oracle.L_theta, tau);
        return ScenarioRow{cfg.id, method, ratio(mean_selected_in(profiles, S, tau).mean), ctrl.mean, ctrl.se, cfg.l,
                           tau};
    };
    res.rows.push_back(cpss_row("oracle_cpss", res.tau_star));
    res.rows.push_back(cpss_row("worst_case", 0.9));
    res.rows.push_back(cpss_row("r_concave", res.tau_tilde));
    res.rows.push_back(ScenarioRow{cfg.id, "oracle_lasso", ratio(lstar.signal_selected.mean), lstar.low_selected.mean,
                                   lstar.low_selected.se, cfg.l, lstar.lambda});
    return res;
}

}  // namespace cpss
