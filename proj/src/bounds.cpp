#include "cpss/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "cpss/error.hpp"
#include "cpss/numerics.hpp"

namespace cpss {

namespace {

constexpr double kCompareSlack = 1e-12;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Same default as R's optimize(): .Machine$double.eps^0.25.
const double kReferenceTol = std::pow(std::numeric_limits<double>::epsilon(), 0.25);

void require_B(int B) {
    if (B < 1) throw DomainError("B must be a positive integer");
}

// x^e for e = 1/r. The usual indices r = -1/2, -1/4 give integer exponents,
// where repeated multiplication is much cheaper than pow.
struct Power {
    explicit Power(double e) : e(e) {
        const double m = -e;
        if (m >= 1.0 && m <= 16.0 && m == std::floor(m)) int_exp = static_cast<int>(m);
    }
    double operator()(double x) const {
        if (int_exp == 0) return std::pow(x, e);
        double v = x;
        for (int j = 1; j < int_exp; ++j) v *= x;
        return 1.0 / v;
    }
    double e;
    int int_exp = 0;
};

double mean_of_power_family(double a, int k, const Power& pw, int B) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double w = pw(1.0 + i / a);
        num += i * w;
        den += w;
    }
    return num / den / B;
}

}  // namespace

std::string_view to_string(BoundMethod m) {
    switch (m) {
        case BoundMethod::WorstCase: return "worst-case";
        case BoundMethod::MB: return "mb";
        case BoundMethod::Unimodal: return "unimodal";
        case BoundMethod::RConcave: return "r-concave";
        case BoundMethod::Combined: return "combined";
    }
    return "?";
}

std::string_view to_string(BoundBasis b) {
    switch (b) {
        case BoundBasis::TimesExpectedSelected: return "times-expected-selected";
        case BoundBasis::TimesCardLtheta: return "times-card-L-theta";
    }
    return "?";
}

double worst_case_factor(double tau) {
    if (!(tau > 0.5 && tau <= 1.0)) throw DomainError("worst_case_factor: tau must lie in (1/2, 1]");
    return 1.0 / (2.0 * tau - 1.0);
}

double worst_case_exclusion_factor(double tau, double theta) {
    if (!(tau >= 0.0 && tau < 0.5)) throw DomainError("worst_case_exclusion_factor: tau must lie in [0, 1/2)");
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("worst_case_exclusion_factor: theta must lie in (0, 1)");
    return (1.0 - theta) / (1.0 - 2.0 * tau);
}

double mb_bound(double q, int p, double tau) {
    if (p < 1) throw DomainError("mb_bound: p must be positive");
    if (!(q >= 0.0 && q <= p)) throw DomainError("mb_bound: q must lie in [0, p]");
    return q * q / p * worst_case_factor(tau);
}

double unimodal_markov(double eta, double t, int B) {
    require_B(B);
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("unimodal_markov: eta must lie in (0, 1)");
    const int Bt = grid_index(t, B);
    t = static_cast<double>(Bt) / B;
    if (t <= eta + kCompareSlack) return 1.0;

    const double b = 1.0 / B;
    const auto low = [&] { return (2.0 * eta - t + b) / (t + b); };
    const auto high = [&] { return 2.0 * eta * (1.0 - t + b) / (1.0 + b); };
    double v;
    if (eta <= 1.0 / 3.0) {
        if (t <= std::min(1.5 * eta + 0.5 * b, 2.0 * eta) + kCompareSlack) {
            v = low();
        } else if (t <= 0.5 + kCompareSlack) {
            v = eta / (2.0 * t - b);
        } else {
            v = high();
        }
    } else {
        const double d = -2.0 * (eta - 0.5) * (6.0 * eta + 1.0) + (2.0 - 4.0 * eta) * b +
                         (4.0 * eta - 1.0) * (4.0 * eta - 1.0) * b * b;
        if (d > 0.0) {
            const double c = 0.5 + (1.0 + b - std::sqrt(d)) / (4.0 * eta);
            v = t <= c + kCompareSlack ? low() : high();
        } else {
            v = low();
        }
    }
    return std::clamp(v, 0.0, 1.0);
}

double unimodal_factor_C(double tau, int B, double theta) {
    require_B(B);
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("unimodal_factor_C: theta must lie in (0, 1)");
    if (theta > 1.0 / std::sqrt(3.0)) {
        throw UnsupportedRegime("unimodal_factor_C: no closed form implemented for theta > 1/sqrt(3)");
    }
    const int i = grid_index(tau, 2 * B);
    tau = static_cast<double>(i) / (2 * B);
    const double lower = std::min(0.5 + theta * theta, 0.5 + 0.5 / B + 0.75 * theta * theta);
    if (!(tau > lower + kCompareSlack)) {
        throw DomainError(fmt::format("unimodal_factor_C: tau={} is outside the validity window ({:.6g}, 1]", tau, lower));
    }
    if (tau <= 0.75 + kCompareSlack) return 1.0 / (2.0 * (2.0 * tau - 1.0 - 0.5 / B));
    return 4.0 * (1.0 - tau + 0.5 / B) / (1.0 + 1.0 / B);
}

// ---------------------------------------------------------------------------

RConcaveTailSolver::RConcaveTailSolver(double eta, int B, double r, TailMaximizer mode)
    : eta_(eta), B_(B), r_(r), mode_(mode), a_(static_cast<std::size_t>(B) + 2, kNaN) {
    require_B(B);
    if (!(r < 0.0) || !std::isfinite(r)) throw DomainError("r-concave bound: r must be a finite negative number");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("r-concave bound: eta must be positive");
    const Power pw(1.0 / r);
    for (int k = 1; k <= B; ++k) {
        // E(f_{a,k}) increases from 0 to k/(2B) as a runs over (0, inf).
        if (eta * 2.0 * B >= k) continue;
        a_[k] = numerics::bisect_increasing([&](double a) { return mean_of_power_family(a, k, pw, B) - eta; }, 1.0);
    }
}

std::optional<double> RConcaveTailSolver::a_k(int k) const {
    if (k < 1 || k > B_ || std::isnan(a_[k])) return std::nullopt;
    return a_[k];
}

double RConcaveTailSolver::objective(int k, double a, int Bt) const {
    const Power pw(1.0 / r_);
    double below = 0.0, den = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double w = pw(1.0 + i / a);
        if (i < Bt) below += w;
        den += (k + 1 - i) * w;
    }
    return 1.0 - (k + 1 - B_ * eta_) * below / den;
}

LatticePmf RConcaveTailSolver::extremal_pmf(int k, double a) const {
    if (k < 1 || k > B_) throw DomainError("extremal_pmf: k out of range");
    // The leftover mass at k+1 is 1 minus a sum close to 1; extended precision keeps its relative error small.
    const long double e = 1.0L / r_;
    std::vector<long double> u(static_cast<std::size_t>(k) + 1);
    long double den = 0.0L, total = 0.0L;
    for (int i = 0; i <= k; ++i) {
        u[i] = std::pow(1.0L + static_cast<long double>(i) / a, e);
        den += (k + 1 - i) * u[i];
    }
    const long double alpha = (k + 1 - static_cast<long double>(B_) * eta_) / den;
    for (int i = 0; i <= k; ++i) total += alpha * u[i];
    std::vector<double> mass(static_cast<std::size_t>(B_) + 1, 0.0);
    for (int i = 0; i <= k; ++i) mass[i] = static_cast<double>(k < B_ ? alpha * u[i] : alpha * u[i] / total);
    if (k < B_) mass[k + 1] = static_cast<double>(std::max(0.0L, 1.0L - total));
    return LatticePmf(std::move(mass));
}

ExtremalSolution RConcaveTailSolver::solve(double t) const {
    ExtremalSolution sol;
    if (t <= 0.0) return sol;
    const int Bt = grid_index(t, B_);
    if (Bt == 0) return sol;
    t = static_cast<double>(Bt) / B_;
    if (eta_ >= t) return sol;

    if (t <= 2.0 * eta_) {
        sol.tail = std::min(1.0, unimodal_markov(eta_, t, B_));
        sol.conservative = true;
        return sol;
    }

    // Here eta < Bt/(2B), so every a_k with k >= Bt exists.
    sol.tail = -1.0;
    const auto consider = [&](int k, double a) {
        // k at a_{k+1} is the same pmf as k+1 at a_{k+1}; ties go to the larger k.
        const double v = objective(k, a, Bt);
        if (v >= sol.tail - 1e-12) {
            sol.tail = v;
            sol.k = k;
            sol.a = a;
        }
    };

    if (mode_ == TailMaximizer::Sharp) {
        for (int k = Bt; k < B_; ++k) {
            const double lo = a_[k + 1], hi = a_[k];
            const auto best = numerics::golden_section_maximize([&](double a) { return objective(k, a, Bt); }, lo,
                                                                hi, 1e-10 * hi);
            consider(k, best.x);
        }
        consider(B_, a_[B_]);
    } else {
        for (int k = Bt; k < B_; ++k) {
            const double x = numerics::brent_fmin([&](double a) { return -objective(k, a, Bt); }, a_[k + 1], a_[k],
                                                  kReferenceTol);
            consider(k, x);
        }
        if (Bt == B_) consider(B_, a_[B_]);
    }

    sol.tail = std::clamp(sol.tail, 0.0, 1.0);
    sol.pmf = extremal_pmf(sol.k, sol.a);
    return sol;
}

ExtremalSolution r_concave_extremal(double eta, double t, int B, double r, TailMaximizer mode) {
    return RConcaveTailSolver(eta, B, r, mode).solve(t);
}

double r_concave_tail_max(double eta, double t, int B, double r, TailMaximizer mode) {
    if (!(r < 0.0)) throw DomainError("r-concave bound: r must be negative");
    if (t <= 0.0 || eta >= t) {
        if (!(eta > 0.0)) throw DomainError("r-concave bound: eta must be positive");
        return 1.0;
    }
    return r_concave_extremal(eta, t, B, r, mode).tail;
}

// ---------------------------------------------------------------------------

CombinedBound::CombinedBound(double theta, int B, TailMaximizer mode)
    : theta_(theta),
      B_(B),
      pi_tilde_(theta * theta, B, -0.5, mode),
      pi_hat_(theta, 2 * B, -0.25, mode) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("combined bound: theta must lie in (0, 1)");
}

double CombinedBound::operator()(double tau) const {
    const int i = grid_index(tau, 2 * B_);
    if (!(static_cast<double>(i) / (2 * B_) > theta_)) {
        throw DomainError(fmt::format("combined bound: tau={} must exceed theta={}", tau, theta_));
    }
    const double t_tilde = static_cast<double>(i - B_) / B_;  // 2 tau - 1
    const double a = t_tilde <= 0.0 ? 1.0 : pi_tilde_.value(t_tilde);
    const double b = pi_hat_.value(static_cast<double>(i) / (2 * B_));
    return std::min(a, b);
}

bool CombinedBound::conservative(double tau) const {
    const int i = grid_index(tau, 2 * B_);
    const double t_tilde = static_cast<double>(i - B_) / B_;
    const auto a = t_tilde <= 0.0 ? ExtremalSolution{} : pi_tilde_.solve(t_tilde);
    const auto b = pi_hat_.solve(static_cast<double>(i) / (2 * B_));
    return a.tail < b.tail ? a.conservative : b.conservative;
}

double combined_bound(double theta, double tau, int B, TailMaximizer mode) {
    return CombinedBound(theta, B, mode)(tau);
}

double choose_threshold(double theta, int B, double l, int p) {
    require_B(B);
    if (!(l > 0.0)) throw DomainError("choose_threshold: level l must be positive");
    if (p < 1) throw DomainError("choose_threshold: p must be positive");
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("choose_threshold: theta must lie in (0, 1)");

    // Below theta only the trivial per-variable bound 1 is available.
    if (static_cast<double>(p) <= l) return 0.0;

    const CombinedBound bound(theta, B);
    double smallest = 1.0;
    for (int i = 0; i <= 2 * B; ++i) {
        const double tau = static_cast<double>(i) / (2 * B);
        if (tau <= theta) continue;
        const double v = bound(tau);
        smallest = std::min(smallest, v);
        if (p * v <= l) return tau;
    }
    throw InfeasibleLevel(fmt::format("no threshold achieves level l={}; the smallest achievable bound is {:.6g}",
                                      l, p * smallest),
                          p * smallest);
}

BoundValue evaluate(const BoundRequest& req) {
    const double theta = req.theta, tau = req.tau;
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("evaluate: theta must lie in (0, 1)");
    BoundValue v;
    v.method = req.method;
    switch (req.method) {
        case BoundMethod::WorstCase:
            v.factor = theta * worst_case_factor(tau);
            v.basis = BoundBasis::TimesExpectedSelected;
            v.per_variable_prob = std::min(1.0, theta * theta * worst_case_factor(tau));
            break;
        case BoundMethod::MB:
            v.factor = theta * theta * worst_case_factor(tau);
            v.basis = BoundBasis::TimesCardLtheta;
            break;
        case BoundMethod::Unimodal: {
            const double C = unimodal_factor_C(tau, req.B, theta);
            v.factor = C * theta;
            v.basis = BoundBasis::TimesExpectedSelected;
            v.per_variable_prob = std::min(1.0, C * theta * theta);
            break;
        }
        case BoundMethod::RConcave: {
            const int i = grid_index(tau, 2 * req.B);
            const double t = static_cast<double>(i - req.B) / req.B;
            const auto sol = t <= 0.0 ? ExtremalSolution{} : r_concave_extremal(theta * theta, t, req.B, -0.5);
            v.factor = sol.tail;
            v.basis = BoundBasis::TimesCardLtheta;
            v.per_variable_prob = sol.tail;
            v.conservative = sol.conservative;
            break;
        }
        case BoundMethod::Combined: {
            const CombinedBound cb(theta, req.B);
            v.factor = cb(tau);
            v.basis = BoundBasis::TimesCardLtheta;
            v.per_variable_prob = v.factor;
            v.conservative = cb.conservative(tau);
            break;
        }
    }
    return v;
}

}  // namespace cpss
