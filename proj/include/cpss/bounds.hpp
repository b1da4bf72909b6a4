#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "cpss/lattice.hpp"

namespace cpss {

enum class BoundMethod { WorstCase, MB, Unimodal, RConcave, Combined };

/// What a bound factor multiplies.
enum class BoundBasis {
    TimesExpectedSelected,  // E|S_{n/2} ∩ L_theta|
    TimesCardLtheta,        // |L_theta| (replaced by p in practice)
};

std::string_view to_string(BoundMethod m);
std::string_view to_string(BoundBasis b);

/// How the inner one-dimensional maximisation of the r-concave tail bound is done.
///
/// Sharp maximises to high accuracy (golden section plus endpoint checks, all
/// support endpoints k). PublishedReference mirrors the coarser optimiser that
/// was used to print the standard reference tables: Brent's fmin with absolute
/// tolerance eps^(1/4), endpoints never compared, k = B omitted. It is only
/// meant for regenerating those tables; it can sit slightly below the sharp value.
enum class TailMaximizer { Sharp, PublishedReference };

struct BoundRequest {
    double theta = 0.0;
    double tau = 0.0;
    int B = 50;
    BoundMethod method = BoundMethod::Combined;
};

struct BoundValue {
    double factor = 0.0;
    std::optional<double> per_variable_prob;
    BoundMethod method = BoundMethod::Combined;
    BoundBasis basis = BoundBasis::TimesCardLtheta;
    /// True when part of the value came from a conservative fallback rather than the sharp bound.
    bool conservative = false;
};

BoundValue evaluate(const BoundRequest& req);

/// 1/(2 tau - 1); multiply by theta * E|S_{n/2} ∩ L_theta|.
double worst_case_factor(double tau);

/// (1 - theta)/(1 - 2 tau): bound on E|N^CPSS ∩ H_theta| / E|N_{n/2} ∩ H_theta|.
double worst_case_exclusion_factor(double tau, double theta);

/// q^2 / (p (2 tau - 1)).
double mb_bound(double q, int p, double tau);

/// Largest P(X >= t) over unimodal pmfs on {0, 1/B, ..., 1} with E X <= eta.
double unimodal_markov(double eta, double t, int B);

/// C(tau, B) for theta <= 1/sqrt(3). Throws UnsupportedRegime above that and
/// DomainError when tau is off the 1/(2B) grid or outside the validity window.
double unimodal_factor_C(double tau, int B, double theta);

/// Maximiser of the r-concave tail problem.
///
/// The extremal pmf is g_i = alpha (a+i)^(1/r) for i <= k with the remaining
/// mass on (k+1)/B. When conservative is set, the value is the unimodal
/// fallback and k, a and pmf are not meaningful.
struct ExtremalSolution {
    int k = -1;
    double a = 0.0;
    std::optional<LatticePmf> pmf;
    double tail = 1.0;
    bool conservative = false;
};

/// D(eta, t, B, r) for a fixed (eta, B, r) and many t.
///
/// All roots a_k of E(f_{a,k}) = eta are found in the constructor, so a solver
/// is immutable afterwards and can be shared between threads.
class RConcaveTailSolver {
public:
    RConcaveTailSolver(double eta, int B, double r, TailMaximizer mode = TailMaximizer::Sharp);

    double eta() const noexcept { return eta_; }
    int B() const noexcept { return B_; }
    double r() const noexcept { return r_; }

    /// a_k, or nullopt when eta >= k/(2B) (no f_{a,k} has mean eta).
    std::optional<double> a_k(int k) const;

    ExtremalSolution solve(double t) const;
    double value(double t) const { return solve(t).tail; }

    /// The pmf g_{a,k} on {0, ..., B}; k <= B - 1, or k == B with a == a_B.
    LatticePmf extremal_pmf(int k, double a) const;

private:
    double objective(int k, double a, int Bt) const;

    double eta_;
    int B_;
    double r_;
    TailMaximizer mode_;
    std::vector<double> a_;  // a_[k], NaN where undefined
};

ExtremalSolution r_concave_extremal(double eta, double t, int B, double r,
                                    TailMaximizer mode = TailMaximizer::Sharp);

/// D(eta, t, B, r). Equals 1 for t <= 0 or eta >= t.
double r_concave_tail_max(double eta, double t, int B, double r,
                          TailMaximizer mode = TailMaximizer::Sharp);

/// min{ D(theta^2, 2 tau - 1, B, -1/2), D(theta, tau, 2B, -1/4) }.
double combined_bound(double theta, double tau, int B, TailMaximizer mode = TailMaximizer::Sharp);

/// Evaluates combined_bound for one theta over many tau, reusing the root finding.
class CombinedBound {
public:
    CombinedBound(double theta, int B, TailMaximizer mode = TailMaximizer::Sharp);
    double operator()(double tau) const;
    /// Whether the value at tau used the conservative fallback in the winning term.
    bool conservative(double tau) const;

private:
    double theta_;
    int B_;
    RConcaveTailSolver pi_tilde_;
    RConcaveTailSolver pi_hat_;
};

/// Smallest tau on {0, 1/(2B), ..., 1} with p * combined_bound(theta, tau, B) <= l.
/// Grid points tau <= theta carry the trivial bound 1 per variable. Throws
/// InfeasibleLevel when even tau = 1 does not reach l.
double choose_threshold(double theta, int B, double l, int p);

}  // namespace cpss
