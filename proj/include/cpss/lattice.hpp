#pragma once

#include <map>
#include <span>
#include <vector>

namespace cpss {

/// Probability mass function on the grid {0, 1/B, ..., 1}.
///
/// mass()[i] is the probability of the point i/B. Instances are immutable.
class LatticePmf {
public:
    /// Builds a pmf from B+1 non-negative masses. A total within 1e-9 of one is
    /// rescaled to sum to one exactly; anything further off is rejected.
    explicit LatticePmf(std::vector<double> mass);

    static LatticePmf point_mass(int B, int index);
    static LatticePmf uniform(int B);
    /// Binomial(B, prob) scaled onto the grid.
    static LatticePmf binomial(int B, double prob);
    /// Empirical distribution of grid-valued observations (values are snapped to i/B).
    static LatticePmf empirical(int B, std::span<const double> values);

    int B() const noexcept { return static_cast<int>(mass_.size()) - 1; }
    std::span<const double> mass() const noexcept { return mass_; }
    double operator[](int i) const { return mass_.at(static_cast<std::size_t>(i)); }

    double expectation() const noexcept;
    /// P(X >= t) for a grid point t.
    double tail(double t) const;
    /// P(X >= i/B).
    double tail_from(int i) const;

private:
    std::vector<double> mass_;
};

/// Index i such that t == i/B (within 1e-9); throws DomainError when t is off the grid.
int grid_index(double t, int B);

/// Generalised mean M_r(a, b; lambda). r may be -infinity; r = 0 is the geometric mean.
double generalized_mean(double a, double b, double lambda, double r);

/// Slack used by the shape checks. Monte Carlo pmfs are noisy, exact ones are not.
struct ShapeTolerance {
    double slack = 1e-10;
};

bool is_unimodal(const LatticePmf& f, ShapeTolerance tol = {});

/// f is r-concave (r < 0) iff its support is contiguous and f^r is convex on it.
/// Comparisons in f^r space use the slack relative to max(1, |f_i^r|).
bool is_r_concave(const LatticePmf& f, double r, ShapeTolerance tol = {});

bool is_log_concave(const LatticePmf& f, ShapeTolerance tol = {});

struct ShapeVerdict {
    bool unimodal = false;
    std::map<double, bool> r_concave_at;
    bool log_concave = false;
};

ShapeVerdict diagnose_shape(const LatticePmf& f, std::span<const double> r_values,
                            ShapeTolerance tol = {});

}  // namespace cpss
