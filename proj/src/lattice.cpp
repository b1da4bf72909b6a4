#include "cpss/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cpss/error.hpp"

namespace cpss {

namespace {

constexpr double kNormalizationSlack = 1e-9;
constexpr double kGridSlack = 1e-9;

// Support of f as [first, last]; returns false when f has gaps inside its support.
bool contiguous_support(std::span<const double> m, int& first, int& last) {
    first = -1;
    last = -1;
    for (int i = 0; i < static_cast<int>(m.size()); ++i) {
        if (m[i] > 0.0) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) return false;
    for (int i = first; i <= last; ++i) {
        if (m[i] <= 0.0) return false;
    }
    return true;
}

}  // namespace

LatticePmf::LatticePmf(std::vector<double> mass) : mass_(std::move(mass)) {
    if (mass_.size() < 2) {
        throw DomainError("LatticePmf needs B >= 1 (at least two grid points)");
    }
    double total = 0.0;
    for (double v : mass_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DomainError("LatticePmf masses must be finite and non-negative");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > kNormalizationSlack) {
        throw DomainError("LatticePmf masses sum to " + std::to_string(total) + ", not 1");
    }
    for (double& v : mass_) v /= total;
}

LatticePmf LatticePmf::point_mass(int B, int index) {
    if (B < 1 || index < 0 || index > B) throw DomainError("point_mass: index outside grid");
    std::vector<double> m(static_cast<std::size_t>(B) + 1, 0.0);
    m[static_cast<std::size_t>(index)] = 1.0;
    return LatticePmf(std::move(m));
}

LatticePmf LatticePmf::uniform(int B) {
    if (B < 1) throw DomainError("uniform: B must be >= 1");
    return LatticePmf(std::vector<double>(static_cast<std::size_t>(B) + 1, 1.0 / (B + 1)));
}

LatticePmf LatticePmf::binomial(int B, double prob) {
    if (B < 1 || !(prob >= 0.0 && prob <= 1.0)) throw DomainError("binomial: bad parameters");
    std::vector<double> m(static_cast<std::size_t>(B) + 1);
    for (int i = 0; i <= B; ++i) {
        const double log_choose = std::lgamma(B + 1.0) - std::lgamma(i + 1.0) - std::lgamma(B - i + 1.0);
        if (prob == 0.0) {
            m[i] = i == 0 ? 1.0 : 0.0;
        } else if (prob == 1.0) {
            m[i] = i == B ? 1.0 : 0.0;
        } else {
            m[i] = std::exp(log_choose + i * std::log(prob) + (B - i) * std::log1p(-prob));
        }
    }
    const double total = std::accumulate(m.begin(), m.end(), 0.0);
    for (double& v : m) v /= total;
    return LatticePmf(std::move(m));
}

LatticePmf LatticePmf::empirical(int B, std::span<const double> values) {
    if (B < 1) throw DomainError("empirical: B must be >= 1");
    if (values.empty()) throw DomainError("empirical: no observations");
    std::vector<double> m(static_cast<std::size_t>(B) + 1, 0.0);
    for (double v : values) m[static_cast<std::size_t>(grid_index(v, B))] += 1.0;
    for (double& v : m) v /= static_cast<double>(values.size());
    return LatticePmf(std::move(m));
}

double LatticePmf::expectation() const noexcept {
    double e = 0.0;
    for (std::size_t i = 1; i < mass_.size(); ++i) e += static_cast<double>(i) * mass_[i];
    return e / B();
}

double LatticePmf::tail(double t) const { return tail_from(grid_index(t, B())); }

double LatticePmf::tail_from(int i) const {
    if (i <= 0) return 1.0;
    double s = 0.0;
    for (std::size_t j = static_cast<std::size_t>(i); j < mass_.size(); ++j) s += mass_[j];
    return std::min(s, 1.0);
}

int grid_index(double t, int B) {
    if (B < 1) throw DomainError("grid denominator must be >= 1");
    if (!std::isfinite(t) || t < -kGridSlack || t > 1.0 + kGridSlack) {
        throw DomainError("value " + std::to_string(t) + " is outside [0, 1]");
    }
    const double scaled = t * B;
    const double nearest = std::round(scaled);
    if (std::abs(scaled - nearest) > kGridSlack * std::max(1.0, static_cast<double>(B))) {
        throw DomainError("value " + std::to_string(t) + " is not on the grid {0, 1/" + std::to_string(B) +
                          ", ..., 1}");
    }
    return static_cast<int>(nearest);
}

double generalized_mean(double a, double b, double lambda, double r) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("generalized_mean: lambda must lie in (0, 1)");
    if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("generalized_mean: a and b must be non-negative");
    if (std::isnan(r) || r == std::numeric_limits<double>::infinity()) {
        throw DomainError("generalized_mean: r must lie in [-inf, inf)");
    }
    if (r == -std::numeric_limits<double>::infinity()) return std::min(a, b);
    if (r == 0.0) return std::pow(a, 1.0 - lambda) * std::pow(b, lambda);
    if (r < 0.0 && (a == 0.0 || b == 0.0)) return 0.0;
    return std::pow((1.0 - lambda) * std::pow(a, r) + lambda * std::pow(b, r), 1.0 / r);
}

bool is_unimodal(const LatticePmf& f, ShapeTolerance tol) {
    const auto m = f.mass();
    const std::size_t n = m.size();
    std::vector<double> prefix_max(n), suffix_max(n);
    prefix_max[0] = m[0];
    for (std::size_t i = 1; i < n; ++i) prefix_max[i] = std::max(prefix_max[i - 1], m[i]);
    suffix_max[n - 1] = m[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) suffix_max[i] = std::max(suffix_max[i + 1], m[i]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (m[i] < std::min(prefix_max[i - 1], suffix_max[i + 1]) - tol.slack) return false;
    }
    return true;
}

bool is_r_concave(const LatticePmf& f, double r, ShapeTolerance tol) {
    if (!(r < 0.0)) throw DomainError("is_r_concave: r must be negative");
    const auto m = f.mass();
    int first = 0, last = 0;
    if (!contiguous_support(m, first, last)) return false;
    if (r == -std::numeric_limits<double>::infinity()) return is_unimodal(f, tol);
    // Outside the support f^r = +inf, so only interior support points constrain convexity.
    for (int i = first + 1; i < last; ++i) {
        const double left = std::pow(m[i - 1], r);
        const double mid = std::pow(m[i], r);
        const double right = std::pow(m[i + 1], r);
        const double scale = std::max({1.0, std::abs(mid)});
        if (mid > 0.5 * (left + right) + tol.slack * scale) return false;
    }
    return true;
}

bool is_log_concave(const LatticePmf& f, ShapeTolerance tol) {
    const auto m = f.mass();
    int first = 0, last = 0;
    if (!contiguous_support(m, first, last)) return false;
    for (int i = first + 1; i < last; ++i) {
        const double lhs = std::log(m[i]);
        const double rhs = 0.5 * (std::log(m[i - 1]) + std::log(m[i + 1]));
        if (lhs < rhs - tol.slack * std::max(1.0, std::abs(lhs))) return false;
    }
    return true;
}

ShapeVerdict diagnose_shape(const LatticePmf& f, std::span<const double> r_values, ShapeTolerance tol) {
    ShapeVerdict v;
    v.unimodal = is_unimodal(f, tol);
    v.log_concave = is_log_concave(f, tol);
    for (double r : r_values) v.r_concave_at[r] = is_r_concave(f, r, tol);
    return v;
}

}  // namespace cpss
