#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "cpss/error.hpp"

namespace cpss::numerics {

/// Root of a continuous, strictly increasing f on (0, inf) with f(0+) < 0.
///
/// The upper end of the bracket is doubled from `initial_hi` until f > 0, then
/// the bracket is bisected until it cannot shrink any further in floating point
/// (or until |f| <= f_tol when f_tol > 0).
template <typename F>
double bisect_increasing(F&& f, double initial_hi = 1.0, double f_tol = 0.0) {
    double lo = 0.0;
    double hi = initial_hi;
    int doublings = 0;
    while (f(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++doublings > 1100 || !std::isfinite(hi)) {
            throw NumericFailure("bisect_increasing: could not bracket the root");
        }
    }
    for (int iter = 0; iter < 2000; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double v = f(mid);
        if (f_tol > 0.0 && std::abs(v) <= f_tol) return mid;
        if (v < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Maximum {
    double x;
    double value;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi], stopped
/// when the bracket is narrower than `width`. Both endpoints are compared with
/// the interior estimate, so monotone objectives are handled exactly.
template <typename F>
Maximum golden_section_maximize(F&& f, double lo, double hi, double width) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    Maximum best{lo, f(lo)};
    if (hi <= lo) return best;
    if (const double fhi = f(hi); fhi > best.value) best = {hi, fhi};

    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int iter = 0; iter < 500 && (b - a) > width; ++iter) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if (fc > best.value) best = {c, fc};
    if (fd > best.value) best = {d, fd};
    return best;
}

/// Brent's derivative-free minimiser (golden section with parabolic
/// interpolation) in the classic fmin formulation: absolute tolerance `tol`,
/// first evaluation at the golden-section point of [ax, bx], endpoints never
/// evaluated. Returns the abscissa of the final estimate.
template <typename F>
double brent_fmin(F&& f, double ax, double bx, double tol) {
    const double c = (3.0 - std::sqrt(5.0)) * 0.5;
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

    double a = ax, b = bx;
    double v = a + c * (b - a);
    double w = v, x = v;
    double d = 0.0, e = 0.0;
    double fx = f(x);
    double fv = fx, fw = fx;
    const double tol3 = tol / 3.0;

    for (;;) {
        const double xm = (a + b) * 0.5;
        const double tol1 = eps * std::abs(x) + tol3;
        const double t2 = tol1 * 2.0;
        if (std::abs(x - xm) <= t2 - (b - a) * 0.5) break;

        double p = 0.0, q = 0.0, r = 0.0;
        if (std::abs(e) > tol1) {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = (q - r) * 2.0;
            if (q > 0.0) {
                p = -p;
            } else {
                q = -q;
            }
            r = e;
            e = d;
        }

        double u;
        if (std::abs(p) >= std::abs(q * 0.5 * r) || p <= q * (a - x) || p >= q * (b - x)) {
            e = (x < xm) ? b - x : a - x;
            d = c * e;
        } else {
            d = p / q;
            u = x + d;
            if (u - a < t2 || b - u < t2) {
                d = tol1;
                if (x >= xm) d = -d;
            }
        }

        if (std::abs(d) >= tol1) {
            u = x + d;
        } else if (d > 0.0) {
            u = x + tol1;
        } else {
            u = x - tol1;
        }
        const double fu = f(u);

        if (fu <= fx) {
            if (u < x) {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if (u < x) {
                a = u;
            } else {
                b = u;
            }
            if (fu <= fw || w == x) {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u;
                fv = fu;
            }
        }
    }
    return x;
}

}  // namespace cpss::numerics
