#include "cpss/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cpss/error.hpp"

namespace cpss {

namespace {

constexpr double kMinWeight = 1e-5;
constexpr int kBlockEvery = 20;

// |z| within a relative 1e-12 of the cut counts as a tie, so fits at lambda_max stay empty.
double soft_threshold(double z, double g) {
    const double cut = g * (1.0 + 1e-12);
    if (z > cut) return z - g;
    if (z < -cut) return z + g;
    return 0.0;
}

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

struct Standardized {
    Eigen::MatrixXd Z;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::vector<char> usable;
};

Standardized standardize(const Eigen::MatrixXd& X) {
    const auto n = X.rows();
    Standardized s;
    s.mean = X.colwise().mean().transpose();
    s.Z = X.rowwise() - s.mean.transpose();
    s.sd.resize(X.cols());
    s.usable.assign(static_cast<std::size_t>(X.cols()), 0);
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        const double sd = std::sqrt(s.Z.col(k).squaredNorm() / static_cast<double>(n));
        s.sd(k) = sd;
        if (sd > 1e-12 * std::max(1.0, std::abs(s.mean(k)))) {
            s.Z.col(k) /= sd;
            s.usable[k] = 1;
        } else {
            s.Z.col(k).setZero();
        }
    }
    return s;
}

void validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family) {
    if (X.rows() != y.size()) throw DomainError("lasso: X and y have different numbers of rows");
    if (X.rows() < 2) throw DomainError("lasso: need at least two observations");
    if (X.cols() < 1) throw DomainError("lasso: need at least one predictor");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("lasso: non-finite values in the input");
    if (family == Family::Binomial) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y(i) != 0.0 && y(i) != 1.0) throw DomainError("lasso: binomial response must be coded 0/1");
        }
        const double s = y.sum();
        if (s == 0.0 || s == static_cast<double>(y.size())) {
            throw DomainError("lasso: binomial response is constant");
        }
    }
}

class Solver {
public:
    Solver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, const LassoOptions& opts)
        : family_(family), opts_(opts), y_(y), n_(static_cast<double>(X.rows())) {
        validate(X, y, family);
        std_ = standardize(X);
        p_ = static_cast<int>(X.cols());
        b_ = Eigen::VectorXd::Zero(p_);
        ybar_ = y.mean();
        if (family_ == Family::Gaussian) {
            b0_ = ybar_;
            r_ = y_.array() - ybar_;
            null_dev_ = r_.squaredNorm();
        } else {
            b0_ = std::log(ybar_ / (1.0 - ybar_));
            null_dev_ = -2.0 * (y_.array() * std::log(ybar_) + (1.0 - y_.array()) * std::log(1.0 - ybar_)).sum();
        }
    }

    double lambda_max() const {
        const Eigen::VectorXd centered = y_.array() - ybar_;
        double m = 0.0;
        for (int k = 0; k < p_; ++k) {
            if (std_.usable[k]) m = std::max(m, std::abs(std_.Z.col(k).dot(centered)) / n_);
        }
        return m;
    }

    struct State {
        Eigen::VectorXd b;
        double b0;
    };
    State state() const { return {b_, b0_}; }
    void restore(const State& s) {
        b_ = s.b;
        b0_ = s.b0;
        if (family_ == Family::Gaussian) r_ = y_.array() - b0_ - (std_.Z * b_).array();
    }

    LassoFit fit(double lambda) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lasso: lambda must be finite and >= 0");
        LassoFit out;
        out.lambda = lambda;
        out.family = family_;
        sweeps_ = 0;
        if (family_ == Family::Gaussian) {
            fit_gaussian(lambda, out);
        } else {
            fit_binomial(lambda, out);
        }
        out.sweeps = sweeps_;
        out.coefficients = Eigen::VectorXd::Zero(p_);
        double shift = 0.0;
        for (int k = 0; k < p_; ++k) {
            if (std_.usable[k] && b_(k) != 0.0) {
                out.coefficients(k) = b_(k) / std_.sd(k);
                shift += std_.mean(k) * out.coefficients(k);
                out.active_set.push_back(k);
            }
        }
        out.intercept = b0_ - shift;
        out.dev_ratio = dev_ratio();
        return out;
    }

private:
    void count_sweep() {
        if (++sweeps_ > opts_.max_sweeps) {
            throw NumericFailure(fmt::format("lasso: no convergence within {} sweeps", opts_.max_sweeps));
        }
    }

    // One coordinate pass over `all` columns or only the current non-zeros (Gaussian).
    double sweep_gaussian(double lambda, bool all) {
        double maxd = 0.0;
        for (int k = 0; k < p_; ++k) {
            if (!std_.usable[k] || (!all && b_(k) == 0.0)) continue;
            const auto zk = std_.Z.col(k);
            const double g = zk.dot(r_) / n_;
            const double bn = soft_threshold(b_(k) + g, lambda);
            const double d = bn - b_(k);
            if (d != 0.0) {
                r_.noalias() -= d * zk;
                b_(k) = bn;
                maxd = std::max(maxd, std::abs(d));
            }
        }
        count_sweep();
        return maxd;
    }

    // Solves the stationarity equations on the non-zero block with the signs held fixed.
    // Empty w means unit weights; with b0 the intercept is refit unpenalised. Kept only when
    // the signs survive and the quadratic objective does not go up.
    bool block_solve(double lambda, const Eigen::VectorXd& w, Eigen::VectorXd& r, double* b0) {
        std::vector<int> act;
        for (int k = 0; k < p_; ++k) {
            if (std_.usable[k] && b_(k) != 0.0) act.push_back(k);
        }
        const int off = b0 ? 1 : 0;
        const int m = static_cast<int>(act.size()) + off;
        if (m == 0 || m >= static_cast<int>(r.size())) return false;
        Eigen::MatrixXd D(r.size(), m);
        if (b0) D.col(0).setOnes();
        for (std::size_t j = 0; j < act.size(); ++j) D.col(off + static_cast<int>(j)) = std_.Z.col(act[j]);
        const Eigen::MatrixXd WD = w.size() ? Eigen::MatrixXd(w.asDiagonal() * D) : D;
        const Eigen::MatrixXd M = D.transpose() * WD / n_;
        Eigen::VectorXd rhs = WD.transpose() * r / n_;
        for (std::size_t j = 0; j < act.size(); ++j) rhs(off + static_cast<int>(j)) -= lambda * (b_(act[j]) > 0 ? 1.0 : -1.0);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() != Eigen::Success) return false;
        Eigen::VectorXd delta = ldlt.solve(rhs);
        if (!delta.allFinite() || (M * delta - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) return false;
        // Stop at the first sign change; the restricted objective is convex along the segment.
        double step = 1.0;
        int hit = -1;
        for (std::size_t j = 0; j < act.size(); ++j) {
            const double bj = b_(act[j]), dj = delta(off + static_cast<int>(j));
            if ((bj + dj) * bj <= 0.0 && -bj / dj < step) {
                step = -bj / dj;
                hit = static_cast<int>(j);
            }
        }
        delta *= step;
        if (hit >= 0) delta(off + hit) = -b_(act[hit]);
        const Eigen::VectorXd rn = r - D * delta;
        auto quad = [&](const Eigen::VectorXd& res) {
            return 0.5 * (w.size() ? res.cwiseProduct(w).dot(res) : res.squaredNorm()) / n_;
        };
        double pen_old = 0.0, pen_new = 0.0;
        for (std::size_t j = 0; j < act.size(); ++j) {
            pen_old += std::abs(b_(act[j]));
            pen_new += std::abs(b_(act[j]) + delta(off + static_cast<int>(j)));
        }
        if (quad(rn) + lambda * pen_new > quad(r) + lambda * pen_old) return false;
        for (std::size_t j = 0; j < act.size(); ++j) b_(act[j]) += delta(off + static_cast<int>(j));
        if (b0) *b0 += delta(0);
        r = rn;
        return true;
    }

    double gaussian_objective(double lambda) const {
        return 0.5 * r_.squaredNorm() / n_ + lambda * b_.lpNorm<1>();
    }

    void fit_gaussian(double lambda, LassoFit& out) {
        for (;;) {
            double md = sweep_gaussian(lambda, true);
            if (opts_.trace_objective) out.objective_trace.push_back(gaussian_objective(lambda));
            if (md < opts_.tol) break;
            for (int it = 1;; ++it) {
                // Slow active-set sweeps usually mean an ill-conditioned block.
                if (it % kBlockEvery == 0 && block_solve(lambda, {}, r_, nullptr) && opts_.trace_objective) {
                    out.objective_trace.push_back(gaussian_objective(lambda));
                }
                md = sweep_gaussian(lambda, false);
                if (opts_.trace_objective) out.objective_trace.push_back(gaussian_objective(lambda));
                if (md < opts_.tol) break;
            }
        }
    }

    Eigen::VectorXd linear_predictor() const { return (std_.Z * b_).array() + b0_; }

    double binomial_objective(double lambda, const Eigen::VectorXd& b, double b0) const {
        const Eigen::VectorXd eta = (std_.Z * b).array() + b0;
        double nll = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) nll += softplus(eta(i)) - y_(i) * eta(i);
        return nll / n_ + lambda * b.lpNorm<1>();
    }

    void fit_binomial(double lambda, LassoFit& out) {
        const int max_outer = 1000;
        double obj = binomial_objective(lambda, b_, b0_);
        Eigen::VectorXd w(y_.size()), r(y_.size()), v(p_);
        for (int outer = 0; outer < max_outer; ++outer) {
            const Eigen::VectorXd eta = linear_predictor();
            for (Eigen::Index i = 0; i < eta.size(); ++i) {
                const double pr = sigmoid(eta(i));
                w(i) = std::max(pr * (1.0 - pr), kMinWeight);
                r(i) = (y_(i) - pr) / w(i);
            }
            const double wsum = w.sum();
            for (int k = 0; k < p_; ++k) {
                v(k) = std_.usable[k] ? std_.Z.col(k).cwiseProduct(w).dot(std_.Z.col(k)) / n_ : 0.0;
            }

            const Eigen::VectorXd b_old = b_;
            const double b0_old = b0_;
            auto sweep = [&](bool all) {
                double maxd = 0.0;
                for (int k = 0; k < p_; ++k) {
                    if (!std_.usable[k] || (!all && b_(k) == 0.0)) continue;
                    const auto zk = std_.Z.col(k);
                    const double g = zk.cwiseProduct(w).dot(r) / n_;
                    const double bn = soft_threshold(g + v(k) * b_(k), lambda) / v(k);
                    const double d = bn - b_(k);
                    if (d != 0.0) {
                        r.noalias() -= d * zk;
                        b_(k) = bn;
                        maxd = std::max(maxd, std::abs(d));
                    }
                }
                const double d0 = w.dot(r) / wsum;
                b0_ += d0;
                r.array() -= d0;
                maxd = std::max(maxd, std::abs(d0));
                count_sweep();
                return maxd;
            };
            for (;;) {
                double md = sweep(true);
                if (md < opts_.tol) break;
                for (int it = 1;; ++it) {
                    if (it % kBlockEvery == 0) block_solve(lambda, w, r, &b0_);
                    md = sweep(false);
                    if (md < opts_.tol) break;
                }
            }

            // Step halving keeps the penalised likelihood from increasing.
            double new_obj = binomial_objective(lambda, b_, b0_);
            for (int h = 0; h < 30 && new_obj > obj + 1e-14 * std::max(1.0, std::abs(obj)); ++h) {
                b_ = 0.5 * (b_ + b_old);
                b0_ = 0.5 * (b0_ + b0_old);
                new_obj = binomial_objective(lambda, b_, b0_);
            }
            obj = new_obj;
            if (opts_.trace_objective) out.objective_trace.push_back(obj);
            const double change = std::max((b_ - b_old).cwiseAbs().maxCoeff(), std::abs(b0_ - b0_old));
            if (change < opts_.tol) return;
        }
        throw NumericFailure("lasso: IRLS did not converge");
    }

    double dev_ratio() const {
        if (null_dev_ <= 0.0) return 0.0;
        if (family_ == Family::Gaussian) return 1.0 - r_.squaredNorm() / null_dev_;
        const Eigen::VectorXd eta = linear_predictor();
        double dev = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i) dev += 2.0 * (softplus(eta(i)) - y_(i) * eta(i));
        return 1.0 - dev / null_dev_;
    }

    Family family_;
    LassoOptions opts_;
    Eigen::VectorXd y_;
    double n_;
    int p_ = 0;
    Standardized std_;
    Eigen::VectorXd b_;
    double b0_ = 0.0;
    double ybar_ = 0.0;
    double null_dev_ = 0.0;
    Eigen::VectorXd r_;
    int sweeps_ = 0;
};

}  // namespace

Family parse_family(const std::string& s) {
    if (s == "gaussian" || s == "linear") return Family::Gaussian;
    if (s == "binomial" || s == "logistic") return Family::Binomial;
    throw InputError(fmt::format("unknown family '{}' (expected gaussian or binomial)", s));
}

std::string to_string(Family f) { return f == Family::Gaussian ? "gaussian" : "binomial"; }

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family) {
    return Solver(X, y, family, {}).lambda_max();
}

std::vector<double> default_lambda_grid(double lmax, const LassoOptions& opts) {
    if (opts.n_lambda < 1) throw DomainError("lasso: n_lambda must be >= 1");
    std::vector<double> grid(static_cast<std::size_t>(opts.n_lambda));
    if (opts.n_lambda == 1) {
        grid[0] = lmax;
        return grid;
    }
    const double step = std::log(opts.lambda_min_ratio) / (opts.n_lambda - 1);
    for (int j = 0; j < opts.n_lambda; ++j) grid[j] = lmax * std::exp(step * j);
    grid[0] = lmax;
    return grid;
}

std::vector<LassoFit> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                               const std::vector<double>& lambda_grid, const LassoOptions& opts,
                               const std::function<bool(const LassoFit&)>& stop) {
    for (std::size_t j = 1; j < lambda_grid.size(); ++j) {
        if (!(lambda_grid[j] < lambda_grid[j - 1])) throw DomainError("lasso: lambda grid must be strictly decreasing");
    }
    Solver solver(X, y, family, opts);
    std::vector<LassoFit> path;
    path.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        path.push_back(solver.fit(lambda));
        if (path.back().dev_ratio > opts.max_dev_ratio) break;
        if (stop && stop(path.back())) break;
    }
    return path;
}

std::vector<LassoFit> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                               const LassoOptions& opts) {
    return fit_path(X, y, family, default_lambda_grid(lambda_max(X, y, family), opts), opts);
}

LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double lambda,
                   const LassoOptions& opts) {
    Solver solver(X, y, family, opts);
    return solver.fit(lambda);
}

double kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoFit& fit) {
    const auto s = standardize(X);
    const Eigen::VectorXd eta = (X * fit.coefficients).array() + fit.intercept;
    Eigen::VectorXd resid(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        resid(i) = fit.family == Family::Gaussian ? y(i) - eta(i) : y(i) - sigmoid(eta(i));
    }
    const double n = static_cast<double>(y.size());
    double worst = std::abs(resid.sum()) / n;  // intercept is unpenalised
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        if (!s.usable[k]) continue;
        const double g = s.Z.col(k).dot(resid) / n;
        const double b = fit.coefficients(k);
        const double v = b == 0.0 ? std::max(0.0, std::abs(g) - fit.lambda) : std::abs(g - fit.lambda * (b > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

QSelection select_q(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, int q,
                    const LassoOptions& opts) {
    if (q < 1 || q > X.cols()) throw DomainError("select_q: q must lie in [1, p]");
    Solver solver(X, y, family, opts);
    const auto grid = default_lambda_grid(solver.lambda_max(), opts);

    auto previous = solver.state();
    LassoFit last;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        LassoFit fit = solver.fit(grid[j]);
        if (static_cast<int>(fit.active_set.size()) >= q) {
            if (j > 0) {
                // Largest lambda in (grid[j], grid[j-1]) with at least q active.
                double hi = grid[j - 1], lo = grid[j];
                auto hi_state = previous;
                for (int iter = 0; iter < 40 && hi / lo > 1.0 + 1e-5; ++iter) {
                    const double mid = std::sqrt(hi * lo);
                    const auto lo_state = solver.state();
                    solver.restore(hi_state);
                    LassoFit trial = solver.fit(mid);
                    if (static_cast<int>(trial.active_set.size()) >= q) {
                        lo = mid;
                        fit = std::move(trial);
                    } else {
                        hi = mid;
                        hi_state = solver.state();
                        solver.restore(lo_state);
                    }
                }
            }
            QSelection out;
            out.overshoot = static_cast<int>(fit.active_set.size()) > q;
            out.selected = std::move(fit.active_set);
            out.lambda = fit.lambda;
            return out;
        }
        previous = solver.state();
        const bool stop = fit.dev_ratio > opts.max_dev_ratio;
        last = std::move(fit);
        if (stop) break;
    }
    QSelection out;
    out.exhausted = true;
    out.selected = std::move(last.active_set);
    out.lambda = last.lambda;
    return out;
}

std::vector<int> LassoSelector::select(const Dataset& data) const {
    return select_q(data.X, data.y, family_, q_, opts_).selected;
}

std::string LassoSelector::descriptor() const { return fmt::format("lasso({}, q={})", to_string(family_), q_); }

std::vector<int> FixedLambdaSelector::select(const Dataset& data) const {
    return fit_lasso(data.X, data.y, family_, lambda_, opts_).active_set;
}

std::string FixedLambdaSelector::descriptor() const {
    return fmt::format("lasso({}, lambda={:.6g})", to_string(family_), lambda_);
}

}  // namespace cpss
