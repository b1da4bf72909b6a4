#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpss/stability.hpp"

namespace cpss {

enum class Family { Gaussian, Binomial };

Family parse_family(const std::string& s);
std::string to_string(Family f);

struct LassoOptions {
    int n_lambda = 100;
    double lambda_min_ratio = 1e-3;
    /// Convergence: largest coefficient change in a sweep (standardised scale).
    double tol = 1e-7;
    int max_sweeps = 100000;
    /// The path stops once the fraction of deviance explained exceeds this.
    double max_dev_ratio = 0.999;
    /// Record the penalised objective after every coordinate sweep (debugging/tests).
    bool trace_objective = false;
};

struct LassoFit {
    double lambda = 0.0;
    Eigen::VectorXd coefficients;  // original scale
    double intercept = 0.0;
    Family family = Family::Gaussian;
    std::vector<int> active_set;
    double dev_ratio = 0.0;
    int sweeps = 0;
    std::vector<double> objective_trace;
};

/// Smallest lambda giving an all-zero fit: max_k |z_k' (y - ybar)| / n on
/// standardised columns z_k (mean 0, variance 1 with divisor n).
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family);

/// n_lambda values log-spaced from lambda_max down to lambda_min_ratio * lambda_max.
std::vector<double> default_lambda_grid(double lmax, const LassoOptions& opts = {});

/// Warm-started coordinate-descent fits along a decreasing lambda grid. The
/// objective is (1/2n)||y - b0 - Zb||^2 + lambda ||b||_1 (Gaussian) or the mean
/// negative log-likelihood plus the same penalty (Binomial), on standardised
/// columns. The returned path can be shorter than the grid when the deviance
/// ratio limit is reached or `stop` returns true for the latest fit.
std::vector<LassoFit> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                               const std::vector<double>& lambda_grid, const LassoOptions& opts = {},
                               const std::function<bool(const LassoFit&)>& stop = {});

/// Convenience wrapper: default grid from lambda_max.
std::vector<LassoFit> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                               const LassoOptions& opts = {});

/// Single fit at one lambda (cold start).
LassoFit fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double lambda,
                   const LassoOptions& opts = {});

/// Largest-gradient KKT violation of a fit, measured on standardised columns.
double kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoFit& fit);

struct QSelection {
    std::vector<int> selected;
    /// More than q variables entered together at the first lambda with >= q active.
    bool overshoot = false;
    /// The path ended with fewer than q active variables.
    bool exhausted = false;
    double lambda = 0.0;
};

/// Active set at the largest lambda with at least q active variables. The
/// default path is walked until q is reached, then the last interval is refined
/// by bisection on log(lambda).
QSelection select_q(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, int q,
                    const LassoOptions& opts = {});

/// Lasso tuned to select q variables on every subsample.
class LassoSelector final : public SelectionProcedure {
public:
    LassoSelector(int q, Family family, LassoOptions opts = {}) : q_(q), family_(family), opts_(opts) {}
    std::vector<int> select(const Dataset& data) const override;
    std::string descriptor() const override;

private:
    int q_;
    Family family_;
    LassoOptions opts_;
};

/// Lasso at a fixed penalty (on the standardised scale).
class FixedLambdaSelector final : public SelectionProcedure {
public:
    FixedLambdaSelector(double lambda, Family family, LassoOptions opts = {})
        : lambda_(lambda), family_(family), opts_(opts) {}
    std::vector<int> select(const Dataset& data) const override;
    std::string descriptor() const override;

private:
    double lambda_;
    Family family_;
    LassoOptions opts_;
};

}  // namespace cpss
