#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cpss/error.hpp"
#include "cpss/lasso.hpp"
#include "oracles/lasso_qp.hpp"

using Catch::Approx;
using cpss::Family;

namespace {

struct Problem {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Problem gaussian_problem(int n, int p, unsigned seed, double rho = 0.3) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> N;
    Problem pr;
    pr.X.resize(n, p);
    for (int i = 0; i < n; ++i) {
        double prev = N(g);
        for (int k = 0; k < p; ++k) {
            prev = rho * prev + std::sqrt(1 - rho * rho) * N(g);
            pr.X(i, k) = 2.0 * prev + 0.5 * k;  // non-standard location and scale
        }
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < std::min(p, 3); ++k) beta(k * (p / 3)) = (k % 2 ? -1.0 : 1.0) * (1.0 + k);
    pr.y = pr.X * beta;
    for (int i = 0; i < n; ++i) pr.y(i) += 1.5 * N(g) + 3.0;
    return pr;
}

Problem logistic_problem(int n, int p, unsigned seed) {
    Problem pr = gaussian_problem(n, p, seed);
    std::mt19937_64 g(seed + 1);
    std::uniform_real_distribution<double> U;
    const double mid = pr.y.mean();
    double sd = std::sqrt((pr.y.array() - mid).square().mean());
    for (int i = 0; i < n; ++i) pr.y(i) = U(g) < 1.0 / (1.0 + std::exp(-(pr.y(i) - mid) / sd * 2.0)) ? 1.0 : 0.0;
    return pr;
}

Eigen::VectorXd column_sd(const Eigen::MatrixXd& X) {
    Eigen::VectorXd sd(X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        sd(k) = std::sqrt((X.col(k).array() - X.col(k).mean()).square().mean());
    }
    return sd;
}

double soft(double z, double g) { return z > g ? z - g : (z < -g ? z + g : 0.0); }

}  // namespace

TEST_CASE("family names", "[lasso]") {
    CHECK(cpss::parse_family("gaussian") == Family::Gaussian);
    CHECK(cpss::parse_family("linear") == Family::Gaussian);
    CHECK(cpss::parse_family("binomial") == Family::Binomial);
    CHECK(cpss::parse_family("logistic") == Family::Binomial);
    CHECK_THROWS_AS(cpss::parse_family("poisson"), cpss::InputError);
    CHECK(cpss::to_string(Family::Binomial) == "binomial");
}

TEST_CASE("orthonormal design has soft-thresholded coefficients", "[lasso]") {
    // Mean-zero, variance-one (divisor n), mutually orthogonal columns.
    Eigen::MatrixXd X(4, 3);
    X << 1, 1, 1,
         1, -1, -1,
         -1, 1, -1,
         -1, -1, 1;
    Eigen::VectorXd y(4);
    y << 3.0, 0.5, -1.0, 2.5;
    const Eigen::VectorXd z = X.transpose() * (y.array() - y.mean()).matrix() / 4.0;

    CHECK(cpss::lambda_max(X, y, Family::Gaussian) == Approx(z.cwiseAbs().maxCoeff()));
    for (double lambda : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.5}) {
        const auto fit = cpss::fit_lasso(X, y, Family::Gaussian, lambda);
        for (int k = 0; k < 3; ++k) CHECK(fit.coefficients(k) == Approx(soft(z(k), lambda)).margin(1e-9));
        CHECK(fit.intercept == Approx(y.mean()).margin(1e-9));
    }

    const auto sel = cpss::select_q(X, y, Family::Gaussian, 2);
    std::vector<int> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(z(a)) > std::abs(z(b)); });
    std::vector<int> top2 = {order[0], order[1]};
    std::sort(top2.begin(), top2.end());
    CHECK(sel.selected == top2);
    CHECK_FALSE(sel.overshoot);
}

TEST_CASE("no variable enters at or above lambda_max", "[lasso]") {
    for (Family fam : {Family::Gaussian, Family::Binomial}) {
        const auto pr = fam == Family::Gaussian ? gaussian_problem(50, 10, 1) : logistic_problem(80, 10, 1);
        const double lmax = cpss::lambda_max(pr.X, pr.y, fam);
        CHECK(cpss::fit_lasso(pr.X, pr.y, fam, lmax).active_set.empty());
        CHECK(cpss::fit_lasso(pr.X, pr.y, fam, 2 * lmax).active_set.empty());
        CHECK_FALSE(cpss::fit_lasso(pr.X, pr.y, fam, 0.95 * lmax).active_set.empty());
        const auto path = cpss::fit_path(pr.X, pr.y, fam);
        REQUIRE_FALSE(path.empty());
        CHECK(path.front().active_set.empty());
        CHECK(path.front().lambda == Approx(lmax));
    }
}

TEST_CASE("default grid follows the usual log spacing", "[lasso]") {
    const auto grid = cpss::default_lambda_grid(2.0);
    REQUIRE(grid.size() == 100);
    CHECK(grid.front() == Approx(2.0));
    CHECK(grid.back() == Approx(2e-3));
    for (std::size_t j = 1; j < grid.size(); ++j) CHECK(grid[j] / grid[j - 1] == Approx(std::pow(1e-3, 1.0 / 99)));
}

TEST_CASE("gaussian fits match the enumeration oracle", "[lasso]") {
    for (unsigned seed = 0; seed < 6; ++seed) {
        const int p = seed < 3 ? 3 : 5;
        const auto pr = gaussian_problem(12 + static_cast<int>(seed), p, 40 + seed, 0.6);
        const double lmax = cpss::lambda_max(pr.X, pr.y, Family::Gaussian);
        const Eigen::VectorXd sd = column_sd(pr.X);
        for (double frac : {0.8, 0.5, 0.2, 0.05, 0.01}) {
            const double lambda = frac * lmax;
            const auto fit = cpss::fit_lasso(pr.X, pr.y, Family::Gaussian, lambda);
            const auto ref = oracle::lasso_enumerate(pr.X, pr.y, lambda);
            INFO("seed=" << seed << " lambda/lmax=" << frac);
            for (int k = 0; k < p; ++k) CHECK(fit.coefficients(k) * sd(k) == Approx(ref.b(k)).margin(1e-6));
            const double b0 = pr.y.mean() - (pr.X.colwise().mean() * fit.coefficients)(0);
            CHECK(fit.intercept == Approx(b0).margin(1e-6));
        }
    }
}

TEST_CASE("every fit on a path satisfies the KKT conditions", "[lasso]") {
    for (Family fam : {Family::Gaussian, Family::Binomial}) {
        for (unsigned seed = 0; seed < 4; ++seed) {
            const auto pr = fam == Family::Gaussian ? gaussian_problem(60, 25, seed) : logistic_problem(120, 25, seed);
            const auto path = cpss::fit_path(pr.X, pr.y, fam);
            REQUIRE(path.size() >= 10);
            for (const auto& fit : path) {
                INFO(cpss::to_string(fam) << " seed=" << seed << " lambda=" << fit.lambda);
                CHECK(cpss::kkt_violation(pr.X, pr.y, fit) <= 1e-6);
            }
            for (std::size_t j = 1; j < path.size(); ++j) CHECK(path[j].dev_ratio >= path[j - 1].dev_ratio - 1e-9);
        }
    }
}

TEST_CASE("objective never increases across sweeps", "[lasso]") {
    cpss::LassoOptions opts;
    opts.trace_objective = true;
    for (Family fam : {Family::Gaussian, Family::Binomial}) {
        const auto pr = fam == Family::Gaussian ? gaussian_problem(40, 30, 7, 0.8) : logistic_problem(100, 30, 7);
        const double lmax = cpss::lambda_max(pr.X, pr.y, fam);
        for (double frac : {0.5, 0.1, 0.02}) {
            const auto fit = cpss::fit_lasso(pr.X, pr.y, fam, frac * lmax, opts);
            REQUIRE(fit.objective_trace.size() >= 2);
            for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
                CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-12 * std::abs(fit.objective_trace[i - 1]));
            }
        }
    }
}

TEST_CASE("coefficients do not depend on column scale or location", "[lasso]") {
    const auto pr = gaussian_problem(50, 8, 3);
    Eigen::MatrixXd X2 = pr.X;
    X2.col(2) = X2.col(2) * 1000.0 + Eigen::VectorXd::Constant(50, -7.0);
    const double lambda = 0.2 * cpss::lambda_max(pr.X, pr.y, Family::Gaussian);
    const auto a = cpss::fit_lasso(pr.X, pr.y, Family::Gaussian, lambda);
    const auto b = cpss::fit_lasso(X2, pr.y, Family::Gaussian, lambda);
    CHECK(a.active_set == b.active_set);
    CHECK(b.coefficients(2) * 1000.0 == Approx(a.coefficients(2)).margin(1e-6));
}

TEST_CASE("select_q agrees with a dense path", "[lasso]") {
    for (Family fam : {Family::Gaussian, Family::Binomial}) {
        for (unsigned seed = 0; seed < 4; ++seed) {
            const auto pr = fam == Family::Gaussian ? gaussian_problem(60, 40, 100 + seed) : logistic_problem(120, 40, 100 + seed);
            const double lmax = cpss::lambda_max(pr.X, pr.y, fam);
            cpss::LassoOptions dense_opts;
            dense_opts.n_lambda = 3000;
            const auto dense = cpss::fit_path(pr.X, pr.y, fam, cpss::default_lambda_grid(lmax, dense_opts));
            for (int q : {1, 3, 6}) {
                const auto sel = cpss::select_q(pr.X, pr.y, fam, q);
                INFO(cpss::to_string(fam) << " seed=" << seed << " q=" << q);
                REQUIRE_FALSE(sel.exhausted);
                CHECK(static_cast<int>(sel.selected.size()) >= q);
                CHECK(static_cast<int>(sel.selected.size()) <= q + 3);
                CHECK(sel.overshoot == (static_cast<int>(sel.selected.size()) > q));
                std::size_t j = 0;
                while (j < dense.size() && static_cast<int>(dense[j].active_set.size()) < q) ++j;
                REQUIRE(j > 0);
                REQUIRE(j < dense.size());
                CHECK(sel.lambda <= dense[j - 1].lambda);
                CHECK(sel.lambda >= dense[j].lambda / (1 + 1e-5));
                if (dense[j].active_set.size() == sel.selected.size()) CHECK(dense[j].active_set == sel.selected);
            }
        }
    }
}

TEST_CASE("select_q is nested in q", "[lasso]") {
    for (unsigned seed = 0; seed < 5; ++seed) {
        const auto pr = gaussian_problem(80, 30, 300 + seed);
        std::vector<int> prev;
        for (int q = 1; q <= 8; ++q) {
            const auto sel = cpss::select_q(pr.X, pr.y, Family::Gaussian, q);
            INFO("seed=" << seed << " q=" << q);
            CHECK(std::includes(sel.selected.begin(), sel.selected.end(), prev.begin(), prev.end()));
            prev = sel.selected;
        }
    }
    const auto pr = gaussian_problem(80, 6, 9);
    CHECK(cpss::select_q(pr.X, pr.y, Family::Gaussian, 6).selected.size() == 6);
    CHECK_THROWS_AS(cpss::select_q(pr.X, pr.y, Family::Gaussian, 0), cpss::DomainError);
    CHECK_THROWS_AS(cpss::select_q(pr.X, pr.y, Family::Gaussian, 7), cpss::DomainError);
}

TEST_CASE("select_q flags an exhausted path", "[lasso]") {
    // A noise-free response on one column: the deviance ratio limit ends the path
    // long before three variables are active.
    auto pr = gaussian_problem(30, 5, 2);
    const Eigen::VectorXd y = 2.0 * pr.X.col(1);
    const auto sel = cpss::select_q(pr.X, y, Family::Gaussian, 3);
    CHECK(sel.exhausted);
    CHECK(sel.selected == std::vector<int>{1});
}

TEST_CASE("input validation", "[lasso]") {
    auto pr = gaussian_problem(20, 4, 1);
    Eigen::VectorXd constant = Eigen::VectorXd::Ones(20);
    CHECK_THROWS_AS(cpss::fit_path(pr.X, constant, Family::Binomial), cpss::DomainError);
    CHECK_THROWS_AS(cpss::fit_path(pr.X, pr.y, Family::Binomial), cpss::DomainError);
    pr.X(3, 2) = std::nan("");
    CHECK_THROWS_AS(cpss::fit_path(pr.X, pr.y, Family::Gaussian), cpss::DomainError);
    CHECK_THROWS_AS(cpss::fit_path(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1), Family::Gaussian),
                    cpss::DomainError);
}

TEST_CASE("selectors plug into the selection contract", "[lasso]") {
    const auto pr = gaussian_problem(60, 20, 5);
    cpss::Dataset d{pr.X, pr.y, cpss::default_names(20), "y"};
    const cpss::LassoSelector by_q(4, Family::Gaussian);
    CHECK(by_q.select(d).size() >= 4);
    CHECK(by_q.descriptor() == "lasso(gaussian, q=4)");
    const cpss::FixedLambdaSelector fixed(1e9, Family::Gaussian);
    CHECK(fixed.select(d).empty());
}
