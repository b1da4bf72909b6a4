#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpss/dataset.hpp"
#include "cpss/lasso.hpp"
#include "cpss/rng.hpp"
#include "cpss/stability.hpp"

namespace cpss {

struct ScenarioConfig {
    std::string id = "scenario";
    int n = 100;
    int p = 200;
    int s = 4;
    double rho = 0.0;
    Family family = Family::Gaussian;
    double snr = 2.0;          // Gaussian
    double bayes_error = 0.1;  // Binomial
    double l = 1.0;
    int B = 50;
    std::uint64_t seed = 1;
    int replications = 100;
    int oracle_replications = 5000;
    /// Base-procedure q; when unset, floor(sqrt(0.8 l p)).
    std::optional<int> q;
    int threads = 0;

    int effective_q() const;
    double theta() const { return static_cast<double>(effective_q()) / p; }
    void validate() const;
};

/// Sigma_ij = rho^d(i,j) with d the circular distance min(|i-j|, p-|i-j|).
Eigen::MatrixXd toeplitz_sigma(int p, double rho);

struct Signal {
    Eigen::VectorXd beta;
    std::vector<int> support;  // zero-based, sorted
};

/// Support from the rounded geometric progression r^j, j = 0..s-1, r = (p+1)^(1/s)
/// (one-based positions; collisions move to the next free index). Values are s/2
/// equally spaced points in [-1, -0.5] and s/2 in [0.5, 1], assigned to the
/// support by a permutation drawn from `seed`.
Signal make_beta(int p, int s, std::uint64_t seed);

/// Draws rows from N_p(0, Sigma) via a Cholesky factor computed once.
class GaussianDesign {
public:
    explicit GaussianDesign(const Eigen::MatrixXd& sigma);
    Eigen::MatrixXd draw(int n, Engine& eng) const;
    int p() const noexcept { return p_; }

private:
    int p_;
    bool identity_;
    Eigen::MatrixXd L_;
};

/// y = X beta + eps with var(eps) = beta' Sigma beta / snr^2.
Dataset gen_linear(const ScenarioConfig& cfg, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                   std::uint64_t seed);
Dataset gen_linear(int n, double snr, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                   const GaussianDesign& design, Engine& eng);

/// Monte Carlo Bayes error E[min(sigmoid(gamma Z), 1 - sigmoid(gamma Z))] with
/// Z ~ N(0, signal_var), using `draws` draws from `seed`.
double bayes_error_mc(double gamma, double signal_var, std::uint64_t seed, int draws = 100000);

/// Scale gamma whose Monte Carlo Bayes error matches `target` within 0.002.
/// Throws NumericFailure when the target cannot be reached or is below 1/draws.
double calibrate_gamma(double target, double signal_var, std::uint64_t seed, int draws = 100000);

/// P(Y = 1 | X) = sigmoid(gamma X'beta); gamma calibrated to cfg.bayes_error.
Dataset gen_logistic(const ScenarioConfig& cfg, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                     std::uint64_t seed);
Dataset gen_logistic(int n, double gamma, const Eigen::VectorXd& beta, const GaussianDesign& design, Engine& eng);

/// Generates datasets of one scenario. Dataset `index` of `purpose` always uses
/// the same random stream, so results do not depend on thread scheduling.
class ScenarioGenerator {
public:
    explicit ScenarioGenerator(const ScenarioConfig& cfg);
    const ScenarioConfig& config() const noexcept { return cfg_; }
    const Signal& signal() const noexcept { return signal_; }
    double gamma() const noexcept { return gamma_; }

    enum class Purpose : std::uint64_t { Oracle = 1, Replication = 2, LassoOracle = 3, TauStar = 4 };
    Dataset dataset(int n, Purpose purpose, std::uint64_t index) const;

private:
    ScenarioConfig cfg_;
    Signal signal_;
    Eigen::MatrixXd sigma_;
    GaussianDesign design_;
    double gamma_ = 0.0;
};

struct OracleTable {
    std::vector<double> sel_prob;
    std::vector<int> L_theta;
    double theta = 0.0;
    std::optional<double> tau_star;
    std::optional<double> lambda_star;
    int replications_used = 0;

    /// E|S_{n/2} ∩ L_theta| = sum of sel_prob over L_theta.
    double expected_low_selected() const;
};

/// sel_prob[k]: fraction of `replications` independent size-floor(n/2) datasets
/// on which `proc` selects k. L_theta uses theta = q/p.
OracleTable estimate_selection_probs(const ScenarioConfig& cfg, const SelectionProcedure& proc, int replications);
OracleTable estimate_selection_probs(const ScenarioGenerator& gen, const SelectionProcedure& proc, int replications);

/// Runs CPSS on `replications` fresh size-n datasets of purpose `purpose`.
std::vector<FrequencyProfile> simulate_profiles(const ScenarioGenerator& gen, const SelectionProcedure& proc,
                                                int replications,
                                                ScenarioGenerator::Purpose purpose = ScenarioGenerator::Purpose::Replication);

/// Mean of |{k in set : pi_hat(k) >= tau}| over the profiles, with its standard error.
struct McMean {
    double mean = 0.0;
    double se = 0.0;
};
McMean mean_selected_in(const std::vector<FrequencyProfile>& profiles, const std::vector<int>& set, double tau);

/// Smallest tau on {0, 1/(2B), ..., 1} whose Monte Carlo mean of |S_tau ∩ L_theta| is <= l.
double tau_star_from_profiles(const std::vector<FrequencyProfile>& profiles, const std::vector<int>& L_theta,
                              double l);

/// tau* from `replications` fresh datasets. Throws InfeasibleLevel when even tau = 1 misses l.
double oracle_tau_star(const ScenarioConfig& cfg, const SelectionProcedure& proc, const OracleTable& oracle,
                       int replications);

struct LambdaStar {
    double lambda = 0.0;
    McMean low_selected;
    McMean signal_selected;
};

/// Smallest lambda on a fine common grid (200 log-spaced points, standardised
/// scale) such that the Monte Carlo mean of |S^lambda ∩ L_theta| stays <= l at
/// it and at every larger grid value.
LambdaStar oracle_lambda_star(const ScenarioGenerator& gen, const OracleTable& oracle, int replications);
double oracle_lambda_star(const ScenarioConfig& cfg, const OracleTable& oracle, int replications = 200);

struct ScenarioRow {
    std::string scenario_id;
    std::string method;
    double ratio = 0.0;
    double realized_control = 0.0;
    double control_se = 0.0;
    double level = 0.0;
    double threshold = 0.0;
};

struct ScenarioResult {
    std::string scenario_id;
    int q = 0;
    double theta = 0.0;
    double tau_tilde = 0.0;
    double tau_star = 0.0;
    double lambda_star = 0.0;
    int L_theta_size = 0;
    std::vector<ScenarioRow> rows;

    static void write_csv_header(std::ostream& out);
    void write_csv_rows(std::ostream& out) const;
};

/// Worst-case CPSS (tau = 0.9), r-concave CPSS (tau~), oracle lasso (lambda*),
/// each as a ratio of E|S ∩ signal| to that of CPSS at tau*.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace cpss
