#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "cpss/bounds.hpp"
#include "cpss/error.hpp"
#include "cpss/lasso.hpp"
#include "cpss/lattice.hpp"
#include "cpss/resampling.hpp"
#include "cpss/simlab.hpp"
#include "cpss/stability.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

cpss::TailMaximizer maximizer(bool reference) {
    return reference ? cpss::TailMaximizer::PublishedReference : cpss::TailMaximizer::Sharp;
}

cpss::LatticePmf to_pmf(const std::vector<double>& mass) { return cpss::LatticePmf(mass); }

py::dict fit_to_dict(const cpss::LassoFit& f) {
    return py::dict("lambda_"_a = f.lambda, "coefficients"_a = f.coefficients, "intercept"_a = f.intercept,
                    "active_set"_a = f.active_set, "dev_ratio"_a = f.dev_ratio, "sweeps"_a = f.sweeps);
}

cpss::Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw cpss::DomainError("X and y have different numbers of rows");
    return cpss::Dataset{X, y, cpss::default_names(static_cast<int>(X.cols())), "y"};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Complementary pairs stability selection: bounds, resampling, lasso selectors and simulation.";

    py::register_exception<cpss::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<cpss::InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<cpss::UnsupportedRegime>(m, "UnsupportedRegime", PyExc_ValueError);
    py::register_exception<cpss::InfeasibleLevel>(m, "InfeasibleLevel", PyExc_RuntimeError);
    py::register_exception<cpss::NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);
    py::register_exception<cpss::SelectionFailure>(m, "SelectionFailure", PyExc_RuntimeError);

    // bounds
    m.def("worst_case_factor", &cpss::worst_case_factor, "tau"_a);
    m.def("mb_bound", &cpss::mb_bound, "q"_a, "p"_a, "tau"_a);
    m.def("unimodal_markov", &cpss::unimodal_markov, "eta"_a, "t"_a, "B"_a);
    m.def("unimodal_factor_C", &cpss::unimodal_factor_C, "tau"_a, "B"_a, "theta"_a);
    m.def(
        "r_concave_tail_max",
        [](double eta, double t, int B, double r, bool reference) {
            return cpss::r_concave_tail_max(eta, t, B, r, maximizer(reference));
        },
        "eta"_a, "t"_a, "B"_a, "r"_a, "reference"_a = false);
    m.def(
        "r_concave_extremal",
        [](double eta, double t, int B, double r) {
            const auto s = cpss::r_concave_extremal(eta, t, B, r);
            py::object pmf = py::none();
            if (s.pmf) pmf = py::cast(std::vector<double>(s.pmf->mass().begin(), s.pmf->mass().end()));
            return py::dict("k"_a = s.k, "a"_a = s.a, "pmf"_a = pmf, "tail"_a = s.tail,
                            "conservative"_a = s.conservative);
        },
        "eta"_a, "t"_a, "B"_a, "r"_a);
    m.def(
        "combined_bound",
        [](double theta, double tau, int B, bool reference) {
            return cpss::combined_bound(theta, tau, B, maximizer(reference));
        },
        "theta"_a, "tau"_a, "B"_a = 50, "reference"_a = false);
    m.def("choose_threshold", &cpss::choose_threshold, "theta"_a, "B"_a, "level"_a, "p"_a);

    // lattice shape checks on a mass vector over {0, 1/B, ..., 1}
    m.def(
        "is_unimodal", [](const std::vector<double>& mass, double slack) {
            return cpss::is_unimodal(to_pmf(mass), {slack});
        },
        "mass"_a, "slack"_a = 1e-10);
    m.def(
        "is_r_concave", [](const std::vector<double>& mass, double r, double slack) {
            return cpss::is_r_concave(to_pmf(mass), r, {slack});
        },
        "mass"_a, "r"_a, "slack"_a = 1e-10);
    m.def(
        "is_log_concave", [](const std::vector<double>& mass, double slack) {
            return cpss::is_log_concave(to_pmf(mass), {slack});
        },
        "mass"_a, "slack"_a = 1e-10);

    // resampling
    m.def(
        "complementary_pairs",
        [](int n, int B, std::uint64_t seed) { return cpss::complementary_pairs(n, B, seed).pairs; },
        "n"_a, "B"_a, "seed"_a);
    m.def(
        "stratified_pairs",
        [](const std::vector<std::string>& labels, int B, std::uint64_t seed) {
            return cpss::stratified_pairs(labels, B, seed).pairs;
        },
        "labels"_a, "B"_a, "seed"_a);

    // lasso
    m.def(
        "lambda_max",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& family) {
            return cpss::lambda_max(X, y, cpss::parse_family(family));
        },
        "X"_a, "y"_a, "family"_a = "gaussian");
    m.def(
        "fit_lasso",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const std::string& family) {
            const auto fit = cpss::fit_lasso(X, y, cpss::parse_family(family), lambda);
            py::dict d = fit_to_dict(fit);
            d["kkt_violation"] = cpss::kkt_violation(X, y, fit);
            return d;
        },
        "X"_a, "y"_a, "lambda_"_a, "family"_a = "gaussian");
    m.def(
        "fit_path",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& family) {
            py::list out;
            for (const auto& f : cpss::fit_path(X, y, cpss::parse_family(family))) out.append(fit_to_dict(f));
            return out;
        },
        "X"_a, "y"_a, "family"_a = "gaussian");
    m.def(
        "select_q",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int q, const std::string& family) {
            const auto s = cpss::select_q(X, y, cpss::parse_family(family), q);
            return py::dict("selected"_a = s.selected, "lambda_"_a = s.lambda, "overshoot"_a = s.overshoot,
                            "exhausted"_a = s.exhausted);
        },
        "X"_a, "y"_a, "q"_a, "family"_a = "gaussian");

    // stability
    py::class_<cpss::FrequencyProfile>(m, "FrequencyProfile")
        .def_readonly("B", &cpss::FrequencyProfile::B)
        .def_readonly("n", &cpss::FrequencyProfile::n)
        .def_readonly("selected_counts", &cpss::FrequencyProfile::selected)
        .def_readonly("both_counts", &cpss::FrequencyProfile::both)
        .def_property_readonly("p", &cpss::FrequencyProfile::p)
        .def_property_readonly("pi_hat", py::overload_cast<>(&cpss::FrequencyProfile::pi_hat, py::const_))
        .def_property_readonly("pi_tilde", py::overload_cast<>(&cpss::FrequencyProfile::pi_tilde, py::const_))
        .def_property_readonly("q_hat", &cpss::FrequencyProfile::q_hat)
        .def("cpss_select", [](const cpss::FrequencyProfile& f, double tau) { return cpss::cpss_select(f, tau); },
             "tau"_a)
        .def("simultaneous_select",
             [](const cpss::FrequencyProfile& f, double tau) { return cpss::simultaneous_select(f, tau); }, "tau"_a)
        .def("__repr__", [](const cpss::FrequencyProfile& f) {
            return "<FrequencyProfile p=" + std::to_string(f.p()) + " B=" + std::to_string(f.B) + ">";
        });

    m.def(
        "selection_frequencies",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::optional<int> q, std::optional<double> lambda,
           const std::string& family, int B, std::uint64_t seed, bool stratify, int threads) {
            if (q.has_value() == lambda.has_value()) throw cpss::DomainError("give exactly one of q and lambda_");
            const auto fam = cpss::parse_family(family);
            const cpss::Dataset data = make_dataset(X, y);
            std::unique_ptr<cpss::SelectionProcedure> sel;
            if (q) {
                sel = std::make_unique<cpss::LassoSelector>(*q, fam);
            } else {
                sel = std::make_unique<cpss::FixedLambdaSelector>(*lambda, fam);
            }
            const std::vector<double> labels(y.data(), y.data() + y.size());
            const auto plan = stratify ? cpss::stratified_pairs(labels, B, seed)
                                       : cpss::complementary_pairs(static_cast<int>(y.size()), B, seed);
            py::gil_scoped_release nogil;
            return cpss::selection_frequencies(data, *sel, plan, threads);
        },
        "X"_a, "y"_a, "q"_a = py::none(), "lambda_"_a = py::none(), "family"_a = "gaussian", "B"_a = 50,
        "seed"_a = 1, "stratify"_a = false, "threads"_a = 0);
    m.def(
        "selection_frequencies_with",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::function<std::vector<int>(const Eigen::MatrixXd&, const Eigen::VectorXd&)>& selector, int B,
           std::uint64_t seed) {
            // Python callables run on the calling thread only.
            const cpss::FunctionSelector sel([&](const cpss::Dataset& d) { return selector(d.X, d.y); }, "python");
            const auto plan = cpss::complementary_pairs(static_cast<int>(y.size()), B, seed);
            return cpss::selection_frequencies(make_dataset(X, y), sel, plan, 1);
        },
        "X"_a, "y"_a, "selector"_a, "B"_a = 50, "seed"_a = 1);

    // simulation
    m.def("toeplitz_sigma", &cpss::toeplitz_sigma, "p"_a, "rho"_a);
    m.def(
        "make_beta",
        [](int p, int s, std::uint64_t seed) {
            const auto sig = cpss::make_beta(p, s, seed);
            return py::make_tuple(sig.beta, sig.support);
        },
        "p"_a, "s"_a, "seed"_a);
    m.def(
        "run_scenario",
        [](int n, int p, int s, double rho, const std::string& family, double snr, double bayes_error, double level,
           int B, std::uint64_t seed, int replications, int oracle_replications, std::optional<int> q,
           const std::string& id) {
            cpss::ScenarioConfig cfg;
            cfg.id = id;
            cfg.n = n;
            cfg.p = p;
            cfg.s = s;
            cfg.rho = rho;
            cfg.family = cpss::parse_family(family);
            cfg.snr = snr;
            cfg.bayes_error = bayes_error;
            cfg.l = level;
            cfg.B = B;
            cfg.seed = seed;
            cfg.replications = replications;
            cfg.oracle_replications = oracle_replications;
            cfg.q = q;
            cfg.validate();
            cpss::ScenarioResult res;
            {
                py::gil_scoped_release nogil;
                res = cpss::run_scenario(cfg);
            }
            py::list rows;
            for (const auto& r : res.rows) {
                rows.append(py::dict("method"_a = r.method, "ratio"_a = r.ratio, "realized_control"_a = r.realized_control,
                                     "control_se"_a = r.control_se, "level"_a = r.level, "threshold"_a = r.threshold));
            }
            return py::dict("scenario_id"_a = res.scenario_id, "q"_a = res.q, "theta"_a = res.theta,
                            "tau_tilde"_a = res.tau_tilde, "tau_star"_a = res.tau_star,
                            "lambda_star"_a = res.lambda_star, "L_theta_size"_a = res.L_theta_size, "rows"_a = rows);
        },
        "n"_a = 100, "p"_a = 200, "s"_a = 4, "rho"_a = 0.0, "family"_a = "gaussian", "snr"_a = 2.0,
        "bayes_error"_a = 0.1, "level"_a = 1.0, "B"_a = 50, "seed"_a = 1, "replications"_a = 100,
        "oracle_replications"_a = 5000, "q"_a = py::none(), "id"_a = "scenario");
}
