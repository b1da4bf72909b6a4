// cpss: complementary pairs stability selection from the command line.
//
// Every subcommand reads an optional flat key = value file through --config;
// keys are the long option names without dashes, and flags given on the
// command line win over file values.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "cpss/error.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kNumeric = 4;

// Places section-less config entries under the active subcommand.
class FlatConfig : public CLI::ConfigINI {
public:
    std::string subcommand;

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        auto items = CLI::ConfigINI::from_config(in);
        for (auto& it : items) {
            if (it.parents.empty() || it.parents == std::vector<std::string>{"default"}) it.parents = {subcommand};
        }
        return items;
    }
};

const std::map<std::string, cpss::cli::TableFormat> kFormats = {{"csv", cpss::cli::TableFormat::Csv},
                                                                {"fixed", cpss::cli::TableFormat::Fixed}};

// Writes to `path`, or stdout when it is empty. Nothing is written when fn throws.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    std::ostringstream buf;
    fn(buf);
    if (path.empty()) {
        std::cout << buf.str();
        return;
    }
    std::ofstream out(path);
    if (!out || !(out << buf.str())) throw cpss::InputError(fmt::format("cannot write '{}'", path));
}

}  // namespace

int main(int argc, char** argv) {
    using namespace cpss::cli;
    CLI::App app{"Complementary pairs stability selection with error-control bounds", "cpss"};
    app.require_subcommand(1);
    app.fallthrough();
    auto flat = std::make_shared<FlatConfig>();
    app.config_formatter(flat);
    app.set_config("--config", "", "Flat key = value file; command-line flags override it");

    RunConfig run;
    auto* r = app.add_subcommand("run", "Run CPSS with the lasso and a bound-driven threshold");
    r->add_option("--input", run.input, "CSV with a header row")->required();
    r->add_option("--response", run.response, "Response column")->capture_default_str();
    r->add_option("--family", run.family, "gaussian or binomial")->capture_default_str();
    auto* oq = r->add_option("--q", run.q, "Variables selected by each lasso fit");
    auto* ol = r->add_option("--lambda", run.lambda, "Fixed lasso penalty on the standardised scale");
    oq->excludes(ol);
    r->add_option("--B", run.B, "Complementary pairs")->capture_default_str();
    r->add_option("--level", run.level, "Bound on the expected number of low-probability selections")
        ->capture_default_str();
    r->add_option("--theta", run.theta, "Override theta (default q/p)");
    r->add_flag("--stratify", run.stratify, "Keep response class proportions in each half");
    r->add_option("--seed", run.seed)->capture_default_str();
    r->add_option("--output", run.output, "Report path (default stdout)");
    r->add_option("--profile-out", run.profile_out, "Also save the frequency profile (for check-shape)");
    r->add_option("--threads", run.threads, "0 uses all cores")->capture_default_str();

    DTableConfig dt;
    auto* d = app.add_subcommand("dtable", "Table of the combined r-concave bound over theta and tau");
    d->add_option("--theta", dt.thetas, "Columns (default 0.01 ... 0.10)");
    d->add_option("--tau-min", dt.tau_min)->capture_default_str();
    d->add_option("--tau-max", dt.tau_max)->capture_default_str();
    d->add_option("--B", dt.B)->capture_default_str();
    d->add_flag("--reference", dt.reference, "Use the coarse maximiser behind the standard printed tables");
    d->add_option("--format", dt.format)->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));

    CompareConfig cmp;
    auto* c = app.add_subcommand("bounds-compare", "Four error bounds as functions of tau");
    c->add_option("--p", cmp.p)->capture_default_str();
    c->add_option("--q", cmp.q)->capture_default_str();
    c->add_option("--B", cmp.B)->capture_default_str();
    c->add_option("--tau-min", cmp.tau_min);
    c->add_option("--tau-max", cmp.tau_max)->capture_default_str();
    c->add_option("--format", cmp.format)->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));

    SimulateConfig sim;
    auto* s = app.add_subcommand("simulate", "Simulation scenarios over a grid of family and rho");
    s->add_option("--id", sim.id)->capture_default_str();
    s->add_option("--n", sim.n)->capture_default_str();
    s->add_option("--p", sim.p)->capture_default_str();
    s->add_option("--s", sim.s)->capture_default_str();
    s->add_option("--rho", sim.rho)->capture_default_str();
    s->add_option("--family", sim.family)->capture_default_str();
    s->add_option("--snr", sim.snr)->capture_default_str();
    s->add_option("--bayes-error", sim.bayes_error)->capture_default_str();
    s->add_option("--level", sim.level)->capture_default_str();
    s->add_option("--B", sim.B)->capture_default_str();
    s->add_option("--seed", sim.seed)->capture_default_str();
    s->add_option("--replications", sim.replications)->capture_default_str();
    s->add_option("--oracle-replications", sim.oracle_replications)->capture_default_str();
    s->add_option("--q", sim.q, "Default floor(sqrt(0.8 level p))");
    s->add_option("--threads", sim.threads)->capture_default_str();
    s->add_option("--output", sim.output, "CSV path (default stdout)");

    ShapeConfig sh;
    auto* k = app.add_subcommand("check-shape", "Shape diagnostics for pooled selection frequencies");
    k->add_option("--profile", sh.profile, "Frequency profile CSV")->required();
    k->add_option("--statistic", sh.statistic, "pi_hat or pi_tilde")->capture_default_str();
    k->add_option("--r", sh.r, "Negative exponents to test")->capture_default_str();
    k->add_option("--slack", sh.slack)->capture_default_str();
    k->add_option("--variables", sh.variables, "Restrict to these variables");

    app.allow_config_extras(CLI::config_extras_mode::error);
    for (auto* sub : {r, d, c, s, k}) sub->allow_config_extras(CLI::config_extras_mode::error);
    for (int i = 1; i < argc; ++i) {
        if (argv[i][0] != '-') {
            flat->subcommand = argv[i];
            break;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*r) {
            with_output(run.output, [&](std::ostream& out) { cmd_run(run, out); });
        } else if (*d) {
            with_output("", [&](std::ostream& out) { cmd_dtable(dt, out); });
        } else if (*c) {
            with_output("", [&](std::ostream& out) { cmd_bounds_compare(cmp, out); });
        } else if (*s) {
            with_output(sim.output, [&](std::ostream& out) { cmd_simulate(sim, out); });
        } else if (*k) {
            with_output("", [&](std::ostream& out) { cmd_check_shape(sh, out); });
        }
    } catch (const cpss::InfeasibleLevel& e) {
        std::cerr << "cpss: " << e.what() << '\n';
        return kInfeasible;
    } catch (const cpss::InputError& e) {
        std::cerr << "cpss: " << e.what() << '\n';
        return kConfigError;
    } catch (const cpss::DomainError& e) {
        std::cerr << "cpss: " << e.what() << '\n';
        return kConfigError;
    } catch (const cpss::UnsupportedRegime& e) {
        std::cerr << "cpss: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        // NumericFailure, SelectionFailure and anything unexpected from the numerics.
        std::cerr << "cpss: " << e.what() << '\n';
        return kNumeric;
    }
    return 0;
}
