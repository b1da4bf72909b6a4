#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpss::cli {

enum class TableFormat { Csv, Fixed };

struct RunConfig {
    std::string input;
    std::string response = "y";
    std::string family = "gaussian";
    std::optional<int> q;
    std::optional<double> lambda;
    int B = 50;
    double level = 1.0;
    std::optional<double> theta;
    bool stratify = false;
    std::uint64_t seed = 1;
    std::string output;  // empty: stdout
    std::string profile_out;
    int threads = 0;
};

struct DTableConfig {
    std::vector<double> thetas;  // empty: 0.01..0.10
    double tau_min = 0.30;
    double tau_max = 0.90;
    int B = 50;
    bool reference = false;
    TableFormat format = TableFormat::Csv;
};

struct CompareConfig {
    int p = 1000;
    double q = 50;
    int B = 50;
    std::optional<double> tau_min;  // default: first grid point above 1/2
    double tau_max = 1.0;
    TableFormat format = TableFormat::Csv;
};

struct SimulateConfig {
    std::string id = "scenario";
    int n = 100;
    int p = 200;
    int s = 4;
    std::vector<double> rho = {0.0};
    std::vector<std::string> family = {"gaussian"};
    double snr = 2.0;
    double bayes_error = 0.1;
    double level = 1.0;
    int B = 50;
    std::uint64_t seed = 1;
    int replications = 100;
    int oracle_replications = 5000;
    std::optional<int> q;
    int threads = 0;
    std::string output;
};

struct ShapeConfig {
    std::string profile;
    std::string statistic = "pi_tilde";
    std::vector<double> r = {-0.5, -0.25};
    double slack = 1e-10;
    std::vector<std::string> variables;  // empty: all
};

void cmd_run(const RunConfig& cfg, std::ostream& out);
void cmd_dtable(const DTableConfig& cfg, std::ostream& out);
void cmd_bounds_compare(const CompareConfig& cfg, std::ostream& out);
void cmd_simulate(const SimulateConfig& cfg, std::ostream& out);
void cmd_check_shape(const ShapeConfig& cfg, std::ostream& out);

}  // namespace cpss::cli
