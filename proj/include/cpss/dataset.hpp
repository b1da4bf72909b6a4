#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpss {

/// Design matrix (n x p, column-major) with response and variable names.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;
    std::string response_name = "y";

    int n() const noexcept { return static_cast<int>(X.rows()); }
    int p() const noexcept { return static_cast<int>(X.cols()); }

    /// Rows listed in `rows`, in that order.
    Dataset subset(std::span<const int> rows) const;
};

/// Names x1..xp.
std::vector<std::string> default_names(int p);

/// Reads a CSV with a header row. `response` names the response column; every
/// other column becomes a predictor. Non-numeric cells raise InputError naming
/// the column and row.
Dataset read_csv(std::istream& in, const std::string& response);
Dataset load_csv(const std::string& path, const std::string& response);

/// Writes the response first, then the predictors, with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data);

}  // namespace cpss
