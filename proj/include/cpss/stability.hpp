#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cpss/dataset.hpp"
#include "cpss/resampling.hpp"

namespace cpss {

/// A base variable-selection procedure: maps a data subset to a set of variables.
///
/// Implementations must be deterministic and reentrant; select() is called
/// concurrently from several threads on different subsets.
class SelectionProcedure {
public:
    virtual ~SelectionProcedure() = default;
    /// Sorted zero-based column indices.
    virtual std::vector<int> select(const Dataset& data) const = 0;
    virtual std::string descriptor() const = 0;
};

/// Adapts a callable to the SelectionProcedure interface.
class FunctionSelector final : public SelectionProcedure {
public:
    using Fn = std::function<std::vector<int>(const Dataset&)>;
    FunctionSelector(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}
    std::vector<int> select(const Dataset& data) const override;
    std::string descriptor() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

/// Selection counts over the 2B subsample fits of a complementary-pairs plan.
///
/// Counts are kept as integers so pi_hat and pi_tilde sit exactly on their grids.
struct FrequencyProfile {
    int B = 0;
    int n = 0;
    std::vector<std::string> names;
    std::vector<int> selected;  // fits (out of 2B) selecting k
    std::vector<int> both;      // pairs (out of B) selecting k in both halves

    int p() const noexcept { return static_cast<int>(selected.size()); }
    double pi_hat(int k) const { return selected.at(k) / (2.0 * B); }
    double pi_tilde(int k) const { return static_cast<double>(both.at(k)) / B; }
    std::vector<double> pi_hat() const;
    std::vector<double> pi_tilde() const;
    double q_hat() const;

    /// Columns variable,pi_hat,pi_tilde preceded by "# B=" and "# p=" comment lines.
    void write_csv(std::ostream& out) const;
    static FrequencyProfile read_csv(std::istream& in);
};

/// Runs `proc` on both halves of every pair (in parallel when threads != 1;
/// 0 means the OpenMP default) and aggregates the selections in pair order.
/// A failure on any subsample raises SelectionFailure for the lowest failing pair.
FrequencyProfile selection_frequencies(const Dataset& data, const SelectionProcedure& proc,
                                       const SubsamplePlan& plan, int threads = 0);

/// {k : pi_hat(k) >= tau}.
std::vector<int> cpss_select(const FrequencyProfile& profile, double tau);

/// {k : pi_tilde(k) >= tau}.
std::vector<int> simultaneous_select(const FrequencyProfile& profile, double tau);

/// Sum of pi_hat over all variables.
double estimate_q(const FrequencyProfile& profile);

}  // namespace cpss
