#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpss {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A bound was requested in a regime for which no closed form is implemented.
class UnsupportedRegime : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// No threshold on the grid achieves the requested error-control level.
class InfeasibleLevel : public std::runtime_error {
public:
    InfeasibleLevel(const std::string& what, double smallest_achievable)
        : std::runtime_error(what), smallest_achievable_(smallest_achievable) {}

    double smallest_achievable() const noexcept { return smallest_achievable_; }

private:
    double smallest_achievable_;
};

/// Iterative numerical routine failed (non-finite values, calibration failure, ...).
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The base selection procedure threw on one of the subsamples.
class SelectionFailure : public std::runtime_error {
public:
    SelectionFailure(std::size_t pair_index, const std::string& message)
        : std::runtime_error("selection procedure failed on pair " + std::to_string(pair_index + 1) +
                             ": " + message),
          pair_index_(pair_index) {}

    /// Zero-based index of the complementary pair whose fit failed.
    std::size_t pair_index() const noexcept { return pair_index_; }

private:
    std::size_t pair_index_;
};

/// Malformed input file or configuration.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cpss
