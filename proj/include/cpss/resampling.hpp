#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cpss {

/// B complementary pairs of disjoint subsamples of {0, ..., n-1}.
///
/// Indices are zero-based and sorted within each half. The text form written by
/// write() uses one-based indices.
struct SubsamplePlan {
    int n = 0;
    int B = 0;
    std::uint64_t seed = 0;
    std::vector<std::array<std::vector<int>, 2>> pairs;

    const std::vector<int>& half(std::size_t pair, int h) const { return pairs.at(pair).at(static_cast<std::size_t>(h)); }

    /// Format: a "# n=.. B=.. seed=.." line, then one line per half:
    /// "<pair> <half> <idx> <idx> ...", pairs and halves numbered from 1.
    void write(std::ostream& out) const;
    static SubsamplePlan read(std::istream& in);
};

/// Pair j is drawn from RNG stream j of `seed`: a uniform permutation whose first
/// floor(n/2) entries form the first half and the next floor(n/2) the second.
SubsamplePlan complementary_pairs(int n, int B, std::uint64_t seed);

/// Each class (in sorted label order) is permuted separately with the pair's
/// stream and contributes floor(n_c/2) members to each half. With a single class
/// the plan equals complementary_pairs(n, B, seed).
SubsamplePlan stratified_pairs(std::span<const std::string> labels, int B, std::uint64_t seed);
SubsamplePlan stratified_pairs(std::span<const double> labels, int B, std::uint64_t seed);

}  // namespace cpss
