#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cpss/error.hpp"
#include "cpss/resampling.hpp"
#include "cpss/stability.hpp"

using Catch::Approx;

namespace {

cpss::Dataset gaussian_data(int n, int p, unsigned seed) {
    std::mt19937 g(seed);
    std::normal_distribution<double> N;
    cpss::Dataset d;
    d.X.resize(n, p);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        d.y[i] = N(g);
        for (int k = 0; k < p; ++k) d.X(i, k) = N(g);
    }
    d.names = cpss::default_names(p);
    return d;
}

// Selects k when column k is positive on more than half of the rows.
cpss::FunctionSelector majority_positive() {
    return cpss::FunctionSelector(
        [](const cpss::Dataset& d) {
            std::vector<int> s;
            for (int k = 0; k < d.p(); ++k) {
                if ((d.X.col(k).array() > 0.0).count() * 2 > d.n()) s.push_back(k);
            }
            return s;
        },
        "majority-positive");
}

}  // namespace

TEST_CASE("frequencies of trivial selectors", "[stability]") {
    const auto data = gaussian_data(20, 6, 1);
    const auto plan = cpss::complementary_pairs(20, 10, 3);

    const cpss::FunctionSelector all([](const cpss::Dataset& d) {
        std::vector<int> s(static_cast<std::size_t>(d.p()));
        for (int k = 0; k < d.p(); ++k) s[k] = k;
        return s;
    }, "all");
    const auto fa = cpss::selection_frequencies(data, all, plan);
    for (int k = 0; k < 6; ++k) {
        CHECK(fa.pi_hat(k) == 1.0);
        CHECK(fa.pi_tilde(k) == 1.0);
    }
    CHECK(cpss::estimate_q(fa) == 6.0);
    CHECK(fa.q_hat() == 6.0);

    const cpss::FunctionSelector none([](const cpss::Dataset&) { return std::vector<int>{}; }, "none");
    const auto fn = cpss::selection_frequencies(data, none, plan);
    for (int k = 0; k < 6; ++k) {
        CHECK(fn.pi_hat(k) == 0.0);
        CHECK(fn.pi_tilde(k) == 0.0);
    }
    CHECK(cpss::estimate_q(fn) == 0.0);
}

TEST_CASE("one pair, selected in the first half only", "[stability]") {
    cpss::Dataset data;
    data.X = Eigen::MatrixXd::Zero(4, 2);
    data.X(0, 0) = 1.0;
    data.X(1, 0) = 1.0;
    data.y = Eigen::VectorXd::Zero(4);
    data.names = cpss::default_names(2);
    cpss::SubsamplePlan plan;
    plan.n = 4;
    plan.B = 1;
    plan.pairs.push_back({std::vector<int>{0, 1}, std::vector<int>{2, 3}});

    const cpss::FunctionSelector sel([](const cpss::Dataset& d) {
        return d.X(0, 0) > 0.0 ? std::vector<int>{0} : std::vector<int>{};
    }, "first-row");
    const auto f = cpss::selection_frequencies(data, sel, plan);
    CHECK(f.pi_hat(0) == 0.5);
    CHECK(f.pi_tilde(0) == 0.0);
    CHECK(f.pi_hat(1) == 0.0);
}

TEST_CASE("fixed-size selector gives q_hat = q", "[stability]") {
    const auto data = gaussian_data(30, 12, 2);
    const auto plan = cpss::complementary_pairs(30, 25, 8);
    const cpss::FunctionSelector top3([](const cpss::Dataset& d) {
        std::vector<std::pair<double, int>> score;
        for (int k = 0; k < d.p(); ++k) score.emplace_back(-std::abs(d.X.col(k).dot(d.y)), k);
        std::sort(score.begin(), score.end());
        std::vector<int> s;
        for (int i = 0; i < 3; ++i) s.push_back(score[i].second);
        return s;
    }, "top3");
    const auto f = cpss::selection_frequencies(data, top3, plan);
    CHECK(cpss::estimate_q(f) == Approx(3.0).margin(1e-12));
}

TEST_CASE("profile invariants: grids and the pair identity", "[stability]") {
    for (unsigned s = 0; s < 20; ++s) {
        const auto data = gaussian_data(15, 8, 100 + s);
        const int B = 1 + static_cast<int>(s % 7);
        const auto plan = cpss::complementary_pairs(15, B, s);
        const auto f = cpss::selection_frequencies(data, majority_positive(), plan);
        REQUIRE(f.B == B);
        for (int k = 0; k < f.p(); ++k) {
            REQUIRE(f.selected[k] >= 0);
            REQUIRE(f.selected[k] <= 2 * B);
            // (1/B) sum_j (1 - 1{k in A_2j-1})(1 - 1{k in A_2j}) = 1 - 2 pi_hat + pi_tilde, in counts.
            CHECK(B - f.selected[k] + f.both[k] >= 0);
            CHECK(1.0 + f.pi_tilde(k) >= 2.0 * f.pi_hat(k) - 1e-12);  // equality is common; rounding only
            CHECK(f.pi_tilde(k) <= f.pi_hat(k));
            CHECK(f.pi_hat(k) * 2 * B == std::round(f.pi_hat(k) * 2 * B));
        }
    }
}

TEST_CASE("selection thresholds are inclusive and monotone", "[stability]") {
    cpss::FrequencyProfile f;
    f.B = 50;
    f.n = 100;
    f.names = cpss::default_names(5);
    f.selected = {70, 69, 100, 0, 35};
    f.both = {40, 39, 50, 0, 10};
    CHECK(f.pi_hat(0) == 0.70);
    CHECK(cpss::cpss_select(f, 0.70) == std::vector<int>{0, 2});
    CHECK(cpss::cpss_select(f, 0.0) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(cpss::cpss_select(f, 1.0) == std::vector<int>{2});
    CHECK(cpss::simultaneous_select(f, 0.80) == std::vector<int>{0, 2});
    CHECK(cpss::simultaneous_select(f, 0.0).size() == 5);
    CHECK(cpss::simultaneous_select(f, 1.0) == std::vector<int>{2});
    CHECK_THROWS_AS(cpss::cpss_select(f, 1.5), cpss::DomainError);

    std::vector<int> prev = cpss::cpss_select(f, 0.0);
    for (int i = 1; i <= 100; ++i) {
        const auto cur = cpss::cpss_select(f, i / 100.0);
        CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
        prev = cur;
    }
}

TEST_CASE("results do not depend on the thread count", "[stability]") {
    const auto data = gaussian_data(40, 30, 9);
    const auto plan = cpss::complementary_pairs(40, 50, 1);
    const auto a = cpss::selection_frequencies(data, majority_positive(), plan, 1);
    const auto b = cpss::selection_frequencies(data, majority_positive(), plan, 4);
    CHECK(a.selected == b.selected);
    CHECK(a.both == b.both);
}

TEST_CASE("a failing subsample aborts with its pair index", "[stability]") {
    // Column 0 holds the row number; row 4 is poisoned.
    cpss::Dataset data = gaussian_data(5, 2, 4);
    for (int i = 0; i < 5; ++i) data.X(i, 0) = i;
    const auto plan = cpss::complementary_pairs(5, 10, 6);
    std::size_t first_bad = plan.pairs.size();
    for (std::size_t j = 0; j < plan.pairs.size() && first_bad == plan.pairs.size(); ++j) {
        for (int h = 0; h < 2; ++h) {
            const auto& idx = plan.half(j, h);
            if (std::find(idx.begin(), idx.end(), 4) != idx.end()) first_bad = j;
        }
    }
    REQUIRE(first_bad < plan.pairs.size());

    const cpss::FunctionSelector poisoned([](const cpss::Dataset& d) {
        for (int i = 0; i < d.n(); ++i) {
            if (d.X(i, 0) == 4.0) throw std::runtime_error("singular subsample");
        }
        return std::vector<int>{1};
    }, "poisoned");
    try {
        cpss::selection_frequencies(data, poisoned, plan);
        FAIL("expected SelectionFailure");
    } catch (const cpss::SelectionFailure& e) {
        CHECK(e.pair_index() == first_bad);
        CHECK(std::string(e.what()).find("singular subsample") != std::string::npos);
    }

    const cpss::FunctionSelector out_of_range([](const cpss::Dataset&) { return std::vector<int>{7}; }, "bad");
    CHECK_THROWS_AS(cpss::selection_frequencies(data, out_of_range, plan), cpss::SelectionFailure);

    const auto wrong_n = cpss::complementary_pairs(6, 2, 1);
    CHECK_THROWS_AS(cpss::selection_frequencies(data, poisoned, wrong_n), cpss::DomainError);
}

TEST_CASE("frequency profiles round-trip through CSV", "[stability]") {
    const auto data = gaussian_data(21, 7, 12);
    const auto f = cpss::selection_frequencies(data, majority_positive(), cpss::complementary_pairs(21, 13, 2));
    std::stringstream ss;
    f.write_csv(ss);
    const auto g = cpss::FrequencyProfile::read_csv(ss);
    CHECK(g.B == 13);
    CHECK(g.names == f.names);
    CHECK(g.selected == f.selected);
    CHECK(g.both == f.both);

    std::istringstream off_grid("# B=2\n# p=1\nvariable,pi_hat,pi_tilde\nx1,0.3,0\n");
    CHECK_THROWS_AS(cpss::FrequencyProfile::read_csv(off_grid), cpss::InputError);
}

TEST_CASE("frequencies are unbiased for the half-sample selection probability", "[stability]") {
    // Rows are iid with independent Bernoulli(pi_k) entries. The toy selector keeps k when
    // every row of the subsample has X_k = 1, so with halves of size 2, p_k = pi_k^2, and
    // the two disjoint halves are independent, giving E pi_tilde = p_k^2.
    const std::vector<double> pi = {0.2, 0.5, 0.8};
    const int n = 5, B = 3, datasets = 10000;
    const cpss::FunctionSelector all_ones([](const cpss::Dataset& d) {
        std::vector<int> s;
        for (int k = 0; k < d.p(); ++k) {
            if ((d.X.col(k).array() == 1.0).all()) s.push_back(k);
        }
        return s;
    }, "all-ones");

    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> U;
    std::vector<double> sh(3, 0.0), sh2(3, 0.0), st(3, 0.0), st2(3, 0.0);
    for (int r = 0; r < datasets; ++r) {
        cpss::Dataset d;
        d.X.resize(n, 3);
        d.y = Eigen::VectorXd::Zero(n);
        d.names = cpss::default_names(3);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < 3; ++k) d.X(i, k) = U(g) < pi[k] ? 1.0 : 0.0;
        }
        const auto f = cpss::selection_frequencies(d, all_ones, cpss::complementary_pairs(n, B, r), 1);
        for (int k = 0; k < 3; ++k) {
            sh[k] += f.pi_hat(k);
            sh2[k] += f.pi_hat(k) * f.pi_hat(k);
            st[k] += f.pi_tilde(k);
            st2[k] += f.pi_tilde(k) * f.pi_tilde(k);
        }
    }
    for (int k = 0; k < 3; ++k) {
        const double p = pi[k] * pi[k];
        const double mh = sh[k] / datasets, mt = st[k] / datasets;
        const double seh = std::sqrt((sh2[k] / datasets - mh * mh) / datasets);
        const double set = std::sqrt((st2[k] / datasets - mt * mt) / datasets);
        INFO("k=" << k << " mean pi_hat=" << mh << " target=" << p << " mean pi_tilde=" << mt);
        CHECK(std::abs(mh - p) <= 3 * seh);
        CHECK(std::abs(mt - p * p) <= 3 * set);
    }
}
