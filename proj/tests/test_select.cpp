#include <algorithm>
#include <cmath>
#include <numeric>

#include "dasc/select.hpp"
#include "doctest.h"
#include "naive_ref.hpp"

using namespace dasc;

namespace {

std::vector<double> two_cluster(std::size_t n, double m0, double m1, double sigma, Rng& rng) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n / 2; ++i) v.push_back(rng.normal(m0, sigma));
    for (std::size_t i = n / 2; i < n; ++i) v.push_back(rng.normal(m1, sigma));
    return v;
}

}  // namespace

TEST_CASE("gmm recovers two well-separated clusters") {
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto vals = two_cluster(200, 0.1, 0.9, 0.02, rng);
        const Gmm1d g = fit_gmm_1d(vals);
        const int hi = g.clean_component();
        CHECK(std::abs(g.mean[hi] - 0.9) < 0.05);
        CHECK(std::abs(g.mean[1 - hi] - 0.1) < 0.05);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const bool assigned_hi = g.posterior(vals[i], hi) > 0.5;
            correct += assigned_hi == (i >= 100);
        }
        CHECK(correct >= 196);  // >= 98%
    }
}

TEST_CASE("identical values collapse both components to the value") {
    const std::vector<double> vals(10, 0.42);
    const Gmm1d g = fit_gmm_1d(vals);
    CHECK(g.mean[0] == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(g.mean[1] == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(g.stddev[0] == 1e-4);
    CHECK(g.stddev[1] == 1e-4);
}

TEST_CASE("degenerate inputs") {
    CHECK(fit_gmm_1d({}).degenerate);
    const Gmm1d one = fit_gmm_1d({0.7});
    CHECK(one.degenerate);
    CHECK(one.mean[0] == 0.7);
}

TEST_CASE("fitted likelihood beats a coarse grid search") {
    Rng rng(33);
    const std::vector<double> vals = {0.05, 0.12, 0.18, 0.82, 0.88, 0.95};
    const Gmm1d g = fit_gmm_1d(vals);

    // Grid over (mu0, mu1, w) with the fitted sigmas held fixed.
    auto ll = [&](double m0, double m1, double w) {
        double total = 0.0;
        for (double v : vals) {
            const double p0 = (1.0 - w) *
                              std::exp(-0.5 * std::pow((v - m0) / g.stddev[0], 2)) /
                              (g.stddev[0] * std::sqrt(2.0 * M_PI));
            const double p1 = w * std::exp(-0.5 * std::pow((v - m1) / g.stddev[1], 2)) /
                              (g.stddev[1] * std::sqrt(2.0 * M_PI));
            total += std::log(std::max(p0 + p1, 1e-300));
        }
        return total;
    };
    double best = -1e300;
    for (int a = 0; a <= 30; ++a)
        for (int b = 0; b <= 30; ++b)
            for (int c = 1; c <= 9; ++c)
                best = std::max(best, ll(a / 30.0, b / 30.0, c / 10.0));
    CHECK(g.log_likelihood >= best - 0.5);
}

TEST_CASE("EM log-likelihood is non-decreasing across iterations") {
    Rng rng(34);
    const auto vals = two_cluster(60, 0.2, 0.7, 0.08, rng);
    double prev = -1e300;
    for (int iters = 1; iters <= 25; ++iters) {
        const Gmm1d g = fit_gmm_1d(vals, iters);
        CHECK(g.log_likelihood >= prev - 1e-10);
        prev = g.log_likelihood;
    }
}

TEST_CASE("select_clean marks the high cluster clean") {
    Rng rng(35);
    const std::size_t n = 120;
    AssignmentMatrix am;
    am.gamma = Matrix(n, 2);
    std::vector<int> labels(n, 0);
    std::vector<bool> expect(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool high = i % 3 != 0;  // two thirds in the 0.9 cluster
        const double v = high ? rng.normal(0.9, 0.02) : rng.normal(0.1, 0.02);
        am.gamma(i, 0) = v;
        am.gamma(i, 1) = 1.0 - v;
        expect[i] = high;
    }
    const SelectionResult res = select_clean(am, labels, 2);
    CHECK(res.clean_mask == expect);
    CHECK(res.per_class_clean_counts[0] == 80);
    CHECK(res.per_class_clean_counts[1] == 0);
    CHECK(res.class_forced_clean[1]);  // no samples labeled 1

    // Posterior is monotone here, so clean indices form a suffix of the
    // ascending value order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return am.gamma(a, 0) < am.gamma(b, 0); });
    bool seen_clean = false;
    for (std::size_t i : order) {
        if (res.clean_mask[i]) seen_clean = true;
        else CHECK(!seen_clean);
    }
}

TEST_CASE("saturated values are all clean when the other component sits near zero") {
    Rng rng(36);
    AssignmentMatrix am;
    am.gamma = Matrix(44, 2);
    std::vector<int> labels(44, 0);
    // 40 saturated values plus a small component near zero: the high
    // component's posterior saturates over the whole >= 0.99 cluster.
    for (std::size_t i = 0; i < 44; ++i) {
        am.gamma(i, 0) = i < 40 ? rng.uniform(0.99, 0.999) : rng.uniform(0.01, 0.05);
        am.gamma(i, 1) = 1.0 - am.gamma(i, 0);
    }
    const SelectionResult res = select_clean(am, labels, 2);
    for (std::size_t i = 0; i < 40; ++i) CHECK(res.clean_mask[i]);
    for (std::size_t i = 40; i < 44; ++i) CHECK(!res.clean_mask[i]);
}

TEST_CASE("a unimodal class is kept whole instead of being split") {
    Rng rng(39);
    const std::size_t n = 100;
    AssignmentMatrix am;
    am.gamma = Matrix(n, 2);
    std::vector<int> labels(n, 0);
    // One tight cluster: any two-component fit here is spurious.
    for (std::size_t i = 0; i < n; ++i) {
        am.gamma(i, 0) = rng.normal(0.4, 0.005);
        am.gamma(i, 1) = 1.0 - am.gamma(i, 0);
    }
    const SelectionResult res = select_clean(am, labels, 2);
    CHECK(res.class_forced_clean[0]);
    CHECK(res.per_class_clean_counts[0] == static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) CHECK(res.clean_mask[i]);
}

TEST_CASE("tiny classes are forced clean with posterior 1") {
    AssignmentMatrix am;
    am.gamma = Matrix(3, 2);
    am.gamma(0, 0) = 0.2;
    am.gamma(0, 1) = 0.8;
    am.gamma(1, 0) = 0.6;
    am.gamma(1, 1) = 0.4;
    am.gamma(2, 0) = 0.5;
    am.gamma(2, 1) = 0.5;
    const std::vector<int> labels = {1, 0, 0};
    const SelectionResult res = select_clean(am, labels, 2);
    CHECK(res.clean_mask[0]);
    CHECK(res.clean_posterior[0] == 1.0);
    CHECK(res.class_forced_clean[1]);
}

TEST_CASE("permuting sample order permutes the selection") {
    Rng rng(37);
    const std::size_t n = 50;
    AssignmentMatrix am;
    am.gamma = naive::random_prob_rows(n, 3, rng);
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(rng.index(3));
    const SelectionResult a = select_clean(am, labels, 3);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    AssignmentMatrix pm;
    pm.gamma = Matrix(n, 3);
    std::vector<int> plabels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(am.gamma.row(perm[i]).begin(), am.gamma.row(perm[i]).end(), pm.gamma.row(i).begin());
        plabels[i] = labels[perm[i]];
    }
    const SelectionResult b = select_clean(pm, plabels, 3);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(b.clean_mask[i] == a.clean_mask[perm[i]]);
        CHECK(b.clean_posterior[i] == doctest::Approx(a.clean_posterior[perm[i]]).epsilon(1e-12));
    }
}

TEST_CASE("select_clean is deterministic") {
    Rng rng(38);
    AssignmentMatrix am;
    am.gamma = naive::random_prob_rows(30, 4, rng);
    std::vector<int> labels(30);
    for (auto& y : labels) y = static_cast<int>(rng.index(4));
    const SelectionResult a = select_clean(am, labels, 4);
    const SelectionResult b = select_clean(am, labels, 4);
    CHECK(a.clean_mask == b.clean_mask);
    CHECK(a.clean_posterior == b.clean_posterior);
}
