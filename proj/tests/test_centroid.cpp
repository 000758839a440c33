#include <cmath>

#include "dasc/centroid.hpp"
#include "doctest.h"
#include "naive_ref.hpp"

using namespace dasc;

TEST_CASE("threshold schedule") {
    CHECK(threshold_schedule(100, 10) == doctest::Approx(std::pow(1.005, 100) * 0.1).epsilon(1e-12));
    CHECK(threshold_schedule(100, 10) == doctest::Approx(0.1647).epsilon(1e-3));
    for (int t : {0, 5, 50, 500}) CHECK(threshold_schedule(t, 10, 1.0) == doctest::Approx(0.1));
    CHECK(threshold_schedule(10000, 10) == 0.999);  // capped
    CHECK_THROWS_AS(threshold_schedule(-1, 10), std::invalid_argument);
}

TEST_CASE("temperature scaling pinned values") {
    Matrix uniform(1, 4, 0.25);
    const Matrix u = temperature_scale(uniform, 0.37);
    for (double v : u.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    Matrix row(1, 2);
    row(0, 0) = 0.9;
    row(0, 1) = 0.1;
    const Matrix w = temperature_scale(row, 0.1);  // softmax of (9, 1)
    const double e8 = std::exp(8.0);
    CHECK(w(0, 0) == doctest::Approx(e8 / (e8 + 1.0)).epsilon(1e-12));
    CHECK(w(0, 0) == doctest::Approx(0.99966).epsilon(1e-4));
    CHECK(w(0, 1) == doctest::Approx(0.00034).epsilon(2e-2));

    const Matrix flat = temperature_scale(row, 1e6);  // high temperature flattens
    CHECK(flat(0, 0) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("temperature scaling preserves ranking and sharpens") {
    Rng rng(21);
    for (int c = 0; c < 100; ++c) {
        const Matrix p = naive::random_prob_rows(1, 5, rng);
        const Matrix w1 = temperature_scale(p, 0.2);
        const Matrix w2 = temperature_scale(p, 0.1);
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = 0; b < 5; ++b)
                if (p(0, a) > p(0, b)) CHECK(w1(0, a) > w1(0, b));
        const double m1 = *std::max_element(w1.row(0).begin(), w1.row(0).end());
        const double m2 = *std::max_element(w2.row(0).begin(), w2.row(0).end());
        CHECK(m2 > m1);  // lower temperature boosts the top weight
    }
}

TEST_CASE("confident subset rules") {
    Matrix pc(1, 2), pb(1, 2);
    pc(0, 0) = 0.5;
    pc(0, 1) = 0.5;
    pb(0, 0) = 0.95;
    pb(0, 1) = 0.05;
    CHECK(confident_subset(pc, pb, 0.6) == std::vector<bool>{false});  // both must pass
    CHECK(confident_subset(pc, pb, 0.0) == std::vector<bool>{true});

    Matrix hc(2, 2), hb(2, 2);
    hc(0, 0) = 0.9995;
    hc(0, 1) = 0.0005;
    hb(0, 0) = 0.9999;
    hb(0, 1) = 0.0001;
    hc(1, 0) = 0.99;
    hc(1, 1) = 0.01;
    hb(1, 0) = 0.9995;
    hb(1, 1) = 0.0005;
    CHECK(confident_subset(hc, hb, 0.999) == std::vector<bool>{true, false});
}

TEST_CASE("confident subset is monotone in tau") {
    Rng rng(22);
    for (int c = 0; c < 100; ++c) {
        const Matrix pc = naive::random_prob_rows(12, 4, rng);
        const Matrix pb = naive::random_prob_rows(12, 4, rng);
        const double lo = rng.uniform(0.0, 0.5);
        const double hi = lo + rng.uniform(0.0, 0.5);
        const auto mlo = confident_subset(pc, pb, lo);
        const auto mhi = confident_subset(pc, pb, hi);
        for (std::size_t i = 0; i < mlo.size(); ++i)
            if (mhi[i]) CHECK(mlo[i]);  // raising tau only shrinks the subset
    }
}

TEST_CASE("single confident sample dominates every centroid") {
    Rng rng(23);
    const Matrix z = naive::random_unit_rows(4, 3, rng);
    Matrix pc(4, 2, 0.5), pb(4, 2, 0.5);
    pc(1, 0) = 0.95;
    pc(1, 1) = 0.05;
    pb(1, 0) = 0.9;
    pb(1, 1) = 0.1;
    const CentroidSet cs = estimate_centroids(z, pc, pb, 0.6, 0.1);
    for (int k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(cs.centroids(k, j) == doctest::Approx(z(1, j)).epsilon(1e-12));
}

TEST_CASE("two orthogonal samples with equal weight average symmetrically") {
    Matrix z(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = 1.0;
    Matrix pc(2, 2), pb(2, 2);
    for (int i = 0; i < 2; ++i) {
        pc(i, 0) = 0.8;  // equal rows: equal temperature-scaled weights
        pc(i, 1) = 0.2;
        pb(i, 0) = 0.8;
        pb(i, 1) = 0.2;
    }
    const CentroidSet cs = estimate_centroids(z, pc, pb, 0.5, 0.1);
    const double r = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < 2; ++k) {
        CHECK(cs.centroids(k, 0) == doctest::Approx(r).epsilon(1e-12));
        CHECK(cs.centroids(k, 1) == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("estimate_centroids matches the naive oracle") {
    Rng rng(24);
    for (int c = 0; c < 100; ++c) {
        const std::size_t n = 5 + rng.index(16);
        const std::size_t K = 2 + rng.index(2);
        const Matrix z = naive::random_unit_rows(n, 4, rng);
        const Matrix pc = naive::random_prob_rows(n, K, rng);
        const Matrix pb = naive::random_prob_rows(n, K, rng);
        const double tau = rng.uniform(0.0, 0.4);
        const CentroidSet cs = estimate_centroids(z, pc, pb, tau, 0.1);
        const Matrix ref = naive::centroids(z, pc, pb, tau, 0.1);
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            CHECK(std::abs(cs.centroids.data[i] - ref.data[i]) < 1e-9);
    }
}

TEST_CASE("degenerate centroids fall back to previous, else throw") {
    Rng rng(25);
    const Matrix z = naive::random_unit_rows(3, 2, rng);
    const Matrix pc = naive::random_prob_rows(3, 3, rng);  // maxes below 0.999
    const Matrix pb = naive::random_prob_rows(3, 3, rng);
    CHECK_THROWS_AS(estimate_centroids(z, pc, pb, 0.9999, 0.1), std::runtime_error);

    CentroidSet prev;
    prev.centroids = naive::random_unit_rows(3, 2, rng);
    prev.defined.assign(3, true);
    const CentroidSet cs = estimate_centroids(z, pc, pb, 0.9999, 0.1, &prev);
    CHECK(cs.all_defined());
    CHECK(cs.centroids.data == prev.centroids.data);
}

TEST_CASE("assignment probabilities pinned values") {
    Matrix c(2, 2);
    c(0, 0) = 1.0;
    c(1, 1) = 1.0;
    CentroidSet cs;
    cs.centroids = c;
    cs.defined.assign(2, true);

    Matrix z(2, 2);
    z(0, 0) = 1.0;                  // z = c_0, orthogonal centroids
    z(1, 0) = 1.0 / std::sqrt(2.0);  // equidistant
    z(1, 1) = 1.0 / std::sqrt(2.0);
    const AssignmentMatrix am = assignment_probabilities(z, cs);
    const double e = std::exp(1.0);
    CHECK(am.gamma(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
    CHECK(am.gamma(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
    CHECK(am.gamma(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(am.gamma(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("assignment matches naive oracle and row sums are 1") {
    Rng rng(26);
    for (int c = 0; c < 100; ++c) {
        const std::size_t n = 3 + rng.index(10);
        const std::size_t K = 2 + rng.index(3);
        const Matrix z = naive::random_unit_rows(n, 3, rng);
        CentroidSet cs;
        cs.centroids = naive::random_unit_rows(K, 3, rng);
        cs.defined.assign(K, true);
        const AssignmentMatrix am = assignment_probabilities(z, cs);
        const Matrix ref = naive::gamma(z, cs.centroids);
        for (std::size_t i = 0; i < ref.data.size(); ++i)
            CHECK(std::abs(am.gamma.data[i] - ref.data[i]) < 1e-9);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) s += am.gamma(i, k);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("permuting centroid order permutes gamma columns") {
    Rng rng(27);
    const Matrix z = naive::random_unit_rows(6, 3, rng);
    CentroidSet cs;
    cs.centroids = naive::random_unit_rows(3, 3, rng);
    cs.defined.assign(3, true);
    const AssignmentMatrix a = assignment_probabilities(z, cs);

    CentroidSet swapped = cs;
    for (std::size_t j = 0; j < 3; ++j) {
        std::swap(swapped.centroids(0, j), swapped.centroids(2, j));
    }
    const AssignmentMatrix b = assignment_probabilities(z, swapped);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(b.gamma(i, 0) == doctest::Approx(a.gamma(i, 2)).epsilon(1e-12));
        CHECK(b.gamma(i, 2) == doctest::Approx(a.gamma(i, 0)).epsilon(1e-12));
        CHECK(b.gamma(i, 1) == doctest::Approx(a.gamma(i, 1)).epsilon(1e-12));
    }
}

TEST_CASE("per-class baseline averages only confident own-label samples") {
    Rng rng(28);
    const Matrix z = naive::random_unit_rows(6, 3, rng);
    std::vector<int> labels = {0, 0, 1, 1, 1, 0};
    Matrix pc(6, 2, 0.5);
    pc(0, 0) = 0.9;  // only rows 0 and 3 confident
    pc(0, 1) = 0.1;
    pc(3, 0) = 0.1;
    pc(3, 1) = 0.9;
    const CentroidSet cs = estimate_centroids_per_class(z, pc, labels, 2, 0.8);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(cs.centroids(0, j) == doctest::Approx(z(0, j)).epsilon(1e-12));
        CHECK(cs.centroids(1, j) == doctest::Approx(z(3, j)).epsilon(1e-12));
    }
}
