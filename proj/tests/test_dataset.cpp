#include <cmath>
#include <cstdio>
#include <fstream>

#include "dasc/dataset.hpp"
#include "dasc/rng.hpp"
#include "doctest.h"

using namespace dasc;

TEST_CASE("make_longtail_counts balanced when rho is 1") {
    GenSpec s;
    s.K = 5;
    s.n_max = 100;
    s.rho = 1.0;
    CHECK(make_longtail_counts(s) == std::vector<int>{100, 100, 100, 100, 100});
}

TEST_CASE("make_longtail_counts geometric decay") {
    GenSpec s;
    s.K = 3;
    s.n_max = 90;
    s.rho = 0.01;
    // 90 * 0.01^(k/2) for k = 0,1,2 -> 90, 9, 0.9 (floored to 1).
    CHECK(make_longtail_counts(s) == std::vector<int>{90, 9, 1});

    s.K = 2;
    s.n_max = 10;
    s.rho = 0.5;
    CHECK(make_longtail_counts(s) == std::vector<int>{10, 5});
}

TEST_CASE("make_longtail_counts is non-increasing with ratio near rho") {
    Rng rng(11);
    for (int c = 0; c < 100; ++c) {
        GenSpec s;
        s.K = 2 + static_cast<int>(rng.index(15));
        s.n_max = 100 + static_cast<int>(rng.index(2000));
        s.rho = rng.uniform(0.05, 1.0);
        const auto counts = make_longtail_counts(s);
        for (std::size_t k = 1; k < counts.size(); ++k) CHECK(counts[k] <= counts[k - 1]);
        // Last count is round(n_max * rho), so the realized ratio sits within
        // half a rounding unit of rho.
        const double ratio = static_cast<double>(counts.back()) / counts.front();
        CHECK(std::abs(ratio - s.rho) <= 0.5 / s.n_max + 1e-12);
    }
}

TEST_CASE("generate_synthetic without noise keeps labels equal") {
    GenSpec s;
    s.K = 4;
    s.d = 6;
    s.n_max = 50;
    s.rho = 0.5;
    s.seed = 9;
    const Dataset ds = generate_synthetic(s);
    CHECK(ds.noisy_labels == ds.true_labels);
    CHECK(ds.has_true_labels());
    ds.validate();
}

TEST_CASE("generate_synthetic is deterministic per seed") {
    GenSpec s;
    s.K = 3;
    s.d = 4;
    s.n_max = 40;
    s.rho = 0.3;
    s.noise_type = NoiseType::symmetric;
    s.noise_ratio = 0.2;
    s.seed = 123;
    const Dataset a = generate_synthetic(s);
    const Dataset b = generate_synthetic(s);
    CHECK(a.features.data == b.features.data);
    CHECK(a.noisy_labels == b.noisy_labels);
    CHECK(a.true_labels == b.true_labels);

    // A different sample stream shares prototypes but not samples.
    const Dataset c = generate_synthetic(s, 1);
    CHECK(c.features.data != a.features.data);
}

TEST_CASE("inject_noise zero ratio is identity") {
    GenSpec s;
    s.K = 3;
    s.d = 3;
    s.n_max = 30;
    const Dataset ds = generate_synthetic(s);
    const Dataset out = inject_noise(ds, NoiseType::symmetric, 0.0, 5);
    CHECK(out.noisy_labels == ds.noisy_labels);
}

TEST_CASE("inject_noise symmetric flip fraction concentrates") {
    GenSpec s;
    s.K = 5;
    s.d = 2;
    s.n_max = 2000;
    s.rho = 1.0;
    s.seed = 4;
    const Dataset ds = generate_synthetic(s);
    const Dataset out = inject_noise(ds, NoiseType::symmetric, 0.4, 77);
    REQUIRE(out.size() == 10000);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < out.size(); ++i) flips += out.noisy_labels[i] != out.true_labels[i];
    const double frac = static_cast<double>(flips) / out.size();
    CHECK(frac >= 0.37);
    CHECK(frac <= 0.43);
    CHECK(out.true_labels == ds.true_labels);
    CHECK(out.size() == ds.size());

    // Conditioned on a flip, wrong labels should be near-uniform over the
    // K-1 alternatives (chi-square sanity bound).
    std::vector<std::size_t> wrong(s.K, 0);
    std::size_t n_wrong = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.noisy_labels[i] != out.true_labels[i]) {
            wrong[out.noisy_labels[i]]++;
            n_wrong++;
        }
    }
    // Every class collects flips from the others; expected share 1/K of all
    // flips under uniformity (balanced data). chi2 with 4 dof, loose cut.
    double chi2 = 0.0;
    const double expect = static_cast<double>(n_wrong) / s.K;
    for (int k = 0; k < s.K; ++k) chi2 += (wrong[k] - expect) * (wrong[k] - expect) / expect;
    CHECK(chi2 < 30.0);
}

TEST_CASE("inject_noise asymmetric uses the cyclic map") {
    GenSpec s;
    s.K = 4;
    s.d = 2;
    s.n_max = 200;
    s.rho = 1.0;
    const Dataset ds = generate_synthetic(s);
    const Dataset out = inject_noise(ds, NoiseType::asymmetric, 0.9, 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.noisy_labels[i] != out.true_labels[i])
            CHECK(out.noisy_labels[i] == (out.true_labels[i] + 1) % s.K);
    }
}

TEST_CASE("exact quota flips exactly round(ratio*N)") {
    GenSpec s;
    s.K = 3;
    s.d = 2;
    s.n_max = 100;
    s.rho = 1.0;
    const Dataset ds = generate_synthetic(s);
    const Dataset out = inject_noise(ds, NoiseType::symmetric, 0.25, 6, true);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < out.size(); ++i) flips += out.noisy_labels[i] != out.true_labels[i];
    CHECK(flips == 75);  // 0.25 * 300
}

TEST_CASE("dataset save/load round-trips") {
    GenSpec s;
    s.K = 3;
    s.d = 5;
    s.n_max = 25;
    s.rho = 0.4;
    s.noise_type = NoiseType::symmetric;
    s.noise_ratio = 0.3;
    const Dataset ds = generate_synthetic(s);
    const std::string path = "roundtrip_test.txt";
    save_dataset(ds, path);
    const Dataset back = load_dataset(path);
    CHECK(back.features.data == ds.features.data);
    CHECK(back.noisy_labels == ds.noisy_labels);
    CHECK(back.true_labels == ds.true_labels);
    CHECK(back.K == ds.K);
    CHECK(back.class_counts == ds.class_counts);
    std::remove(path.c_str());
}

TEST_CASE("load_dataset rejects out-of-range labels naming the line") {
    const std::string path = "badlabel_test.txt";
    {
        std::ofstream f(path);
        f << "1 5 2\n0 7 0 1.0 2.0\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line 2"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("load_dataset rejects an empty file") {
    const std::string path = "empty_test.txt";
    { std::ofstream f(path); }
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("no header"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("spec validation rejects bad parameters") {
    GenSpec s;
    s.noise_ratio = 1.5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = GenSpec{};
    s.K = 1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = GenSpec{};
    s.rho = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
