#include <cstdio>
#include <fstream>

#include "dasc/config.hpp"
#include "doctest.h"

using namespace dasc;

TEST_CASE("every registered key round-trips through set/get") {
    RunConfig cfg;
    for (const auto& key : RunConfig::keys()) {
        const std::string v = cfg.get(key);
        RunConfig other;
        other.set(key, v);
        CHECK(other.get(key) == v);
    }
}

TEST_CASE("unknown keys and bad values are rejected") {
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(cfg.set("no_such_key", "1"), doctest::Contains("unknown config key"),
                         std::invalid_argument);
    CHECK_THROWS_AS(cfg.get("no_such_key"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.set("epochs", "ten"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.set("rho", "0.1x"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.set("use_sbcl", "maybe"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.set("co_mode", "both"), std::invalid_argument);
}

TEST_CASE("typed keys reach their fields") {
    RunConfig cfg;
    cfg.set("K", "7");
    cfg.set("rho", "0.25");
    cfg.set("noise_type", "asym");
    cfg.set("hidden", "32,16");
    cfg.set("use_midl", "false");
    cfg.set("bank_keys", "plain");
    cfg.set("auc_score", "gamma");
    CHECK(cfg.gen.K == 7);
    CHECK(cfg.gen.rho == 0.25);
    CHECK(cfg.gen.noise_type == NoiseType::asymmetric);
    CHECK(cfg.net.hidden == std::vector<int>{32, 16});
    CHECK(!cfg.ablation.use_midl);
    CHECK(cfg.ablation.bank_keys == BankKeys::plain);
    CHECK(cfg.ablation.auc_on_gamma);
}

TEST_CASE("config file loads with comments; later settings override") {
    const std::string path = "cfg_test.conf";
    {
        std::ofstream f(path);
        f << "# comment line\n";
        f << "K=8\n";
        f << "rho = 0.5  # trailing comment\n";
        f << "\n";
        f << "epochs=20\n";
    }
    RunConfig cfg;
    cfg.load_file(path);
    CHECK(cfg.gen.K == 8);
    CHECK(cfg.gen.rho == 0.5);
    CHECK(cfg.train.epochs == 20);

    cfg.set("epochs", "30");  // flag-style override wins
    CHECK(cfg.train.epochs == 30);
    std::remove(path.c_str());
}

TEST_CASE("config file errors carry line numbers") {
    const std::string path = "cfg_bad.conf";
    {
        std::ofstream f(path);
        f << "K=4\nnot a pair\n";
    }
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(cfg.load_file(path), doctest::Contains(":2"), std::invalid_argument);
    std::remove(path.c_str());

    {
        std::ofstream f(path);
        f << "K=4\nrho=abc\n";
    }
    CHECK_THROWS_WITH_AS(cfg.load_file(path), doctest::Contains(":2"), std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("save/load round-trips the full configuration") {
    RunConfig cfg;
    cfg.set("K", "12");
    cfg.set("lambda_sbcl", "0.75");
    cfg.set("co_mode", "self");
    const std::string path = "cfg_roundtrip.conf";
    cfg.save_file(path);
    RunConfig back;
    back.load_file(path);
    CHECK(back.to_map() == cfg.to_map());
    std::remove(path.c_str());
}

TEST_CASE("hash is stable and sensitive") {
    RunConfig a, b;
    CHECK(a.hash() == b.hash());
    b.set("seed", "99");
    CHECK(a.hash() != b.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("validation flags bad training settings") {
    RunConfig cfg;
    cfg.set("epochs", "0");
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = RunConfig{};
    cfg.set("epochs", "10");
    cfg.set("warmup", "10");  // warmup must be < epochs
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = RunConfig{};
    cfg.set("tau_c", "1.5");
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = RunConfig{};
    cfg.set("epochs", "10");
    cfg.set("warmup", "4");
    cfg.set("sbcl_warmup", "2");
    CHECK_NOTHROW(cfg.validate());
}
