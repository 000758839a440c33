#pragma once

#include <random>
#include <sstream>
#include <string>

namespace dasc {

// Thin wrapper so RNG state can be checkpointed (mt19937_64 streams its state).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::mt19937_64& engine() { return engine_; }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        std::normal_distribution<double> d(mean, stddev);
        return d(engine_);
    }
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(engine_);
    }
    // Beta(a,a) via two gammas.
    double beta(double a) {
        std::gamma_distribution<double> g(a, 1.0);
        double x = g(engine_);
        double y = g(engine_);
        return x / (x + y);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }
    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dasc
