#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dasc/matrix.hpp"

namespace dasc {

enum class NoiseType { none, symmetric, asymmetric };

NoiseType parse_noise_type(const std::string& s);
std::string to_string(NoiseType t);

struct GenSpec {
    int K = 10;
    int d = 16;
    int n_max = 1000;
    double rho = 0.1;              // imbalance ratio, (0,1]
    double class_sep = 4.0;        // prototype spacing
    double intra_std = 1.0;        // within-class noise scale
    NoiseType noise_type = NoiseType::none;
    double noise_ratio = 0.0;      // [0,1)
    bool exact_quota = false;      // flip exactly round(ratio*N) labels instead of Bernoulli
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

struct Dataset {
    Matrix features;                  // N x d
    std::vector<int> noisy_labels;    // length N, in [0,K)
    std::vector<int> true_labels;     // length N, -1 when unknown (evaluation disabled)
    int K = 0;
    std::vector<int> class_counts;    // counts under noisy labels, length K
    std::string split_tag = "train";

    std::size_t size() const { return features.rows; }
    int dim() const { return static_cast<int>(features.cols); }
    bool has_true_labels() const;
    void recompute_class_counts();
    void validate() const;  // throws on invariant violation
};

// Read-only view handed to centroid/select/losses/train: no true labels.
struct TrainView {
    const Matrix& features;
    const std::vector<int>& noisy_labels;
    int K;
    const std::vector<int>& class_counts;

    explicit TrainView(const Dataset& ds)
        : features(ds.features), noisy_labels(ds.noisy_labels), K(ds.K), class_counts(ds.class_counts) {}
    std::size_t size() const { return features.rows; }
    int dim() const { return static_cast<int>(features.cols); }
};

// N_k = round(n_max * rho^((k-1)/(K-1))), floored at 1; non-increasing in k.
std::vector<int> make_longtail_counts(const GenSpec& spec);

// Class prototypes are random unit directions scaled by class_sep; samples are
// prototype + isotropic Gaussian noise. noisy_labels start equal to true_labels.
// Prototypes depend only on spec.seed; sample_stream decorrelates the sample
// draws so separate splits can share the same class geometry.
Dataset generate_synthetic(const GenSpec& spec, std::uint64_t sample_stream = 0);

// Symmetric: flip to a uniformly random other class. Asymmetric: flip to (k+1) mod K.
// Flips are independent Bernoulli(noise_ratio) unless exact_quota is set.
Dataset inject_noise(const Dataset& ds, NoiseType type, double noise_ratio, std::uint64_t seed,
                     bool exact_quota = false);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace dasc
