#pragma once

#include <vector>

#include "dasc/matrix.hpp"

namespace dasc {

struct CentroidSet {
    Matrix centroids;               // K x d_proj, rows unit norm where defined
    std::vector<bool> defined;      // per class; false when the weighted sum degenerated
    std::vector<bool> confident_mask;  // membership in the confident subset
    double tau_used = 0.0;

    bool all_defined() const;
};

struct AssignmentMatrix {
    Matrix gamma;  // N x K, rows are probability vectors
};

// tau = min(phi^t * tau_hat, 0.999); tau_hat defaults to 1/K.
double threshold_schedule(int epoch, int K, double phi, double tau_hat);
inline double threshold_schedule(int epoch, int K, double phi = 1.005) {
    return threshold_schedule(epoch, K, phi, 1.0 / K);
}

// Row-wise softmax of preds / tau_T.
Matrix temperature_scale(const Matrix& preds, double tau_T);

// mask[i] iff both classifiers' max predicted probability exceeds tau.
std::vector<bool> confident_subset(const Matrix& preds_c, const Matrix& preds_b, double tau);

// Weighted centroids over the confident subset; weights are the
// temperature-scaled conventional-classifier predictions. Noisy labels are not
// used. Degenerate classes fall back to `previous` when provided, else stay
// undefined. `use_temperature_scaling=false` uses the raw predictions as
// weights; `restrict_to_confident=false` sums over the whole set.
CentroidSet estimate_centroids(const Matrix& projections, const Matrix& preds_c,
                               const Matrix& preds_b, double tau, double tau_T,
                               const CentroidSet* previous = nullptr,
                               bool use_temperature_scaling = true,
                               bool restrict_to_confident = true);

// Baseline estimator: per class, mean of high-confidence samples carrying that
// noisy label (low-confidence samples are excluded entirely).
CentroidSet estimate_centroids_per_class(const Matrix& projections, const Matrix& preds_c,
                                         const std::vector<int>& noisy_labels, int K, double tau,
                                         const CentroidSet* previous = nullptr);

// Noisy-label class means over all samples; used as the first-epoch fallback.
CentroidSet class_mean_centroids(const Matrix& projections, const std::vector<int>& noisy_labels,
                                 int K);

// Row-wise softmax over dot products projection . centroid.
AssignmentMatrix assignment_probabilities(const Matrix& projections, const CentroidSet& centroids);

}  // namespace dasc
