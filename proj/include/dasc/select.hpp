#pragma once

#include <vector>

#include "dasc/centroid.hpp"

namespace dasc {

struct Gmm1d {
    double weight[2] = {0.5, 0.5};
    double mean[2] = {0.0, 0.0};
    double stddev[2] = {1.0, 1.0};
    double log_likelihood = 0.0;
    int iterations = 0;
    bool degenerate = false;  // fewer than 2 values; both components equal

    int clean_component() const { return mean[1] >= mean[0] ? 1 : 0; }
    // Posterior of `x` under the given component.
    double posterior(double x, int component) const;
};

struct GmmParams {
    std::vector<Gmm1d> per_class;
};

struct SelectionResult {
    std::vector<bool> clean_mask;
    std::vector<double> clean_posterior;       // in [0,1]
    GmmParams gmm;
    std::vector<int> per_class_clean_counts;   // length K
    std::vector<bool> class_forced_clean;      // too few samples or unimodal fit
};

// 2-component EM with deterministic init (components at the 25th/75th
// percentiles, equal weights, pooled std). Stddevs are floored at 1e-4.
Gmm1d fit_gmm_1d(const std::vector<double>& values, int max_iter = 100, double tol = 1e-6);

// Per class k: fit a GMM over {gamma[i,k] : noisy_labels[i]=k}; the
// higher-mean component is clean; clean iff its posterior > 0.5.
SelectionResult select_clean(const AssignmentMatrix& gamma, const std::vector<int>& noisy_labels,
                             int K);

}  // namespace dasc
