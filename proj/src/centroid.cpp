#include "dasc/centroid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dasc {

namespace {

constexpr double kSumNormFloor = 1e-12;
constexpr double kTauCap = 0.999;

// Normalizes row k of `cs.centroids` from an accumulated weighted sum, falling
// back to `previous` when degenerate.
void finalize_centroid(CentroidSet& cs, std::size_t k, const CentroidSet* previous) {
    double n = l2_norm(cs.centroids.row(k));
    if (n >= kSumNormFloor) {
        for (std::size_t c = 0; c < cs.centroids.cols; ++c) cs.centroids(k, c) /= n;
        cs.defined[k] = true;
    } else if (previous && k < previous->defined.size() && previous->defined[k]) {
        for (std::size_t c = 0; c < cs.centroids.cols; ++c) cs.centroids(k, c) = previous->centroids(k, c);
        cs.defined[k] = true;
    } else {
        cs.defined[k] = false;
    }
}

}  // namespace

bool CentroidSet::all_defined() const {
    return std::all_of(defined.begin(), defined.end(), [](bool b) { return b; });
}

double threshold_schedule(int epoch, int K, double phi, double tau_hat) {
    if (epoch < 0) throw std::invalid_argument("threshold_schedule: epoch must be >= 0");
    (void)K;
    return std::min(std::pow(phi, epoch) * tau_hat, kTauCap);
}

Matrix temperature_scale(const Matrix& preds, double tau_T) {
    if (!(tau_T > 0.0)) throw std::invalid_argument("temperature_scale: tau_T must be > 0");
    Matrix w = preds;
    for (double& x : w.data) x /= tau_T;
    for (std::size_t r = 0; r < w.rows; ++r) softmax_inplace(w.row(r));
    return w;
}

std::vector<bool> confident_subset(const Matrix& preds_c, const Matrix& preds_b, double tau) {
    if (preds_c.rows != preds_b.rows || preds_c.cols != preds_b.cols)
        throw std::invalid_argument("confident_subset: shape mismatch");
    std::vector<bool> mask(preds_c.rows);
    for (std::size_t i = 0; i < preds_c.rows; ++i) {
        double mc = *std::max_element(preds_c.row(i).begin(), preds_c.row(i).end());
        double mb = *std::max_element(preds_b.row(i).begin(), preds_b.row(i).end());
        mask[i] = mc > tau && mb > tau;
    }
    return mask;
}

CentroidSet estimate_centroids(const Matrix& projections, const Matrix& preds_c,
                               const Matrix& preds_b, double tau, double tau_T,
                               const CentroidSet* previous, bool use_temperature_scaling,
                               bool restrict_to_confident) {
    const std::size_t n = projections.rows;
    const std::size_t K = preds_c.cols;
    if (preds_c.rows != n || preds_b.rows != n)
        throw std::invalid_argument("estimate_centroids: shape mismatch");

    const Matrix weights = use_temperature_scaling ? temperature_scale(preds_c, tau_T) : preds_c;
    std::vector<bool> mask = restrict_to_confident ? confident_subset(preds_c, preds_b, tau)
                                                   : std::vector<bool>(n, true);

    CentroidSet cs;
    cs.centroids = Matrix(K, projections.cols);
    cs.defined.assign(K, false);
    cs.confident_mask = mask;
    cs.tau_used = tau;

    // One class per thread; the sample loop stays in index order so the
    // accumulation is deterministic for any thread count.
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(K); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask[i]) continue;
            const double w = weights(i, k);
            for (std::size_t c = 0; c < projections.cols; ++c)
                cs.centroids(k, c) += w * projections(i, c);
        }
        finalize_centroid(cs, static_cast<std::size_t>(k), previous);
    }

    if (std::none_of(cs.defined.begin(), cs.defined.end(), [](bool b) { return b; }))
        throw std::runtime_error(
            "estimate_centroids: every centroid is undefined and no fallback is available; "
            "lower the confidence threshold tau");
    return cs;
}

CentroidSet estimate_centroids_per_class(const Matrix& projections, const Matrix& preds_c,
                                         const std::vector<int>& noisy_labels, int K, double tau,
                                         const CentroidSet* previous) {
    const std::size_t n = projections.rows;
    if (noisy_labels.size() != n || preds_c.rows != n)
        throw std::invalid_argument("estimate_centroids_per_class: shape mismatch");

    std::vector<bool> mask(n);
    for (std::size_t i = 0; i < n; ++i)
        mask[i] = *std::max_element(preds_c.row(i).begin(), preds_c.row(i).end()) > tau;

    CentroidSet cs;
    cs.centroids = Matrix(K, projections.cols);
    cs.defined.assign(K, false);
    cs.confident_mask = mask;
    cs.tau_used = tau;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask[i] || noisy_labels[i] != k) continue;
            for (std::size_t c = 0; c < projections.cols; ++c)
                cs.centroids(k, c) += projections(i, c);
        }
        finalize_centroid(cs, static_cast<std::size_t>(k), previous);
    }
    if (std::none_of(cs.defined.begin(), cs.defined.end(), [](bool b) { return b; }))
        throw std::runtime_error(
            "estimate_centroids_per_class: every centroid is undefined; lower tau");
    return cs;
}

CentroidSet class_mean_centroids(const Matrix& projections, const std::vector<int>& noisy_labels,
                                 int K) {
    CentroidSet cs;
    cs.centroids = Matrix(K, projections.cols);
    cs.defined.assign(K, false);
    cs.confident_mask.assign(projections.rows, true);
    for (std::size_t i = 0; i < projections.rows; ++i) {
        const int k = noisy_labels[i];
        for (std::size_t c = 0; c < projections.cols; ++c) cs.centroids(k, c) += projections(i, c);
    }
    for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) finalize_centroid(cs, k, nullptr);
    return cs;
}

AssignmentMatrix assignment_probabilities(const Matrix& projections, const CentroidSet& centroids) {
    if (!centroids.all_defined())
        throw std::runtime_error("assignment_probabilities: undefined centroid present");
    const std::size_t n = projections.rows;
    const std::size_t K = centroids.centroids.rows;
    AssignmentMatrix am;
    am.gamma = Matrix(n, K);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        for (std::size_t k = 0; k < K; ++k)
            am.gamma(i, k) = dot(projections.row(i), centroids.centroids.row(k));
        softmax_inplace(am.gamma.row(i));
    }
    return am;
}

}  // namespace dasc
