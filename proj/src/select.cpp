#include "dasc/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dasc {

namespace {

constexpr double kSigmaFloor = 1e-4;

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

double percentile(std::vector<double> sorted, double q) {
    const double pos = q * (sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

double Gmm1d::posterior(double x, int component) const {
    const double p0 = weight[0] * normal_pdf(x, mean[0], stddev[0]);
    const double p1 = weight[1] * normal_pdf(x, mean[1], stddev[1]);
    const double total = p0 + p1;
    if (total <= 0.0) return 0.5;  // both densities underflow; no information
    return (component == 0 ? p0 : p1) / total;
}

Gmm1d fit_gmm_1d(const std::vector<double>& values, int max_iter, double tol) {
    Gmm1d g;
    const std::size_t n = values.size();
    if (n < 2) {
        g.degenerate = true;
        if (n == 1) {
            g.mean[0] = g.mean[1] = values[0];
            g.stddev[0] = g.stddev[1] = kSigmaFloor;
        }
        return g;
    }

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double mean_all = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double var = 0.0;
    for (double v : sorted) var += (v - mean_all) * (v - mean_all);
    var /= n;
    const double pooled = std::max(std::sqrt(var), kSigmaFloor);

    g.mean[0] = percentile(sorted, 0.25);
    g.mean[1] = percentile(sorted, 0.75);
    g.stddev[0] = g.stddev[1] = pooled;
    g.weight[0] = g.weight[1] = 0.5;

    std::vector<double> resp(n);  // responsibility of component 1
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        // E step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p0 = g.weight[0] * normal_pdf(values[i], g.mean[0], g.stddev[0]);
            const double p1 = g.weight[1] * normal_pdf(values[i], g.mean[1], g.stddev[1]);
            const double total = p0 + p1;
            resp[i] = total > 0.0 ? p1 / total : 0.5;
            ll += std::log(std::max(total, 1e-300));
        }
        g.log_likelihood = ll;
        g.iterations = it + 1;
        if (ll - prev_ll < tol && it > 0) break;
        prev_ll = ll;

        // M step
        double n1 = 0.0;
        for (double r : resp) n1 += r;
        const double n0 = n - n1;
        if (n0 <= 0.0 || n1 <= 0.0) break;  // one component empty; keep last params
        double m0 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m0 += (1.0 - resp[i]) * values[i];
            m1 += resp[i] * values[i];
        }
        m0 /= n0;
        m1 /= n1;
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v0 += (1.0 - resp[i]) * (values[i] - m0) * (values[i] - m0);
            v1 += resp[i] * (values[i] - m1) * (values[i] - m1);
        }
        g.weight[1] = n1 / n;
        g.weight[0] = 1.0 - g.weight[1];
        g.mean[0] = m0;
        g.mean[1] = m1;
        g.stddev[0] = std::max(std::sqrt(v0 / n0), kSigmaFloor);
        g.stddev[1] = std::max(std::sqrt(v1 / n1), kSigmaFloor);
    }
    return g;
}

SelectionResult select_clean(const AssignmentMatrix& gamma, const std::vector<int>& noisy_labels,
                             int K) {
    const std::size_t n = gamma.gamma.rows;
    if (noisy_labels.size() != n) throw std::invalid_argument("select_clean: label size mismatch");
    for (int y : noisy_labels)
        if (y < 0 || y >= K) throw std::invalid_argument("select_clean: label out of range");

    std::vector<std::vector<std::size_t>> by_class(K);
    for (std::size_t i = 0; i < n; ++i) by_class[noisy_labels[i]].push_back(i);

    SelectionResult res;
    res.clean_mask.assign(n, false);
    res.clean_posterior.assign(n, 0.0);
    res.gmm.per_class.resize(K);
    res.per_class_clean_counts.assign(K, 0);
    res.class_forced_clean.assign(K, false);

    std::vector<std::vector<double>> posteriors(K);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < K; ++k) {
        const auto& idx = by_class[k];
        std::vector<double> vals(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) vals[j] = gamma.gamma(idx[j], k);
        Gmm1d g = fit_gmm_1d(vals);
        res.gmm.per_class[k] = g;
        posteriors[k].resize(idx.size());
        // Ashman's D < 2 means the two fitted components are not separable,
        // i.e. the class values are effectively unimodal and the split is an
        // artifact of forcing two components. Keep the whole class rather
        // than discarding whichever half of a single cluster the narrower
        // component missed.
        const double sep = std::abs(g.mean[1] - g.mean[0]) * std::sqrt(2.0) /
                           std::sqrt(g.stddev[0] * g.stddev[0] + g.stddev[1] * g.stddev[1]);
        if (g.degenerate || sep < 2.0) {
            // Too few samples to fit (or nothing to split); starving a tail
            // class entirely is worse than admitting possible noise.
            res.class_forced_clean[k] = true;
            std::fill(posteriors[k].begin(), posteriors[k].end(), 1.0);
        } else {
            const int clean = g.clean_component();
            for (std::size_t j = 0; j < idx.size(); ++j)
                posteriors[k][j] = g.posterior(vals[j], clean);
        }
    }

    // Deterministic merge by class index.
    for (int k = 0; k < K; ++k) {
        const auto& idx = by_class[k];
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const double p = posteriors[k][j];
            res.clean_posterior[idx[j]] = p;
            if (p > 0.5) {
                res.clean_mask[idx[j]] = true;
                res.per_class_clean_counts[k]++;
            }
        }
    }
    return res;
}

}  // namespace dasc
