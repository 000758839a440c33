// Compares the parallel kernels against straightforward serial references:
// correctness (max abs deviation) and wall time.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dasc/centroid.hpp"
#include "dasc/net.hpp"
#include "dasc/rng.hpp"
#include "dasc/select.hpp"

using namespace dasc;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

Matrix random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            m(i, j) = rng.normal();
            norm += m(i, j) * m(i, j);
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d; ++j) m(i, j) /= norm;
    }
    return m;
}

Matrix random_prob_rows(std::size_t n, std::size_t k, Rng& rng) {
    Matrix m(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            m(i, j) = -std::log(rng.uniform(1e-12, 1.0));
            s += m(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) m(i, j) /= s;
    }
    return m;
}

// Serial reference for estimate_centroids: plain double loops, no pragmas.
Matrix centroids_reference(const Matrix& z, const Matrix& pc, const Matrix& pb, double tau,
                           double tau_T) {
    const std::size_t n = z.rows, k = pc.cols, d = z.cols;
    Matrix w(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = pc(i, 0);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, pc(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            w(i, j) = std::exp((pc(i, j) - mx) / tau_T);
            s += w(i, j);
        }
        for (std::size_t j = 0; j < k; ++j) w(i, j) /= s;
    }
    Matrix c(k, d);
    for (std::size_t cls = 0; cls < k; ++cls) {
        for (std::size_t i = 0; i < n; ++i) {
            double mc = 0.0, mb = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                mc = std::max(mc, pc(i, j));
                mb = std::max(mb, pb(i, j));
            }
            if (mc <= tau || mb <= tau) continue;
            for (std::size_t j = 0; j < d; ++j) c(cls, j) += w(i, cls) * z(i, j);
        }
        double norm = l2_norm(c.row(cls));
        if (norm > 1e-12)
            for (std::size_t j = 0; j < d; ++j) c(cls, j) /= norm;
    }
    return c;
}

Matrix gamma_reference(const Matrix& z, const Matrix& c) {
    Matrix g(z.rows, c.rows);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t k = 0; k < c.rows; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < z.cols; ++j) s += z(i, j) * c(k, j);
            g(i, k) = s;
        }
        double mx = g(i, 0);
        for (std::size_t k = 1; k < c.rows; ++k) mx = std::max(mx, g(i, k));
        double sum = 0.0;
        for (std::size_t k = 0; k < c.rows; ++k) {
            g(i, k) = std::exp(g(i, k) - mx);
            sum += g(i, k);
        }
        for (std::size_t k = 0; k < c.rows; ++k) g(i, k) /= sum;
    }
    return g;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n = 20000;
    int K = 50, d = 32;
    int reps = 5;
    if (argc > 1) n = std::stoul(argv[1]);
    if (argc > 2) K = std::stoi(argv[2]);
    if (argc > 3) reps = std::stoi(argv[3]);

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif
    std::printf("n=%zu K=%d d=%d reps=%d\n", n, K, d, reps);

    Rng rng(7);
    const Matrix z = random_unit_rows(n, d, rng);
    const Matrix pc = random_prob_rows(n, K, rng);
    const Matrix pb = random_prob_rows(n, K, rng);
    const double tau = 1.5 / K, tau_T = 0.1;

    // Centroid estimation.
    CentroidSet cs;
    auto t0 = clock_type::now();
    for (int r = 0; r < reps; ++r)
        cs = estimate_centroids(z, pc, pb, tau, tau_T);
    const double t_cent = seconds_since(t0) / reps;
    t0 = clock_type::now();
    Matrix cref;
    for (int r = 0; r < reps; ++r) cref = centroids_reference(z, pc, pb, tau, tau_T);
    const double t_cent_ref = seconds_since(t0) / reps;
    std::printf("centroids: parallel %.4fs serial %.4fs speedup %.2fx maxdiff %.3e\n", t_cent,
                t_cent_ref, t_cent_ref / t_cent, max_abs_diff(cs.centroids, cref));

    // Assignment probabilities.
    AssignmentMatrix am;
    t0 = clock_type::now();
    for (int r = 0; r < reps; ++r) am = assignment_probabilities(z, cs);
    const double t_gam = seconds_since(t0) / reps;
    t0 = clock_type::now();
    Matrix gref;
    for (int r = 0; r < reps; ++r) gref = gamma_reference(z, cs.centroids);
    const double t_gam_ref = seconds_since(t0) / reps;
    std::printf("assignment: parallel %.4fs serial %.4fs speedup %.2fx maxdiff %.3e\n", t_gam,
                t_gam_ref, t_gam_ref / t_gam, max_abs_diff(am.gamma, gref));

    // Forward pass (linear kernels are row-parallel).
    NetConfig nc;
    nc.d_in = d;
    nc.K = K;
    ModelState state = init_state(nc, 3);
    Matrix batch(n, d);
    for (auto& v : batch.data) v = rng.normal();
    t0 = clock_type::now();
    ForwardRecord rec;
    for (int r = 0; r < reps; ++r) rec = forward(state, batch);
    std::printf("forward: %.4fs for %zu rows\n", seconds_since(t0) / reps, n);

    // Per-class GMM selection.
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.index(K));
    t0 = clock_type::now();
    SelectionResult sel;
    for (int r = 0; r < reps; ++r) sel = select_clean(am, labels, K);
    std::printf("select_clean: %.4fs (%zu samples, %d classes)\n", seconds_since(t0) / reps, n, K);
    return 0;
}
