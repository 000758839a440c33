#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <vector>

#include "dasc/matrix.hpp"
#include "dasc/rng.hpp"

namespace dasc {

// FIFO queue of detached unit-norm negative keys.
class MemoryBank {
public:
    explicit MemoryBank(std::size_t capacity = 1024, std::size_t dim = 0)
        : capacity_(capacity), dim_(dim) {}

    void push(std::span<const double> key);       // renormalizes on entry
    void push_rows(const Matrix& keys);
    std::size_t size() const { return queue_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }
    std::span<const double> entry(std::size_t i) const { return {queue_[i].data(), dim_}; }

    void save(std::ostream& os) const;
    void load(std::istream& is);

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::deque<std::vector<double>> queue_;
};

struct ConfidenceGroups {
    std::vector<std::size_t> high_idx;
    std::vector<std::size_t> low_idx;
    std::vector<std::vector<std::size_t>> buckets;  // per-class high-confidence indices
    std::vector<int> hard_labels;                   // argmax pseudo-label per row
};

// high iff max_k pseudo(i,k) > tau_c (strict); buckets keyed by argmax.
ConfidenceGroups confidence_split(const Matrix& pseudo, double tau_c);

struct LossResult {
    double loss = 0.0;
    Matrix grads;  // w.r.t. the primary input
};

struct MidlResult {
    double loss = 0.0;
    Matrix d_queries;
    Matrix d_positives;
};

// Balanced contrastive loss over the high-confidence group. Positive pairs are
// same-bucket rows excluding self; the denominator averages within each class
// bucket (self term included). Rows of z must be unit norm.
LossResult sbcl(const Matrix& z, const ConfidenceGroups& groups, double tau_s);

// Instance discrimination against the bank's negative keys; empty bank gives 0.
MidlResult midl(const Matrix& queries, const Matrix& positives, const MemoryBank& bank,
                double tau_m);

struct MixupPair {
    double lambda = 1.0;
};

// Row-wise convex combination with one Beta(alpha,alpha) draw per row.
// b defaults to a permuted pairing done by the caller; here rows are aligned.
void mixup_rows(const Matrix& a, const Matrix& b, double alpha, Rng& rng, Matrix& mixed,
                std::vector<double>& lambdas);

// Soft-label balanced softmax: -sum_k t_k log(n_k e^{eta_k} / sum n e^eta), batch mean.
LossResult balanced_softmax(const Matrix& logits, const Matrix& targets, const std::vector<int>& n);

// Standard softmax cross-entropy with soft targets, batch mean.
LossResult cross_entropy(const Matrix& logits, const Matrix& targets);

// Mean over batch of (1/K) sum_k (softmax(logits)_k - t_k)^2.
LossResult mse_consistency(const Matrix& logits, const Matrix& targets);

// sharpen(p)_k = p_k^(1/T) / sum_j p_j^(1/T), per row.
Matrix sharpen(const Matrix& p, double temperature);

// Weighted sum of the objective parts; gradients are additive and handled by
// the caller.
double total_loss(double mixmatch, double balanced_mixmatch, double sbcl_part, double midl_part,
                  double lambda_sbcl, double lambda_midl);

}  // namespace dasc
