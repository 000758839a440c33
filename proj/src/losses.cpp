#include "dasc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dasc {

void MemoryBank::push(std::span<const double> key) {
    if (dim_ == 0) dim_ = key.size();
    if (key.size() != dim_) throw std::invalid_argument("MemoryBank: key dimension mismatch");
    std::vector<double> k(key.begin(), key.end());
    const double n = l2_norm(k);
    if (n > 1e-12)
        for (double& x : k) x /= n;
    queue_.push_back(std::move(k));
    while (queue_.size() > capacity_) queue_.pop_front();
}

void MemoryBank::push_rows(const Matrix& keys) {
    for (std::size_t r = 0; r < keys.rows; ++r) push(keys.row(r));
}

void MemoryBank::save(std::ostream& os) const {
    const std::uint64_t cap = capacity_, dim = dim_, n = queue_.size();
    os.write(reinterpret_cast<const char*>(&cap), sizeof(cap));
    os.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    for (const auto& k : queue_)
        os.write(reinterpret_cast<const char*>(k.data()),
                 static_cast<std::streamsize>(k.size() * sizeof(double)));
}

void MemoryBank::load(std::istream& is) {
    std::uint64_t cap = 0, dim = 0, n = 0;
    is.read(reinterpret_cast<char*>(&cap), sizeof(cap));
    is.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    capacity_ = cap;
    dim_ = dim;
    queue_.clear();
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<double> k(dim);
        is.read(reinterpret_cast<char*>(k.data()), static_cast<std::streamsize>(dim * sizeof(double)));
        queue_.push_back(std::move(k));
    }
    if (!is) throw std::runtime_error("MemoryBank::load: truncated stream");
}

ConfidenceGroups confidence_split(const Matrix& pseudo, double tau_c) {
    ConfidenceGroups g;
    g.buckets.resize(pseudo.cols);
    g.hard_labels.resize(pseudo.rows);
    for (std::size_t i = 0; i < pseudo.rows; ++i) {
        auto row = pseudo.row(i);
        const auto mx = std::max_element(row.begin(), row.end());
        const int label = static_cast<int>(mx - row.begin());
        g.hard_labels[i] = label;
        if (*mx > tau_c) {
            g.high_idx.push_back(i);
            g.buckets[label].push_back(i);
        } else {
            g.low_idx.push_back(i);
        }
    }
    return g;
}

LossResult sbcl(const Matrix& z, const ConfidenceGroups& groups, double tau_s) {
    if (!(tau_s > 0.0)) throw std::invalid_argument("sbcl: tau_s must be > 0");
    LossResult res;
    res.grads = Matrix(z.rows, z.cols);
    if (groups.high_idx.empty()) return res;

    const double inv_batch = 1.0 / static_cast<double>(groups.high_idx.size());

    for (std::size_t i : groups.high_idx) {
        const auto& bucket = groups.buckets[groups.hard_labels[i]];
        const std::size_t n_pos = bucket.size() - 1;  // self excluded from positives
        if (n_pos == 0) continue;                     // contributes 0

        // Denominator D_i = sum_j (1/|B_j|) sum_{k in B_j} exp(s_ik / tau).
        double d_i = 0.0;
        for (const auto& bj : groups.buckets) {
            if (bj.empty()) continue;
            double s = 0.0;
            for (std::size_t k : bj) s += std::exp(dot(z.row(i), z.row(k)) / tau_s);
            d_i += s / static_cast<double>(bj.size());
        }

        double loss_i = 0.0;
        for (std::size_t p : bucket) {
            if (p == i) continue;
            loss_i += -(dot(z.row(i), z.row(p)) / tau_s - std::log(d_i));
        }
        res.loss += inv_batch * loss_i / static_cast<double>(n_pos);

        // Gradients via the pair-similarity coefficients c_ik = dL/ds_ik.
        auto add_pair = [&](std::size_t a, std::size_t b, double c) {
            for (std::size_t col = 0; col < z.cols; ++col) {
                res.grads(a, col) += c * z(b, col);
                res.grads(b, col) += c * z(a, col);
            }
        };
        const double c_pos = -inv_batch / (static_cast<double>(n_pos) * tau_s);
        for (std::size_t p : bucket) {
            if (p == i) continue;
            add_pair(i, p, c_pos);
        }
        for (const auto& bj : groups.buckets) {
            if (bj.empty()) continue;
            const double a_k = 1.0 / static_cast<double>(bj.size());
            for (std::size_t k : bj) {
                const double c = inv_batch * a_k * std::exp(dot(z.row(i), z.row(k)) / tau_s) /
                                 (d_i * tau_s);
                add_pair(i, k, c);
            }
        }
    }
    return res;
}

MidlResult midl(const Matrix& queries, const Matrix& positives, const MemoryBank& bank,
                double tau_m) {
    if (!(tau_m > 0.0)) throw std::invalid_argument("midl: tau_m must be > 0");
    if (queries.rows != positives.rows || queries.cols != positives.cols)
        throw std::invalid_argument("midl: query/positive shape mismatch");
    MidlResult res;
    res.d_queries = Matrix(queries.rows, queries.cols);
    res.d_positives = Matrix(queries.rows, queries.cols);
    if (queries.rows == 0 || bank.size() == 0) return res;  // empty bank: fraction is 1

    const double inv_batch = 1.0 / static_cast<double>(queries.rows);
    for (std::size_t i = 0; i < queries.rows; ++i) {
        const double s_pos = dot(queries.row(i), positives.row(i)) / tau_m;
        // Stable log-sum-exp over {positive, negatives}.
        double mx = s_pos;
        std::vector<double> s_neg(bank.size());
        for (std::size_t m = 0; m < bank.size(); ++m) {
            s_neg[m] = dot(queries.row(i), bank.entry(m)) / tau_m;
            mx = std::max(mx, s_neg[m]);
        }
        double zsum = std::exp(s_pos - mx);
        for (double s : s_neg) zsum += std::exp(s - mx);
        res.loss += inv_batch * (std::log(zsum) + mx - s_pos);

        const double sigma0 = std::exp(s_pos - mx) / zsum;
        const double c_pos = inv_batch * (sigma0 - 1.0) / tau_m;
        for (std::size_t col = 0; col < queries.cols; ++col) {
            res.d_queries(i, col) += c_pos * positives(i, col);
            res.d_positives(i, col) += c_pos * queries(i, col);
        }
        for (std::size_t m = 0; m < bank.size(); ++m) {
            const double c = inv_batch * (std::exp(s_neg[m] - mx) / zsum) / tau_m;
            auto neg = bank.entry(m);
            for (std::size_t col = 0; col < queries.cols; ++col)
                res.d_queries(i, col) += c * neg[col];
        }
    }
    return res;
}

void mixup_rows(const Matrix& a, const Matrix& b, double alpha, Rng& rng, Matrix& mixed,
                std::vector<double>& lambdas) {
    if (!(alpha > 0.0)) throw std::invalid_argument("mixup: alpha must be > 0");
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("mixup: shape mismatch");
    mixed = Matrix(a.rows, a.cols);
    lambdas.resize(a.rows);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double lam = rng.beta(alpha);
        lambdas[r] = lam;
        for (std::size_t c = 0; c < a.cols; ++c) mixed(r, c) = lam * a(r, c) + (1.0 - lam) * b(r, c);
    }
}

LossResult balanced_softmax(const Matrix& logits, const Matrix& targets, const std::vector<int>& n) {
    if (logits.rows != targets.rows || logits.cols != targets.cols)
        throw std::invalid_argument("balanced_softmax: shape mismatch");
    if (n.size() != logits.cols) throw std::invalid_argument("balanced_softmax: prior size mismatch");
    for (int nk : n)
        if (nk < 1) throw std::invalid_argument("balanced_softmax: class counts must be >= 1");

    LossResult res;
    res.grads = Matrix(logits.rows, logits.cols);
    if (logits.rows == 0) return res;
    const double inv_batch = 1.0 / static_cast<double>(logits.rows);

    std::vector<double> log_n(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) log_n[k] = std::log(static_cast<double>(n[k]));

    Matrix adj = logits;
    for (std::size_t r = 0; r < adj.rows; ++r)
        for (std::size_t c = 0; c < adj.cols; ++c) adj(r, c) += log_n[c];

    for (std::size_t r = 0; r < adj.rows; ++r) {
        auto row = adj.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        const double log_z = std::log(z) + mx;
        for (std::size_t c = 0; c < adj.cols; ++c) {
            const double log_q = adj(r, c) - log_z;
            res.loss += -inv_batch * targets(r, c) * log_q;
            res.grads(r, c) = inv_batch * (std::exp(log_q) - targets(r, c));
        }
    }
    return res;
}

LossResult cross_entropy(const Matrix& logits, const Matrix& targets) {
    std::vector<int> uniform(logits.cols, 1);
    return balanced_softmax(logits, targets, uniform);  // uniform prior cancels
}

LossResult mse_consistency(const Matrix& logits, const Matrix& targets) {
    if (logits.rows != targets.rows || logits.cols != targets.cols)
        throw std::invalid_argument("mse_consistency: shape mismatch");
    LossResult res;
    res.grads = Matrix(logits.rows, logits.cols);
    if (logits.rows == 0) return res;
    const double scale = 1.0 / (static_cast<double>(logits.rows) * static_cast<double>(logits.cols));

    Matrix p = logits;
    for (std::size_t r = 0; r < p.rows; ++r) {
        softmax_inplace(p.row(r));
        double gdotp = 0.0;
        std::vector<double> g(p.cols);
        for (std::size_t c = 0; c < p.cols; ++c) {
            const double diff = p(r, c) - targets(r, c);
            res.loss += scale * diff * diff;
            g[c] = 2.0 * scale * diff;
            gdotp += g[c] * p(r, c);
        }
        for (std::size_t c = 0; c < p.cols; ++c) res.grads(r, c) = p(r, c) * (g[c] - gdotp);
    }
    return res;
}

Matrix sharpen(const Matrix& p, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("sharpen: temperature must be > 0");
    Matrix out = p;
    const double inv_t = 1.0 / temperature;
    for (std::size_t r = 0; r < out.rows; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < out.cols; ++c) {
            out(r, c) = std::pow(std::max(out(r, c), 0.0), inv_t);
            z += out(r, c);
        }
        if (z <= 0.0) {
            for (std::size_t c = 0; c < out.cols; ++c) out(r, c) = 1.0 / out.cols;
        } else {
            for (std::size_t c = 0; c < out.cols; ++c) out(r, c) /= z;
        }
    }
    return out;
}

double total_loss(double mixmatch, double balanced_mixmatch, double sbcl_part, double midl_part,
                  double lambda_sbcl, double lambda_midl) {
    return mixmatch + balanced_mixmatch + lambda_sbcl * sbcl_part + lambda_midl * midl_part;
}

}  // namespace dasc
