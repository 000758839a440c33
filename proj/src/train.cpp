#include "dasc/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dasc {

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
    return out;
}

Matrix onehot_rows(const std::vector<int>& labels, const std::vector<std::size_t>& idx, int K) {
    Matrix out(idx.size(), static_cast<std::size_t>(K));
    for (std::size_t r = 0; r < idx.size(); ++r) out(r, labels[idx[r]]) = 1.0;
    return out;
}

void add_scaled(Matrix& dst, const Matrix& src, double scale) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

void add_vec(std::vector<double>& dst, const std::vector<double>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Cycling batch sampler over a shuffled pool; reshuffles on wraparound.
struct PoolSampler {
    std::vector<std::size_t> pool;
    std::size_t cursor = 0;

    void init(std::vector<std::size_t> p, Rng& rng) {
        pool = std::move(p);
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        cursor = 0;
    }
    std::vector<std::size_t> take(std::size_t n, Rng& rng) {
        std::vector<std::size_t> out;
        if (pool.empty()) return out;
        out.reserve(n);
        while (out.size() < n) {
            if (cursor == pool.size()) {
                std::shuffle(pool.begin(), pool.end(), rng.engine());
                cursor = 0;
            }
            out.push_back(pool[cursor++]);
        }
        return out;
    }
};

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(sbcl_warmup <= warmup && warmup < epochs))
        throw std::invalid_argument("TrainConfig: need sbcl_warmup <= warmup < epochs");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(tau_c > 0.0 && tau_c < 1.0)) throw std::invalid_argument("TrainConfig: tau_c must be in (0,1)");
    for (double t : {tau_T, tau_s, tau_m, sharpen_T})
        if (!(t > 0.0)) throw std::invalid_argument("TrainConfig: temperatures must be > 0");
    if (!(alpha_mixup > 0.0)) throw std::invalid_argument("TrainConfig: alpha_mixup must be > 0");
    if (bank_capacity < 1) throw std::invalid_argument("TrainConfig: bank_capacity must be >= 1");
    if (ramp_epochs < 0) throw std::invalid_argument("TrainConfig: ramp_epochs must be >= 0");
}

Matrix augment(const Matrix& features, AugmentPolicy policy, const TrainConfig& cfg,
               double feature_std, Rng& rng) {
    Matrix out = features;
    if (policy == AugmentPolicy::weak) {
        const double sigma = cfg.sigma_weak * feature_std;
        if (sigma > 0.0)
            for (double& x : out.data) x += rng.normal(0.0, sigma);
        return out;
    }
    const double sigma = cfg.sigma_strong * feature_std;
    for (double& x : out.data) {
        if (sigma > 0.0) x += rng.normal(0.0, sigma);
        if (cfg.dropout_rate > 0.0 && rng.uniform(0.0, 1.0) < cfg.dropout_rate) x = 0.0;
        x *= rng.uniform(0.8, 1.2);
    }
    return out;
}

PseudoLabels generate_pseudo_labels(const Matrix& probs_weak_avg, const Matrix& probs_guess_avg,
                                    const std::vector<bool>& clean_mask,
                                    const std::vector<double>& clean_posterior,
                                    const std::vector<int>& noisy_labels, double sharpen_T) {
    const std::size_t n = probs_weak_avg.rows;
    const std::size_t K = probs_weak_avg.cols;
    Matrix raw(n, K);
    PseudoLabels pl;
    pl.refined.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (clean_mask[i]) {
            const double w = clean_posterior[i];
            for (std::size_t k = 0; k < K; ++k) raw(i, k) = (1.0 - w) * probs_weak_avg(i, k);
            raw(i, noisy_labels[i]) += w;
            pl.refined[i] = true;
        } else {
            for (std::size_t k = 0; k < K; ++k) raw(i, k) = probs_guess_avg(i, k);
            pl.refined[i] = false;
        }
    }
    pl.y_hat = sharpen(raw, sharpen_T);
    return pl;
}

Trainer::Trainer(const TrainView& data, const NetConfig& net_cfg, const TrainConfig& cfg,
                 const AblationConfig& abl)
    : data_(data), cfg_(cfg), abl_(abl), rng_(cfg.seed) {
    cfg_.validate();
    NetConfig nc = net_cfg;
    nc.d_in = data.dim();
    nc.K = data.K;
    nc.validate();
    nets_[0] = init_state(nc, cfg.seed * 2654435761ULL + 1);
    nets_[1] = init_state(nc, cfg.seed * 2654435761ULL + 2);
    banks_[0] = MemoryBank(static_cast<std::size_t>(cfg.bank_capacity), nc.d_proj);
    banks_[1] = MemoryBank(static_cast<std::size_t>(cfg.bank_capacity), nc.d_proj);

    double mean = 0.0;
    for (double x : data.features.data) mean += x;
    mean /= static_cast<double>(data.features.data.size());
    double var = 0.0;
    for (double x : data.features.data) var += (x - mean) * (x - mean);
    feature_std_ = std::sqrt(var / static_cast<double>(data.features.data.size()));
    if (feature_std_ < 1e-12) feature_std_ = 1.0;
}

double Trainer::learning_rate(int epoch) const {
    if (!cfg_.cosine_lr) return cfg_.lr;
    return cfg_.lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(epoch - 1) / cfg_.epochs));
}

AugmentedViews Trainer::make_views(const Matrix& features) {
    AugmentedViews v;
    v.weak = augment(features, AugmentPolicy::weak, cfg_, feature_std_, rng_);
    v.strong1 = augment(features, AugmentPolicy::strong, cfg_, feature_std_, rng_);
    v.strong2 = augment(features, AugmentPolicy::strong, cfg_, feature_std_, rng_);
    mixup_rows(v.strong1, v.strong2, cfg_.alpha_mixup, rng_, v.mix, v.lambdas);
    return v;
}

Trainer::EvalPass Trainer::eval_full(const ModelState& net, const Matrix& inputs) const {
    ForwardRecord rec = forward(net, inputs);
    EvalPass ev;
    if (abl_.representation_source == ReprSource::projector) {
        ev.projections = std::move(rec.projections);
    } else {
        ev.projections = rec.embeddings;
        for (std::size_t r = 0; r < ev.projections.rows; ++r) {
            const double n = std::max(l2_norm(ev.projections.row(r)), 1e-12);
            for (std::size_t c = 0; c < ev.projections.cols; ++c) ev.projections(r, c) /= n;
        }
    }
    ev.probs_c = softmax_rows(rec.logits_c);
    ev.probs_b = softmax_rows(rec.logits_b);
    return ev;
}

CentroidSet Trainer::estimate_for(int net_idx, const EvalPass& ev, double tau) {
    CentroidSet fallback;
    const CentroidSet* prev = nullptr;
    if (prev_centroids_[net_idx]) {
        prev = &*prev_centroids_[net_idx];
    } else {
        // First selection epoch: noisy-label class means keep degenerate
        // classes alive.
        fallback = class_mean_centroids(ev.projections, data_.noisy_labels, data_.K);
        prev = &fallback;
    }
    CentroidSet cs;
    if (abl_.use_dacc) {
        const Matrix& weight_preds =
            abl_.prediction_source == PredSource::conventional ? ev.probs_c : ev.probs_b;
        const Matrix& other_preds =
            abl_.prediction_source == PredSource::conventional ? ev.probs_b : ev.probs_c;
        cs = estimate_centroids(ev.projections, weight_preds, other_preds, tau, cfg_.tau_T, prev,
                                abl_.use_temperature_scaling, abl_.use_confident_subset);
    } else {
        cs = estimate_centroids_per_class(ev.projections, ev.probs_c, data_.noisy_labels, data_.K,
                                          tau, prev);
    }
    prev_centroids_[net_idx] = cs;
    return cs;
}

void Trainer::run_epoch(int epoch) {
    if (!abl_.use_selection || epoch <= cfg_.warmup)
        warmup_epoch(epoch);
    else
        main_epoch(epoch);
    epoch_ = epoch;
}

void Trainer::run_all(const std::function<void(int)>& per_epoch) {
    for (int t = epoch_ + 1; t <= cfg_.epochs; ++t) {
        run_epoch(t);
        if (per_epoch) per_epoch(t);
    }
}

void Trainer::warmup_epoch(int epoch) {
    const std::size_t n = data_.size();
    const double lr = learning_rate(epoch);
    const bool with_sbcl = abl_.use_sbcl && epoch > cfg_.sbcl_warmup;

    artifacts_ = EpochArtifacts{};
    artifacts_.tau = 0.0;

    for (int x = 0; x < 2; ++x) {
        ModelState& net = nets_[x];
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng_.engine());

        for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
            const std::size_t end = std::min(start + cfg_.batch_size, n);
            const std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);

            Matrix weak = augment(gather_rows(data_.features, idx), AugmentPolicy::weak, cfg_,
                                  feature_std_, rng_);
            Matrix strong;
            if (with_sbcl)
                strong = augment(gather_rows(data_.features, idx), AugmentPolicy::strong, cfg_,
                                 feature_std_, rng_);

            ForwardRecord rec = forward(net, weak);
            const Matrix targets = onehot_rows(data_.noisy_labels, idx, data_.K);

            LossResult ce = cross_entropy(rec.logits_c, targets);
            LossResult bs = balanced_softmax(rec.logits_b, targets, data_.class_counts);

            OutputGrads og;
            og.d_logits_c = std::move(ce.grads);
            og.d_logits_b = std::move(bs.grads);
            std::vector<double> grads = backward(net, rec, og);

            if (with_sbcl) {
                // Raw weak-view predictions stand in for pseudo-labels here.
                const ConfidenceGroups groups = confidence_split(softmax_rows(rec.logits_c), cfg_.tau_c);
                ForwardRecord rec_s = forward(net, strong);
                LossResult sb = sbcl(rec_s.projections, groups, cfg_.tau_s);
                OutputGrads og_s;
                og_s.d_projections = Matrix(rec_s.projections.rows, rec_s.projections.cols);
                add_scaled(og_s.d_projections, sb.grads, cfg_.lambda_sbcl);
                add_vec(grads, backward(net, rec_s, og_s));
            }
            sgd_step(net, grads, lr, cfg_.momentum, cfg_.weight_decay);
        }
    }
}

void Trainer::main_epoch(int epoch) {
    const double tau = threshold_schedule(epoch, data_.K, cfg_.phi);

    AugmentedViews views = make_views(data_.features);

    EvalPass ev[2];
    CentroidSet cent[2];
    AssignmentMatrix gamma[2];
    SelectionResult sel[2];
    for (int x = 0; x < 2; ++x) {
        ev[x] = eval_full(nets_[x], views.weak);
        cent[x] = estimate_for(x, ev[x], tau);
        gamma[x] = assignment_probabilities(ev[x].projections, cent[x]);
        sel[x] = select_clean(gamma[x], data_.noisy_labels, data_.K);
    }

    // Pseudo-label ingredients shared by both networks.
    const std::size_t n = data_.size();
    Matrix probs_weak_avg(n, static_cast<std::size_t>(data_.K));
    add_scaled(probs_weak_avg, ev[0].probs_c, 0.5);
    add_scaled(probs_weak_avg, ev[1].probs_c, 0.5);

    Matrix probs_guess_avg(n, static_cast<std::size_t>(data_.K));
    for (int x = 0; x < 2; ++x) {
        add_scaled(probs_guess_avg, softmax_rows(forward(nets_[x], views.strong1).logits_c), 0.25);
        add_scaled(probs_guess_avg, softmax_rows(forward(nets_[x], views.strong2).logits_c), 0.25);
    }

    // Cross wiring: network A trains on the partition from B's centroids.
    for (int x = 0; x < 2; ++x) {
        const int other = abl_.co_mode == CoMode::cross ? 1 - x : x;
        const SelectionResult& s = sel[other];
        PseudoLabels pseudo = generate_pseudo_labels(probs_weak_avg, probs_guess_avg, s.clean_mask,
                                                     s.clean_posterior, data_.noisy_labels,
                                                     cfg_.sharpen_T);
        ConfidenceGroups groups = confidence_split(pseudo.y_hat, cfg_.tau_c);
        train_network(x, epoch, views, s, pseudo, groups);

        if (x == 0) {
            artifacts_ = EpochArtifacts{};
            artifacts_.selection = sel[0];
            artifacts_.gamma_label.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                artifacts_.gamma_label[i] = gamma[0].gamma(i, data_.noisy_labels[i]);
            artifacts_.pseudo = std::move(pseudo);
            artifacts_.groups = std::move(groups);
            artifacts_.tau = tau;
        }
    }
}

void Trainer::train_network(int net_idx, int epoch, const AugmentedViews& views,
                            const SelectionResult& sel, const PseudoLabels& pseudo,
                            const ConfidenceGroups& groups) {
    ModelState& net = nets_[net_idx];
    MemoryBank& bank = banks_[net_idx];
    const std::size_t n = data_.size();
    const double lr = learning_rate(epoch);

    std::vector<std::size_t> clean_pool, noisy_pool;
    for (std::size_t i = 0; i < n; ++i) (sel.clean_mask[i] ? clean_pool : noisy_pool).push_back(i);

    std::vector<int> n_bs = sel.per_class_clean_counts;
    for (int& v : n_bs) v = std::max(v, 1);

    const double ramp = cfg_.ramp_epochs == 0
                            ? 1.0
                            : std::min(1.0, static_cast<double>(epoch - cfg_.warmup) /
                                                static_cast<double>(cfg_.ramp_epochs));
    const double lambda_u = cfg_.lambda_u_max * ramp;

    std::vector<char> is_high(n, 0);
    for (std::size_t i : groups.high_idx) is_high[i] = 1;

    PoolSampler clean_s, noisy_s;
    clean_s.init(clean_pool, rng_);
    noisy_s.init(noisy_pool, rng_);

    const std::size_t bsz = static_cast<std::size_t>(cfg_.batch_size);
    const std::size_t steps = (n + bsz - 1) / bsz;

    for (std::size_t step = 0; step < steps; ++step) {
        const std::vector<std::size_t> lab = clean_s.take(bsz, rng_);
        const std::vector<std::size_t> unlab = noisy_s.take(bsz, rng_);
        std::vector<std::size_t> batch = lab;
        batch.insert(batch.end(), unlab.begin(), unlab.end());
        if (batch.empty()) break;
        const std::size_t n_lab = lab.size();
        const std::size_t n_all = batch.size();

        const Matrix mix_rows = gather_rows(views.mix, batch);
        const Matrix targets = gather_rows(pseudo.y_hat, batch);

        ForwardRecord rec_mix = forward(net, mix_rows);

        // MixMatch parts: supervised on the labeled slice, consistency MSE on
        // the unlabeled slice, for both classifiers.
        OutputGrads og_mix;
        og_mix.d_logits_c = Matrix(n_all, static_cast<std::size_t>(data_.K));
        og_mix.d_logits_b = Matrix(n_all, static_cast<std::size_t>(data_.K));

        auto slice = [&](const Matrix& m, std::size_t from, std::size_t count) {
            Matrix out(count, m.cols);
            std::copy(m.data.begin() + from * m.cols, m.data.begin() + (from + count) * m.cols,
                      out.data.begin());
            return out;
        };
        auto scatter = [&](Matrix& dst, const Matrix& src, std::size_t from, double scale) {
            for (std::size_t r = 0; r < src.rows; ++r)
                for (std::size_t c = 0; c < src.cols; ++c) dst(from + r, c) += scale * src(r, c);
        };

        if (n_lab > 0) {
            const Matrix t_lab = slice(targets, 0, n_lab);
            LossResult ce = cross_entropy(slice(rec_mix.logits_c, 0, n_lab), t_lab);
            LossResult bs = balanced_softmax(slice(rec_mix.logits_b, 0, n_lab), t_lab, n_bs);
            scatter(og_mix.d_logits_c, ce.grads, 0, 1.0);
            scatter(og_mix.d_logits_b, bs.grads, 0, 1.0);
        }
        if (n_all > n_lab && lambda_u > 0.0) {
            const std::size_t n_un = n_all - n_lab;
            const Matrix t_un = slice(targets, n_lab, n_un);
            LossResult mc = mse_consistency(slice(rec_mix.logits_c, n_lab, n_un), t_un);
            LossResult mb = mse_consistency(slice(rec_mix.logits_b, n_lab, n_un), t_un);
            scatter(og_mix.d_logits_c, mc.grads, n_lab, lambda_u);
            scatter(og_mix.d_logits_b, mb.grads, n_lab, lambda_u);
        }
        std::vector<double> grads = backward(net, rec_mix, og_mix);

        // Contrastive terms over the combined batch.
        const bool want_s1 = abl_.use_sbcl || abl_.use_midl;
        ForwardRecord rec_s1;
        if (want_s1) rec_s1 = forward(net, gather_rows(views.strong1, batch));

        OutputGrads og_s1;
        if (want_s1)
            og_s1.d_projections = Matrix(n_all, rec_s1.projections.cols);

        // Batch-local confidence grouping from the epoch's pseudo-labels.
        ConfidenceGroups bg;
        bg.buckets.resize(data_.K);
        bg.hard_labels.resize(n_all);
        for (std::size_t r = 0; r < n_all; ++r) {
            const std::size_t i = batch[r];
            bg.hard_labels[r] = groups.hard_labels[i];
            if (is_high[i]) {
                bg.high_idx.push_back(r);
                bg.buckets[groups.hard_labels[i]].push_back(r);
            } else {
                bg.low_idx.push_back(r);
            }
        }

        if (abl_.use_sbcl && !bg.high_idx.empty()) {
            LossResult sb = sbcl(rec_s1.projections, bg, cfg_.tau_s);
            add_scaled(og_s1.d_projections, sb.grads, cfg_.lambda_sbcl);
        }

        ForwardRecord rec_s2_low;
        bool have_s2 = false;
        if (abl_.use_midl && !bg.low_idx.empty()) {
            std::vector<std::size_t> low_global;
            for (std::size_t r : bg.low_idx) low_global.push_back(batch[r]);
            rec_s2_low = forward(net, gather_rows(views.strong2, low_global));
            have_s2 = true;

            const Matrix queries = gather_rows(rec_s1.projections, bg.low_idx);
            MidlResult mi = midl(queries, rec_s2_low.projections, bank, cfg_.tau_m);
            for (std::size_t j = 0; j < bg.low_idx.size(); ++j)
                for (std::size_t c = 0; c < queries.cols; ++c)
                    og_s1.d_projections(bg.low_idx[j], c) += cfg_.lambda_midl * mi.d_queries(j, c);

            OutputGrads og_s2;
            og_s2.d_projections = Matrix(mi.d_positives.rows, mi.d_positives.cols);
            add_scaled(og_s2.d_projections, mi.d_positives, cfg_.lambda_midl);
            add_vec(grads, backward(net, rec_s2_low, og_s2));
        }

        if (want_s1) add_vec(grads, backward(net, rec_s1, og_s1));

        sgd_step(net, grads, lr, cfg_.momentum, cfg_.weight_decay);

        // Enqueue this batch's negative keys (detached) after the loss used
        // the previous queue contents.
        if (abl_.use_midl) {
            const Matrix& key_src =
                abl_.bank_keys == BankKeys::mixup ? rec_mix.projections : rec_s1.projections;
            if (abl_.bank_push == BankPush::all) {
                bank.push_rows(key_src);
            } else {
                for (std::size_t r : bg.low_idx) bank.push(key_src.row(r));
            }
        }
        (void)have_s2;
    }
}

Matrix Trainer::predict(const Matrix& features) const {
    Matrix out(features.rows, static_cast<std::size_t>(data_.K));
    for (int x = 0; x < 2; ++x) {
        ForwardRecord rec = forward(nets_[x], features);
        add_scaled(out, softmax_rows(rec.logits_c), 0.25);
        add_scaled(out, softmax_rows(rec.logits_b), 0.25);
    }
    return out;
}

SelectionResult Trainer::selection_pass(bool use_dacc, int epoch_for_tau,
                                        std::vector<double>* gamma_label_out) const {
    const double tau = threshold_schedule(epoch_for_tau, data_.K, cfg_.phi);
    EvalPass ev = eval_full(nets_[0], data_.features);
    CentroidSet fallback = class_mean_centroids(ev.projections, data_.noisy_labels, data_.K);
    CentroidSet cs;
    if (use_dacc) {
        cs = estimate_centroids(ev.projections, ev.probs_c, ev.probs_b, tau, cfg_.tau_T, &fallback,
                                abl_.use_temperature_scaling, abl_.use_confident_subset);
    } else {
        cs = estimate_centroids_per_class(ev.projections, ev.probs_c, data_.noisy_labels, data_.K,
                                          tau, &fallback);
    }
    AssignmentMatrix gamma = assignment_probabilities(ev.projections, cs);
    if (gamma_label_out) {
        gamma_label_out->resize(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i)
            (*gamma_label_out)[i] = gamma.gamma(i, data_.noisy_labels[i]);
    }
    return select_clean(gamma, data_.noisy_labels, data_.K);
}

namespace {
constexpr std::uint32_t kCkptMagic = 0x44534b31;  // "DSK1"

void save_centroids(std::ostream& os, const std::optional<CentroidSet>& cs) {
    const std::uint8_t has = cs.has_value();
    os.write(reinterpret_cast<const char*>(&has), 1);
    if (!has) return;
    const std::uint64_t rows = cs->centroids.rows, cols = cs->centroids.cols;
    os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    os.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    os.write(reinterpret_cast<const char*>(cs->centroids.data.data()),
             static_cast<std::streamsize>(cs->centroids.data.size() * sizeof(double)));
    for (std::size_t k = 0; k < rows; ++k) {
        const std::uint8_t d = cs->defined[k];
        os.write(reinterpret_cast<const char*>(&d), 1);
    }
}

std::optional<CentroidSet> load_centroids(std::istream& is) {
    std::uint8_t has = 0;
    is.read(reinterpret_cast<char*>(&has), 1);
    if (!has) return std::nullopt;
    std::uint64_t rows = 0, cols = 0;
    is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    is.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    CentroidSet cs;
    cs.centroids = Matrix(rows, cols);
    is.read(reinterpret_cast<char*>(cs.centroids.data.data()),
            static_cast<std::streamsize>(cs.centroids.data.size() * sizeof(double)));
    cs.defined.resize(rows);
    for (std::size_t k = 0; k < rows; ++k) {
        std::uint8_t d = 0;
        is.read(reinterpret_cast<char*>(&d), 1);
        cs.defined[k] = d;
    }
    return cs;
}
}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write(reinterpret_cast<const char*>(&kCkptMagic), sizeof(kCkptMagic));
    const std::int32_t ep = epoch_;
    os.write(reinterpret_cast<const char*>(&ep), sizeof(ep));
    const std::string rng = rng_.serialize();
    const std::uint64_t len = rng.size();
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(rng.data(), static_cast<std::streamsize>(len));
    for (int x = 0; x < 2; ++x) save_state(nets_[x], os);
    for (int x = 0; x < 2; ++x) banks_[x].save(os);
    for (int x = 0; x < 2; ++x) save_centroids(os, prev_centroids_[x]);
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

void Trainer::load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::uint32_t magic = 0;
    is.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    if (magic != kCkptMagic) throw std::runtime_error("load_checkpoint: bad magic in " + path);
    std::int32_t ep = 0;
    is.read(reinterpret_cast<char*>(&ep), sizeof(ep));
    epoch_ = ep;
    std::uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string rng(len, '\0');
    is.read(rng.data(), static_cast<std::streamsize>(len));
    rng_.deserialize(rng);
    for (int x = 0; x < 2; ++x) nets_[x] = load_state(is);
    for (int x = 0; x < 2; ++x) banks_[x].load(is);
    for (int x = 0; x < 2; ++x) prev_centroids_[x] = load_centroids(is);
    if (!is) throw std::runtime_error("load_checkpoint: truncated checkpoint " + path);
}

}  // namespace dasc
