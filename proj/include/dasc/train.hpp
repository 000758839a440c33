#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dasc/centroid.hpp"
#include "dasc/dataset.hpp"
#include "dasc/losses.hpp"
#include "dasc/net.hpp"
#include "dasc/select.hpp"

namespace dasc {

struct TrainConfig {
    int epochs = 100;       // T
    int warmup = 30;        // T_0
    int sbcl_warmup = 10;   // T_SBCL
    int batch_size = 64;
    double lr = 0.02;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    bool cosine_lr = false;
    double tau_c = 0.9;
    double tau_T = 0.1;
    double tau_s = 0.1;
    double tau_m = 0.5;
    double lambda_sbcl = 0.5;
    double lambda_midl = 0.3;
    double phi = 1.005;
    double alpha_mixup = 4.0;
    int bank_capacity = 1024;
    double sharpen_T = 0.5;
    double lambda_u_max = 25.0;
    int ramp_epochs = 16;
    double sigma_weak = 0.02;    // additive noise, fraction of feature std
    double sigma_strong = 0.1;
    double dropout_rate = 0.1;   // strong-augmentation coordinate dropout
    int checkpoint_every = 0;    // 0 = final checkpoint only
    std::uint64_t seed = 0;

    void validate() const;
};

enum class BankKeys { mixup, plain };
enum class BankPush { low, all };
enum class CoMode { cross, self };
enum class ReprSource { projector, backbone };
enum class PredSource { conventional, balanced };

struct AblationConfig {
    bool use_selection = true;   // false = CE/BS baseline for every epoch
    bool use_dacc = true;        // false = per-class high-confidence centroids
    bool use_temperature_scaling = true;
    bool use_sbcl = true;
    bool use_midl = true;
    bool use_confident_subset = true;  // false = centroid sums over all of D
    BankKeys bank_keys = BankKeys::mixup;
    BankPush bank_push = BankPush::low;
    CoMode co_mode = CoMode::cross;
    ReprSource representation_source = ReprSource::projector;
    PredSource prediction_source = PredSource::conventional;
    bool auc_on_gamma = false;
};

enum class AugmentPolicy { weak, strong };

struct AugmentedViews {
    Matrix weak;
    Matrix strong1;
    Matrix strong2;
    Matrix mix;                   // lambda*strong1 + (1-lambda)*strong2 per row
    std::vector<double> lambdas;
};

// Feature-space stand-in for image augmentation. `feature_std` scales the
// additive noise; strong policy adds coordinate dropout and per-coordinate
// scaling in [0.8, 1.2].
Matrix augment(const Matrix& features, AugmentPolicy policy, const TrainConfig& cfg,
               double feature_std, Rng& rng);

struct PseudoLabels {
    Matrix y_hat;                    // N x K distributions
    std::vector<bool> refined;       // true = clean/refined, false = guessed
};

PseudoLabels generate_pseudo_labels(const Matrix& probs_weak_avg, const Matrix& probs_guess_avg,
                                    const std::vector<bool>& clean_mask,
                                    const std::vector<double>& clean_posterior,
                                    const std::vector<int>& noisy_labels, double sharpen_T);

// Per-epoch artifacts kept for diagnostics.
struct EpochArtifacts {
    std::optional<SelectionResult> selection;      // from network A's centroids
    std::vector<double> gamma_label;               // gamma at the noisy label, per sample
    std::optional<PseudoLabels> pseudo;            // pseudo-labels used to train network A
    std::optional<ConfidenceGroups> groups;
    double tau = 0.0;
};

class Trainer {
public:
    Trainer(const TrainView& data, const NetConfig& net_cfg, const TrainConfig& cfg,
            const AblationConfig& abl);

    // Runs one epoch (1-based). Dispatches warmup vs main phase.
    void run_epoch(int epoch);
    void run_all(const std::function<void(int)>& per_epoch = nullptr);

    int current_epoch() const { return epoch_; }
    const EpochArtifacts& artifacts() const { return artifacts_; }
    const ModelState& net(int i) const { return nets_[i]; }
    const TrainConfig& config() const { return cfg_; }

    // Mean of both classifiers' softmax, averaged across the two networks.
    Matrix predict(const Matrix& features) const;

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

    // One centroid-estimation + selection pass with the current model, without
    // touching training state (used by the selection-only command).
    SelectionResult selection_pass(bool use_dacc, int epoch_for_tau,
                                   std::vector<double>* gamma_label_out = nullptr) const;

private:
    struct EvalPass {
        Matrix projections;  // representation used for centroids (unit rows)
        Matrix probs_c;
        Matrix probs_b;
    };

    AugmentedViews make_views(const Matrix& features);
    EvalPass eval_full(const ModelState& net, const Matrix& inputs) const;
    CentroidSet estimate_for(int net_idx, const EvalPass& ev, double tau);
    void warmup_epoch(int epoch);
    void main_epoch(int epoch);
    void train_network(int net_idx, int epoch, const AugmentedViews& views,
                       const SelectionResult& sel, const PseudoLabels& pseudo,
                       const ConfidenceGroups& groups);
    double learning_rate(int epoch) const;
    double feature_std() const { return feature_std_; }

    const TrainView data_;
    TrainConfig cfg_;
    AblationConfig abl_;
    ModelState nets_[2];
    MemoryBank banks_[2];
    std::optional<CentroidSet> prev_centroids_[2];
    Rng rng_;
    int epoch_ = 0;
    double feature_std_ = 1.0;
    EpochArtifacts artifacts_;
};

}  // namespace dasc
