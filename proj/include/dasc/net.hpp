#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dasc/matrix.hpp"

namespace dasc {

enum class Activation { relu, tanh_ };

Activation parse_activation(const std::string& s);

struct NetConfig {
    int d_in = 0;
    std::vector<int> hidden = {64, 64};  // backbone hidden widths
    int d_embed = 32;
    int d_proj = 16;
    int K = 0;
    Activation activation = Activation::relu;

    void validate() const;
};

// Parameters live in one flat vector partitioned into
// {backbone, projector, classifier_c, classifier_b}; momentum buffers mirror it.
struct ModelState {
    NetConfig cfg;
    std::vector<double> params;
    std::vector<double> momentum;
    long step_count = 0;
};

struct ForwardRecord {
    Matrix input;                        // batch x d_in
    std::vector<Matrix> backbone_pre;    // pre-activations per backbone layer
    std::vector<Matrix> backbone_act;    // post-activations (last = embeddings)
    std::vector<Matrix> projector_pre;
    std::vector<Matrix> projector_act;   // last = pre-normalization projections
    std::vector<double> proj_norms;      // per-row norms used by Norm()
    Matrix embeddings;                   // batch x d_embed
    Matrix projections;                  // batch x d_proj, rows unit norm
    Matrix logits_c;                     // batch x K
    Matrix logits_b;                     // batch x K
};

// Gradients of the loss w.r.t. forward outputs. Empty matrices mean zero.
struct OutputGrads {
    Matrix d_projections;  // w.r.t. the normalized projections
    Matrix d_logits_c;
    Matrix d_logits_b;
    Matrix d_embeddings;   // direct embedding term, rarely used
};

ModelState init_state(const NetConfig& cfg, std::uint64_t seed);
std::size_t param_count(const NetConfig& cfg);

ForwardRecord forward(const ModelState& state, const Matrix& batch);

// Returns d(loss)/d(params) as a flat vector matching state.params.
std::vector<double> backward(const ModelState& state, const ForwardRecord& record,
                             const OutputGrads& grads);

// v <- momentum*v + g + weight_decay*theta; theta <- theta - lr*v.
void sgd_step(ModelState& state, const std::vector<double>& grads, double lr, double momentum,
              double weight_decay);

Matrix softmax_rows(const Matrix& logits);

void save_state(const ModelState& state, std::ostream& os);
ModelState load_state(std::istream& is);

}  // namespace dasc
