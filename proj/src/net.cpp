#include "dasc/net.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "dasc/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dasc {

namespace {

struct Layer {
    std::size_t in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;
};

struct Layout {
    std::vector<Layer> backbone;   // activation after all but the last
    std::vector<Layer> projector;  // activation after the first, l2 norm at the end
    Layer classifier_c;
    Layer classifier_b;
    std::size_t total = 0;
};

Layer add_layer(std::size_t in, std::size_t out, std::size_t& off) {
    Layer l{in, out, off, off + in * out};
    off += in * out + out;
    return l;
}

Layout make_layout(const NetConfig& cfg) {
    Layout lo;
    std::size_t off = 0;
    std::size_t prev = static_cast<std::size_t>(cfg.d_in);
    for (int h : cfg.hidden) {
        lo.backbone.push_back(add_layer(prev, static_cast<std::size_t>(h), off));
        prev = static_cast<std::size_t>(h);
    }
    lo.backbone.push_back(add_layer(prev, static_cast<std::size_t>(cfg.d_embed), off));
    // 2-layer projector ending in l2 normalization.
    lo.projector.push_back(add_layer(cfg.d_embed, cfg.d_embed, off));
    lo.projector.push_back(add_layer(cfg.d_embed, cfg.d_proj, off));
    lo.classifier_c = add_layer(cfg.d_embed, cfg.K, off);
    lo.classifier_b = add_layer(cfg.d_embed, cfg.K, off);
    lo.total = off;
    return lo;
}

Matrix linear_forward(const std::vector<double>& p, const Layer& l, const Matrix& x) {
    Matrix y(x.rows, l.out);
    const double* w = p.data() + l.w_off;
    const double* b = p.data() + l.b_off;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(x.rows); ++r) {
        const double* xr = x.data.data() + r * x.cols;
        double* yr = y.data.data() + r * y.cols;
        for (std::size_t o = 0; o < l.out; ++o) {
            double s = b[o];
            const double* wo = w + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) s += wo[i] * xr[i];
            yr[o] = s;
        }
    }
    return y;
}

// Accumulates dW/db into g; returns dX.
Matrix linear_backward(const std::vector<double>& p, const Layer& l, const Matrix& x,
                       const Matrix& dy, std::vector<double>& g) {
    const double* w = p.data() + l.w_off;
    double* gw = g.data() + l.w_off;
    double* gb = g.data() + l.b_off;
    Matrix dx(x.rows, l.in);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.data.data() + r * x.cols;
        const double* dyr = dy.data.data() + r * dy.cols;
        double* dxr = dx.data.data() + r * dx.cols;
        for (std::size_t o = 0; o < l.out; ++o) {
            const double d = dyr[o];
            if (d == 0.0) continue;
            gb[o] += d;
            double* gwo = gw + o * l.in;
            const double* wo = w + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) {
                gwo[i] += d * xr[i];
                dxr[i] += d * wo[i];
            }
        }
    }
    return dx;
}

void apply_activation(Matrix& m, Activation a) {
    if (a == Activation::relu) {
        for (double& x : m.data) x = x > 0.0 ? x : 0.0;
    } else {
        for (double& x : m.data) x = std::tanh(x);
    }
}

// dL/dpre from dL/dact, using pre and act.
void activation_backward(Matrix& d, const Matrix& pre, const Matrix& act, Activation a) {
    if (a == Activation::relu) {
        for (std::size_t i = 0; i < d.data.size(); ++i)
            if (pre.data[i] <= 0.0) d.data[i] = 0.0;
    } else {
        for (std::size_t i = 0; i < d.data.size(); ++i)
            d.data[i] *= 1.0 - act.data[i] * act.data[i];
    }
}

constexpr double kNormFloor = 1e-12;

}  // namespace

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh_;
    throw std::invalid_argument("unknown activation: " + s);
}

void NetConfig::validate() const {
    if (d_in < 1 || d_embed < 1 || d_proj < 1 || K < 1)
        throw std::invalid_argument("NetConfig: all dims must be >= 1");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("NetConfig: hidden widths must be >= 1");
}

std::size_t param_count(const NetConfig& cfg) { return make_layout(cfg).total; }

ModelState init_state(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const Layout lo = make_layout(cfg);
    ModelState st;
    st.cfg = cfg;
    st.params.assign(lo.total, 0.0);
    st.momentum.assign(lo.total, 0.0);
    Rng rng(seed);
    auto init_layer = [&](const Layer& l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        for (std::size_t i = 0; i < l.in * l.out; ++i) st.params[l.w_off + i] = rng.uniform(-bound, bound);
        for (std::size_t i = 0; i < l.out; ++i) st.params[l.b_off + i] = rng.uniform(-bound, bound);
    };
    for (const auto& l : lo.backbone) init_layer(l);
    for (const auto& l : lo.projector) init_layer(l);
    init_layer(lo.classifier_c);
    init_layer(lo.classifier_b);
    return st;
}

ForwardRecord forward(const ModelState& state, const Matrix& batch) {
    if (batch.cols != static_cast<std::size_t>(state.cfg.d_in))
        throw std::invalid_argument("forward: batch column count != d_in");
    const Layout lo = make_layout(state.cfg);
    ForwardRecord rec;
    rec.input = batch;

    const Matrix* cur = &rec.input;
    for (std::size_t li = 0; li < lo.backbone.size(); ++li) {
        rec.backbone_pre.push_back(linear_forward(state.params, lo.backbone[li], *cur));
        Matrix act = rec.backbone_pre.back();
        if (li + 1 < lo.backbone.size()) apply_activation(act, state.cfg.activation);
        rec.backbone_act.push_back(std::move(act));
        cur = &rec.backbone_act.back();
    }
    rec.embeddings = rec.backbone_act.back();

    cur = &rec.embeddings;
    for (std::size_t li = 0; li < lo.projector.size(); ++li) {
        rec.projector_pre.push_back(linear_forward(state.params, lo.projector[li], *cur));
        Matrix act = rec.projector_pre.back();
        if (li + 1 < lo.projector.size()) apply_activation(act, state.cfg.activation);
        rec.projector_act.push_back(std::move(act));
        cur = &rec.projector_act.back();
    }

    const Matrix& raw = rec.projector_act.back();
    rec.projections = Matrix(raw.rows, raw.cols);
    rec.proj_norms.resize(raw.rows);
    for (std::size_t r = 0; r < raw.rows; ++r) {
        double n = std::max(l2_norm(raw.row(r)), kNormFloor);
        rec.proj_norms[r] = n;
        for (std::size_t c = 0; c < raw.cols; ++c) rec.projections(r, c) = raw(r, c) / n;
    }

    rec.logits_c = linear_forward(state.params, lo.classifier_c, rec.embeddings);
    rec.logits_b = linear_forward(state.params, lo.classifier_b, rec.embeddings);

    for (double v : rec.logits_c.data)
        if (!std::isfinite(v)) throw std::runtime_error("forward: non-finite logits");
    for (double v : rec.logits_b.data)
        if (!std::isfinite(v)) throw std::runtime_error("forward: non-finite logits");
    return rec;
}

std::vector<double> backward(const ModelState& state, const ForwardRecord& record,
                             const OutputGrads& grads) {
    const Layout lo = make_layout(state.cfg);
    const std::size_t batch = record.input.rows;
    std::vector<double> g(lo.total, 0.0);

    Matrix d_embed(batch, static_cast<std::size_t>(state.cfg.d_embed));
    if (grads.d_embeddings.rows) {
        if (grads.d_embeddings.rows != batch) throw std::invalid_argument("backward: grad shape mismatch");
        d_embed = grads.d_embeddings;
    }

    // Classifier heads.
    if (grads.d_logits_c.rows) {
        Matrix dx = linear_backward(state.params, lo.classifier_c, record.embeddings, grads.d_logits_c, g);
        for (std::size_t i = 0; i < d_embed.data.size(); ++i) d_embed.data[i] += dx.data[i];
    }
    if (grads.d_logits_b.rows) {
        Matrix dx = linear_backward(state.params, lo.classifier_b, record.embeddings, grads.d_logits_b, g);
        for (std::size_t i = 0; i < d_embed.data.size(); ++i) d_embed.data[i] += dx.data[i];
    }

    // Projector chain: undo l2 normalization, then the two layers.
    if (grads.d_projections.rows) {
        const Matrix& z = record.projections;
        Matrix d_raw(z.rows, z.cols);
        for (std::size_t r = 0; r < z.rows; ++r) {
            const double n = record.proj_norms[r];
            const double zdot = dot(grads.d_projections.row(r), z.row(r));
            for (std::size_t c = 0; c < z.cols; ++c)
                d_raw(r, c) = (grads.d_projections(r, c) - zdot * z(r, c)) / n;
        }
        Matrix d = std::move(d_raw);
        for (std::size_t li = lo.projector.size(); li-- > 0;) {
            if (li + 1 < lo.projector.size())
                activation_backward(d, record.projector_pre[li], record.projector_act[li],
                                    state.cfg.activation);
            const Matrix& in = li == 0 ? record.embeddings : record.projector_act[li - 1];
            d = linear_backward(state.params, lo.projector[li], in, d, g);
        }
        for (std::size_t i = 0; i < d_embed.data.size(); ++i) d_embed.data[i] += d.data[i];
    }

    // Backbone chain.
    Matrix d = std::move(d_embed);
    for (std::size_t li = lo.backbone.size(); li-- > 0;) {
        if (li + 1 < lo.backbone.size())
            activation_backward(d, record.backbone_pre[li], record.backbone_act[li],
                                state.cfg.activation);
        const Matrix& in = li == 0 ? record.input : record.backbone_act[li - 1];
        d = linear_backward(state.params, lo.backbone[li], in, d, g);
    }
    return g;
}

void sgd_step(ModelState& state, const std::vector<double>& grads, double lr, double momentum,
              double weight_decay) {
    if (grads.size() != state.params.size())
        throw std::invalid_argument("sgd_step: gradient size mismatch");
    for (double v : grads)
        if (!std::isfinite(v)) throw std::runtime_error("sgd_step: non-finite gradient");
    for (std::size_t i = 0; i < state.params.size(); ++i) {
        double v = momentum * state.momentum[i] + grads[i] + weight_decay * state.params[i];
        state.momentum[i] = v;
        state.params[i] -= lr * v;
        if (!std::isfinite(state.params[i])) throw std::runtime_error("sgd_step: non-finite parameter");
    }
    state.step_count++;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p = logits;
    for (std::size_t r = 0; r < p.rows; ++r) softmax_inplace(p.row(r));
    return p;
}

namespace {
constexpr std::uint32_t kStateMagic = 0x44534331;  // "DSC1"

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

void save_state(const ModelState& state, std::ostream& os) {
    put(os, kStateMagic);
    put(os, static_cast<std::int32_t>(state.cfg.d_in));
    put(os, static_cast<std::int32_t>(state.cfg.hidden.size()));
    for (int h : state.cfg.hidden) put(os, static_cast<std::int32_t>(h));
    put(os, static_cast<std::int32_t>(state.cfg.d_embed));
    put(os, static_cast<std::int32_t>(state.cfg.d_proj));
    put(os, static_cast<std::int32_t>(state.cfg.K));
    put(os, static_cast<std::int32_t>(state.cfg.activation));
    put(os, static_cast<std::int64_t>(state.step_count));
    put(os, static_cast<std::uint64_t>(state.params.size()));
    os.write(reinterpret_cast<const char*>(state.params.data()),
             static_cast<std::streamsize>(state.params.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(state.momentum.data()),
             static_cast<std::streamsize>(state.momentum.size() * sizeof(double)));
}

ModelState load_state(std::istream& is) {
    if (get<std::uint32_t>(is) != kStateMagic) throw std::runtime_error("load_state: bad magic");
    ModelState st;
    st.cfg.d_in = get<std::int32_t>(is);
    const int nh = get<std::int32_t>(is);
    st.cfg.hidden.resize(nh);
    for (int i = 0; i < nh; ++i) st.cfg.hidden[i] = get<std::int32_t>(is);
    st.cfg.d_embed = get<std::int32_t>(is);
    st.cfg.d_proj = get<std::int32_t>(is);
    st.cfg.K = get<std::int32_t>(is);
    st.cfg.activation = static_cast<Activation>(get<std::int32_t>(is));
    st.step_count = get<std::int64_t>(is);
    const auto n = get<std::uint64_t>(is);
    if (n != param_count(st.cfg)) throw std::runtime_error("load_state: parameter count mismatch");
    st.params.resize(n);
    st.momentum.resize(n);
    is.read(reinterpret_cast<char*>(st.params.data()), static_cast<std::streamsize>(n * sizeof(double)));
    is.read(reinterpret_cast<char*>(st.momentum.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("load_state: truncated stream");
    return st;
}

}  // namespace dasc
