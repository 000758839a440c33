#include "dasc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dasc/rng.hpp"

namespace dasc {

NoiseType parse_noise_type(const std::string& s) {
    if (s == "none") return NoiseType::none;
    if (s == "sym" || s == "symmetric") return NoiseType::symmetric;
    if (s == "asym" || s == "asymmetric") return NoiseType::asymmetric;
    throw std::invalid_argument("unknown noise type: " + s);
}

std::string to_string(NoiseType t) {
    switch (t) {
        case NoiseType::none: return "none";
        case NoiseType::symmetric: return "symmetric";
        case NoiseType::asymmetric: return "asymmetric";
    }
    return "?";
}

void GenSpec::validate() const {
    if (K < 2) throw std::invalid_argument("GenSpec: K must be >= 2");
    if (d < 1) throw std::invalid_argument("GenSpec: d must be >= 1");
    if (n_max < 1) throw std::invalid_argument("GenSpec: n_max must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("GenSpec: rho must be in (0,1]");
    if (!(class_sep > 0.0)) throw std::invalid_argument("GenSpec: class_sep must be > 0");
    if (!(intra_std > 0.0)) throw std::invalid_argument("GenSpec: intra_std must be > 0");
    if (!(noise_ratio >= 0.0 && noise_ratio < 1.0))
        throw std::invalid_argument("GenSpec: noise_ratio must be in [0,1)");
}

bool Dataset::has_true_labels() const {
    return !true_labels.empty() &&
           std::all_of(true_labels.begin(), true_labels.end(), [](int y) { return y >= 0; });
}

void Dataset::recompute_class_counts() {
    class_counts.assign(K, 0);
    for (int y : noisy_labels) class_counts[y]++;
}

void Dataset::validate() const {
    const std::size_t n = features.rows;
    if (n == 0 || features.cols == 0) throw std::runtime_error("Dataset: empty");
    if (noisy_labels.size() != n || true_labels.size() != n)
        throw std::runtime_error("Dataset: label array size mismatch");
    std::vector<int> counts(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (noisy_labels[i] < 0 || noisy_labels[i] >= K)
            throw std::runtime_error("Dataset: noisy label out of range at row " + std::to_string(i));
        if (true_labels[i] >= K)
            throw std::runtime_error("Dataset: true label out of range at row " + std::to_string(i));
        counts[noisy_labels[i]]++;
    }
    if (counts != class_counts) throw std::runtime_error("Dataset: class_counts inconsistent");
}

std::vector<int> make_longtail_counts(const GenSpec& spec) {
    if (spec.K < 2) throw std::invalid_argument("make_longtail_counts: K must be >= 2");
    if (spec.n_max < 1) throw std::invalid_argument("make_longtail_counts: n_max must be >= 1");
    std::vector<int> counts(spec.K);
    for (int k = 0; k < spec.K; ++k) {
        double nk = spec.n_max * std::pow(spec.rho, static_cast<double>(k) / (spec.K - 1));
        counts[k] = std::max(1, static_cast<int>(std::llround(nk)));
    }
    return counts;
}

Dataset generate_synthetic(const GenSpec& spec, std::uint64_t sample_stream) {
    spec.validate();
    auto counts = make_longtail_counts(spec);
    const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});

    // Prototypes depend only on the seed so that splits generated with
    // different sample streams (e.g. train vs test) share geometry.
    Rng proto_rng(spec.seed);
    Rng rng(spec.seed ^ (0x9e3779b97f4a7c15ULL * (sample_stream + 1)));

    // Prototypes: random unit directions scaled by class_sep.
    Matrix protos(spec.K, spec.d);
    for (int k = 0; k < spec.K; ++k) {
        double norm = 0.0;
        // Redraw on the (measure-zero) chance of a tiny vector.
        do {
            for (int j = 0; j < spec.d; ++j) protos(k, j) = proto_rng.normal();
            norm = l2_norm(protos.row(k));
        } while (norm < 1e-12);
        for (int j = 0; j < spec.d; ++j) protos(k, j) *= spec.class_sep / norm;
    }

    Dataset ds;
    ds.features = Matrix(n, spec.d);
    ds.noisy_labels.resize(n);
    ds.true_labels.resize(n);
    ds.K = spec.K;

    std::size_t i = 0;
    for (int k = 0; k < spec.K; ++k) {
        for (int c = 0; c < counts[k]; ++c, ++i) {
            for (int j = 0; j < spec.d; ++j)
                ds.features(i, j) = protos(k, j) + rng.normal(0.0, spec.intra_std);
            ds.true_labels[i] = k;
            ds.noisy_labels[i] = k;
        }
    }
    ds.recompute_class_counts();

    if (spec.noise_type != NoiseType::none && spec.noise_ratio > 0.0)
        ds = inject_noise(ds, spec.noise_type, spec.noise_ratio, spec.seed + 1, spec.exact_quota);
    return ds;
}

Dataset inject_noise(const Dataset& ds, NoiseType type, double noise_ratio, std::uint64_t seed,
                     bool exact_quota) {
    if (!(noise_ratio >= 0.0 && noise_ratio < 1.0))
        throw std::invalid_argument("inject_noise: noise_ratio must be in [0,1)");
    Dataset out = ds;
    if (type == NoiseType::none || noise_ratio == 0.0) return out;

    const std::size_t n = ds.size();
    Rng rng(seed);

    std::vector<std::size_t> flip_idx;
    if (exact_quota) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        const auto quota = static_cast<std::size_t>(std::llround(noise_ratio * n));
        flip_idx.assign(perm.begin(), perm.begin() + quota);
        std::sort(flip_idx.begin(), flip_idx.end());
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (rng.uniform(0.0, 1.0) < noise_ratio) flip_idx.push_back(i);
    }

    for (std::size_t i : flip_idx) {
        const int y = out.true_labels[i];
        if (type == NoiseType::symmetric) {
            // Uniform over the K-1 other classes.
            int r = static_cast<int>(rng.index(static_cast<std::size_t>(ds.K - 1)));
            out.noisy_labels[i] = r < y ? r : r + 1;
        } else {
            out.noisy_labels[i] = (y + 1) % ds.K;
        }
    }
    out.recompute_class_counts();
    return out;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
    f.precision(17);
    f << ds.size() << ' ' << ds.K << ' ' << ds.dim() << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        f << i << ' ' << ds.noisy_labels[i] << ' ' << ds.true_labels[i];
        for (int j = 0; j < ds.dim(); ++j) f << ' ' << ds.features(i, j);
        f << '\n';
    }
    if (!f) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line.empty()) throw std::runtime_error(path + ": no header");

    std::istringstream hs(line);
    std::size_t n = 0;
    int K = 0, d = 0;
    if (!(hs >> n >> K >> d) || n == 0 || K < 1 || d < 1)
        throw std::runtime_error(path + ": malformed header '" + line + "'");

    Dataset ds;
    ds.features = Matrix(n, static_cast<std::size_t>(d));
    ds.noisy_labels.resize(n);
    ds.true_labels.resize(n);
    ds.K = K;

    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(f, line))
            throw std::runtime_error(path + ": unexpected end of file at line " + std::to_string(i + 2));
        std::istringstream ls(line);
        long id;
        int ny, ty;
        if (!(ls >> id >> ny >> ty))
            throw std::runtime_error(path + ": malformed row at line " + std::to_string(i + 2));
        if (ny < 0 || ny >= K)
            throw std::runtime_error(path + ": noisy label out of range at line " + std::to_string(i + 2));
        if (ty >= K || ty < -1)
            throw std::runtime_error(path + ": true label out of range at line " + std::to_string(i + 2));
        ds.noisy_labels[i] = ny;
        ds.true_labels[i] = ty;
        for (int j = 0; j < d; ++j) {
            if (!(ls >> ds.features(i, j)))
                throw std::runtime_error(path + ": row arity mismatch at line " + std::to_string(i + 2));
        }
        double extra;
        if (ls >> extra)
            throw std::runtime_error(path + ": row arity mismatch at line " + std::to_string(i + 2));
    }
    ds.recompute_class_counts();
    return ds;
}

}  // namespace dasc
