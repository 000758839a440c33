#include "dasc/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace dasc {

namespace {

int to_int(const std::string& v) {
    std::size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return r;
}

double to_double(const std::string& v) {
    std::size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
    return r;
}

std::uint64_t to_u64(const std::string& v) {
    std::size_t pos = 0;
    const auto r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return r;
}

bool to_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("not a boolean: " + v);
}

std::vector<int> to_int_list(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(to_int(item));
    return out;
}

std::string from_int_list(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Entry {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::map<std::string, Entry>& registry() {
    static const std::map<std::string, Entry> reg = [] {
        std::map<std::string, Entry> m;
        auto add = [&](const std::string& key, auto setter, auto getter) {
            m[key] = Entry{setter, getter};
        };
#define INT_KEY(name, field) \
    add(name, [](RunConfig& c, const std::string& v) { c.field = to_int(v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); })
#define DBL_KEY(name, field) \
    add(name, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
        [](const RunConfig& c) { return fmt(c.field); })
#define BOOL_KEY(name, field) \
    add(name, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
        [](const RunConfig& c) { return c.field ? "true" : "false"; })
        INT_KEY("K", gen.K);
        INT_KEY("d", gen.d);
        INT_KEY("n_max", gen.n_max);
        DBL_KEY("rho", gen.rho);
        DBL_KEY("class_sep", gen.class_sep);
        DBL_KEY("intra_std", gen.intra_std);
        add("noise_type",
            [](RunConfig& c, const std::string& v) { c.gen.noise_type = parse_noise_type(v); },
            [](const RunConfig& c) { return to_string(c.gen.noise_type); });
        DBL_KEY("noise_ratio", gen.noise_ratio);
        BOOL_KEY("exact_quota", gen.exact_quota);
        add("gen_seed", [](RunConfig& c, const std::string& v) { c.gen.seed = to_u64(v); },
            [](const RunConfig& c) { return std::to_string(c.gen.seed); });

        add("hidden", [](RunConfig& c, const std::string& v) { c.net.hidden = to_int_list(v); },
            [](const RunConfig& c) { return from_int_list(c.net.hidden); });
        INT_KEY("d_embed", net.d_embed);
        INT_KEY("d_proj", net.d_proj);
        add("activation",
            [](RunConfig& c, const std::string& v) { c.net.activation = parse_activation(v); },
            [](const RunConfig& c) {
                return c.net.activation == Activation::relu ? "relu" : "tanh";
            });

        INT_KEY("epochs", train.epochs);
        INT_KEY("warmup", train.warmup);
        INT_KEY("sbcl_warmup", train.sbcl_warmup);
        INT_KEY("batch_size", train.batch_size);
        DBL_KEY("lr", train.lr);
        DBL_KEY("momentum", train.momentum);
        DBL_KEY("weight_decay", train.weight_decay);
        BOOL_KEY("cosine_lr", train.cosine_lr);
        DBL_KEY("tau_c", train.tau_c);
        DBL_KEY("tau_T", train.tau_T);
        DBL_KEY("tau_s", train.tau_s);
        DBL_KEY("tau_m", train.tau_m);
        DBL_KEY("lambda_sbcl", train.lambda_sbcl);
        DBL_KEY("lambda_midl", train.lambda_midl);
        DBL_KEY("phi", train.phi);
        DBL_KEY("alpha_mixup", train.alpha_mixup);
        INT_KEY("bank_capacity", train.bank_capacity);
        DBL_KEY("sharpen_T", train.sharpen_T);
        DBL_KEY("lambda_u_max", train.lambda_u_max);
        INT_KEY("ramp_epochs", train.ramp_epochs);
        DBL_KEY("sigma_weak", train.sigma_weak);
        DBL_KEY("sigma_strong", train.sigma_strong);
        DBL_KEY("dropout_rate", train.dropout_rate);
        INT_KEY("checkpoint_every", train.checkpoint_every);
        add("seed", [](RunConfig& c, const std::string& v) { c.train.seed = to_u64(v); },
            [](const RunConfig& c) { return std::to_string(c.train.seed); });

        BOOL_KEY("use_selection", ablation.use_selection);
        BOOL_KEY("use_dacc", ablation.use_dacc);
        BOOL_KEY("use_temperature_scaling", ablation.use_temperature_scaling);
        BOOL_KEY("use_sbcl", ablation.use_sbcl);
        BOOL_KEY("use_midl", ablation.use_midl);
        BOOL_KEY("use_confident_subset", ablation.use_confident_subset);
        add("bank_keys",
            [](RunConfig& c, const std::string& v) {
                if (v == "mixup") c.ablation.bank_keys = BankKeys::mixup;
                else if (v == "plain") c.ablation.bank_keys = BankKeys::plain;
                else throw std::invalid_argument("bank_keys must be mixup|plain");
            },
            [](const RunConfig& c) {
                return c.ablation.bank_keys == BankKeys::mixup ? "mixup" : "plain";
            });
        add("bank_push",
            [](RunConfig& c, const std::string& v) {
                if (v == "low") c.ablation.bank_push = BankPush::low;
                else if (v == "all") c.ablation.bank_push = BankPush::all;
                else throw std::invalid_argument("bank_push must be low|all");
            },
            [](const RunConfig& c) {
                return c.ablation.bank_push == BankPush::low ? "low" : "all";
            });
        add("co_mode",
            [](RunConfig& c, const std::string& v) {
                if (v == "cross") c.ablation.co_mode = CoMode::cross;
                else if (v == "self") c.ablation.co_mode = CoMode::self;
                else throw std::invalid_argument("co_mode must be cross|self");
            },
            [](const RunConfig& c) {
                return c.ablation.co_mode == CoMode::cross ? "cross" : "self";
            });
        add("representation_source",
            [](RunConfig& c, const std::string& v) {
                if (v == "projector") c.ablation.representation_source = ReprSource::projector;
                else if (v == "backbone") c.ablation.representation_source = ReprSource::backbone;
                else throw std::invalid_argument("representation_source must be projector|backbone");
            },
            [](const RunConfig& c) {
                return c.ablation.representation_source == ReprSource::projector ? "projector"
                                                                                 : "backbone";
            });
        add("prediction_source",
            [](RunConfig& c, const std::string& v) {
                if (v == "conventional") c.ablation.prediction_source = PredSource::conventional;
                else if (v == "balanced") c.ablation.prediction_source = PredSource::balanced;
                else throw std::invalid_argument("prediction_source must be conventional|balanced");
            },
            [](const RunConfig& c) {
                return c.ablation.prediction_source == PredSource::conventional ? "conventional"
                                                                                : "balanced";
            });
        add("auc_score",
            [](RunConfig& c, const std::string& v) {
                if (v == "posterior") c.ablation.auc_on_gamma = false;
                else if (v == "gamma") c.ablation.auc_on_gamma = true;
                else throw std::invalid_argument("auc_score must be posterior|gamma");
            },
            [](const RunConfig& c) { return c.ablation.auc_on_gamma ? "gamma" : "posterior"; });

        add("train_data", [](RunConfig& c, const std::string& v) { c.train_data = v; },
            [](const RunConfig& c) { return c.train_data; });
        add("test_data", [](RunConfig& c, const std::string& v) { c.test_data = v; },
            [](const RunConfig& c) { return c.test_data; });
        add("out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
            [](const RunConfig& c) { return c.out_dir; });
#undef INT_KEY
#undef DBL_KEY
#undef BOOL_KEY
        return m;
    }();
    return reg;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = registry().find(key);
    if (it == registry().end()) throw std::invalid_argument("unknown config key: " + key);
    it->second.set(*this, value);
}

std::string RunConfig::get(const std::string& key) const {
    auto it = registry().find(key);
    if (it == registry().end()) throw std::invalid_argument("unknown config key: " + key);
    return it->second.get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [key, _] : registry()) out.push_back(key);
        return out;
    }();
    return k;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.resize(hash_pos);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            if (a == std::string::npos) return std::string{};
            const auto b = s.find_last_not_of(" \t");
            return s.substr(a, b - a + 1);
        };
        try {
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::save_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("config: cannot write " + path);
    for (const auto& key : keys()) f << key << '=' << get(key) << '\n';
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> m;
    for (const auto& key : keys()) m[key] = get(key);
    return m;
}

std::string RunConfig::hash() const {
    // FNV-1a over the canonical key=value serialization.
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [k, v] : to_map()) {
        for (const std::string* s : {&k, &v}) {
            for (char c : *s) {
                h ^= static_cast<unsigned char>(c);
                h *= 1099511628211ULL;
            }
            h ^= '=';
            h *= 1099511628211ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunConfig::validate() const {
    gen.validate();
    train.validate();
    NetConfig nc = net;
    nc.d_in = gen.d > 0 ? gen.d : 1;
    nc.K = gen.K > 0 ? gen.K : 1;
    nc.validate();
}

}  // namespace dasc
