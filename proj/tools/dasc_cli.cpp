#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dasc/config.hpp"
#include "dasc/eval.hpp"
#include "dasc/train.hpp"

namespace fs = std::filesystem;
using namespace dasc;

namespace {

// 0 ok, 2 usage/config, 3 numeric failure, 4 I/O.
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

bool looks_like_io_error(const std::string& msg) {
    for (const char* pat : {"open", "header", "line ", "truncated", "malformed", "write failed",
                            "arity", "out of range at"})
        if (msg.find(pat) != std::string::npos) return true;
    return false;
}

// Attaches every RunConfig key as a --key flag; values are applied on top of
// any --config file after parsing (flags win).
void attach_config_flags(CLI::App* app, std::vector<std::pair<std::string, std::string>>& overrides) {
    for (const auto& key : RunConfig::keys()) {
        app->add_option_function<std::string>(
               "--" + key,
               [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
               "config key " + key + " (default " + RunConfig{}.get(key) + ")");
    }
}

RunConfig build_config(const std::string& config_path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate();
    return cfg;
}

void write_centroid_dump(const fs::path& dir, int epoch, const SelectionResult& sel,
                         const std::vector<double>& gamma_label, const Dataset& train) {
    std::ofstream f(dir / ("selection_epoch" + std::to_string(epoch) + ".csv"));
    f << "id,gamma_label,clean_posterior,clean_flag,noisy_label";
    const bool with_truth = train.has_true_labels();
    if (with_truth) f << ",true_label";
    f << '\n';
    f.precision(17);
    for (std::size_t i = 0; i < sel.clean_mask.size(); ++i) {
        f << i << ',' << gamma_label[i] << ',' << sel.clean_posterior[i] << ','
          << (sel.clean_mask[i] ? 1 : 0) << ',' << train.noisy_labels[i];
        if (with_truth) f << ',' << train.true_labels[i];
        f << '\n';
    }
}

struct RunResult {
    MetricsRecord final_metrics;
};

// Trains one configuration end to end, writing metrics.jsonl and checkpoints
// under out_dir.
RunResult run_training(const RunConfig& cfg, const Dataset& train, const Dataset& test,
                       const std::string& resume_path, bool dump_selection) {
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    TrainView view(train);
    Trainer trainer(view, cfg.net, cfg.train, cfg.ablation);

    std::ofstream metrics;
    if (!resume_path.empty()) {
        trainer.load_checkpoint(resume_path);
        metrics.open(out / "metrics.jsonl", std::ios::app);
    } else {
        metrics.open(out / "metrics.jsonl");
    }
    if (!metrics) throw std::runtime_error("cannot open metrics.jsonl for writing");

    std::vector<int> train_true_freq(train.K, 0);
    if (train.has_true_labels())
        for (int y : train.true_labels) train_true_freq[y]++;
    else
        train_true_freq = train.class_counts;

    RunResult result;
    trainer.run_all([&](int epoch) {
        const EpochArtifacts& art = trainer.artifacts();
        const Matrix test_probs = trainer.predict(test.features);
        const SelectionResult* sel = art.selection ? &*art.selection : nullptr;
        MetricsRecord rec = evaluate(test_probs, test.true_labels, train_true_freq, sel,
                                     train.noisy_labels, train.true_labels, epoch, art.tau,
                                     cfg.ablation.auc_on_gamma,
                                     art.gamma_label.empty() ? nullptr : &art.gamma_label);
        if (art.pseudo && art.groups && train.has_true_labels()) {
            const PseudoAccuracy pa =
                pseudo_accuracy(art.pseudo->y_hat, train.true_labels, *art.groups);
            rec.pseudo_acc_all = pa.all;
            rec.pseudo_acc_high = pa.high;
            rec.pseudo_acc_low = pa.low;
        }
        metrics << rec.to_json() << '\n';
        metrics.flush();
        result.final_metrics = rec;

        if (dump_selection && sel)
            write_centroid_dump(out, epoch, *sel, art.gamma_label, train);

        const int every = cfg.train.checkpoint_every;
        if (every > 0 && epoch % every == 0)
            trainer.save_checkpoint((out / ("ckpt_epoch" + std::to_string(epoch) + ".bin")).string());
        if (epoch == cfg.train.epochs)
            trainer.save_checkpoint((out / "ckpt_final.bin").string());
    });
    return result;
}

int cmd_gen(const RunConfig& cfg, int n_test_per_class) {
    fs::create_directories(cfg.out_dir);
    Dataset train = generate_synthetic(cfg.gen);
    train.split_tag = "train";

    GenSpec test_spec = cfg.gen;
    test_spec.rho = 1.0;
    test_spec.n_max = n_test_per_class;
    test_spec.noise_type = NoiseType::none;
    test_spec.noise_ratio = 0.0;
    Dataset test = generate_synthetic(test_spec, /*sample_stream=*/1);
    test.split_tag = "test";

    const fs::path out(cfg.out_dir);
    save_dataset(train, (out / "train.txt").string());
    save_dataset(test, (out / "test.txt").string());

    std::cout << "wrote " << (out / "train.txt").string() << " (" << train.size() << " samples) and "
              << (out / "test.txt").string() << " (" << test.size() << " samples)\n";
    std::cout << "class_counts:";
    for (int c : train.class_counts) std::cout << ' ' << c;
    std::cout << '\n';
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume, bool dump_selection) {
    if (cfg.train_data.empty()) throw std::invalid_argument("--train_data is required");
    if (cfg.test_data.empty()) throw std::invalid_argument("--test_data is required");
    const Dataset train = load_dataset(cfg.train_data);
    const Dataset test = load_dataset(cfg.test_data);
    const RunResult r = run_training(cfg, train, test, resume, dump_selection);
    std::cout << "final test accuracy " << r.final_metrics.overall_acc << '\n';
    if (r.final_metrics.selection_auc)
        std::cout << "final selection AUC " << *r.final_metrics.selection_auc << '\n';
    return 0;
}

int cmd_select(const RunConfig& cfg, const std::string& checkpoint, const std::string& centroid_mode,
               int epoch_for_tau) {
    if (cfg.train_data.empty()) throw std::invalid_argument("--train_data is required");
    const Dataset train = load_dataset(cfg.train_data);
    TrainView view(train);
    Trainer trainer(view, cfg.net, cfg.train, cfg.ablation);
    trainer.load_checkpoint(checkpoint);

    const bool use_dacc = centroid_mode != "per-class";
    std::vector<double> gamma_label;
    const int t = epoch_for_tau >= 0 ? epoch_for_tau : trainer.current_epoch();
    const SelectionResult sel = trainer.selection_pass(use_dacc, t, &gamma_label);

    fs::create_directories(cfg.out_dir);
    write_centroid_dump(cfg.out_dir, t, sel, gamma_label, train);

    if (train.has_true_labels()) {
        std::vector<bool> truth(train.size());
        for (std::size_t i = 0; i < train.size(); ++i)
            truth[i] = train.noisy_labels[i] == train.true_labels[i];
        const std::vector<double>& score = cfg.ablation.auc_on_gamma ? gamma_label : sel.clean_posterior;
        auto auc = roc_auc(score, truth);
        std::size_t selc = 0, correct = 0, clean_total = 0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            clean_total += truth[i];
            if (sel.clean_mask[i]) {
                selc++;
                correct += truth[i];
            }
        }
        std::cout << "selection_auc " << (auc ? std::to_string(*auc) : "n/a") << '\n';
        std::cout << "precision " << (selc ? static_cast<double>(correct) / selc : 0.0) << '\n';
        std::cout << "recall "
                  << (clean_total ? static_cast<double>(correct) / clean_total : 0.0) << '\n';
    } else {
        std::cout << "true labels unavailable; selection metrics skipped\n";
    }
    return 0;
}

int cmd_sweep(const RunConfig& base, const std::vector<std::string>& toggles, int seeds, int jobs) {
    for (const auto& t : toggles) base.get(t);  // reject unknown toggles up front

    struct Row {
        RunConfig cfg;
        std::string hash;
        bool ok = false;
        std::string error;
        MetricsRecord metrics;
    };
    std::vector<Row> rows;
    const std::size_t n_combo = std::size_t{1} << toggles.size();
    for (std::size_t combo = 0; combo < n_combo; ++combo) {
        for (int s = 0; s < seeds; ++s) {
            Row row;
            row.cfg = base;
            for (std::size_t b = 0; b < toggles.size(); ++b)
                row.cfg.set(toggles[b], (combo >> b) & 1 ? "true" : "false");
            row.cfg.set("seed", std::to_string(base.train.seed + s));
            row.cfg.set("gen_seed", std::to_string(base.gen.seed + s));
            row.hash = row.cfg.hash();
            row.cfg.out_dir = (fs::path(base.out_dir) / ("row_" + row.hash)).string();
            rows.push_back(std::move(row));
        }
    }

    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next == rows.size()) return;
                i = next++;
            }
            Row& row = rows[i];
            try {
                const fs::path done = fs::path(row.cfg.out_dir) / "done.json";
                if (fs::exists(done)) {
                    std::ifstream f(done);
                    std::string line;
                    std::getline(f, line);
                    row.metrics = MetricsRecord::from_json(line);
                    row.ok = true;
                    continue;
                }
                Dataset train = generate_synthetic(row.cfg.gen);
                GenSpec ts = row.cfg.gen;
                ts.rho = 1.0;
                ts.n_max = 100;
                ts.noise_type = NoiseType::none;
                ts.noise_ratio = 0.0;
                Dataset test = generate_synthetic(ts, 1);
                RunResult r = run_training(row.cfg, train, test, "", false);
                row.metrics = r.final_metrics;
                row.ok = true;
                std::ofstream f(done);
                f << row.metrics.to_json() << '\n';
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    fs::create_directories(base.out_dir);
    std::ofstream csv(fs::path(base.out_dir) / "sweep_summary.csv");
    csv << "config_hash,seed";
    for (const auto& t : toggles) csv << ',' << t;
    csv << ",status,overall_acc,few_acc,selection_auc\n";
    for (const Row& row : rows) {
        csv << row.hash << ',' << row.cfg.train.seed;
        for (const auto& t : toggles) csv << ',' << row.cfg.get(t);
        if (row.ok) {
            csv << ",ok," << row.metrics.overall_acc << ','
                << (row.metrics.few_acc ? std::to_string(*row.metrics.few_acc) : "") << ','
                << (row.metrics.selection_auc ? std::to_string(*row.metrics.selection_auc) : "");
        } else {
            csv << ",failed,,,";
        }
        csv << '\n';
    }
    std::cout << "wrote " << (fs::path(base.out_dir) / "sweep_summary.csv").string() << " ("
              << rows.size() << " rows)\n";
    for (const Row& row : rows)
        if (!row.ok) std::cout << "row " << row.hash << " failed: " << row.error << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DaSC: distribution-aware sample selection and contrastive learning"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    app.add_option("--config", config_path, "key=value config file; flags override it");

    auto* gen = app.add_subcommand("gen", "generate a synthetic train/test dataset pair");
    int n_test_per_class = 100;
    gen->add_option("--n-test-per-class", n_test_per_class, "balanced test-set size per class");

    auto* train = app.add_subcommand("train", "train the full framework");
    std::string resume;
    bool dump_selection = false;
    train->add_option("--resume", resume, "resume from a checkpoint file");
    train->add_flag("--dump-selection", dump_selection, "write selection_epoch{t}.csv per epoch");

    auto* select = app.add_subcommand("select", "one centroid-estimation + selection pass");
    std::string checkpoint, centroid_mode = "dacc";
    int epoch_for_tau = -1;
    select->add_option("--checkpoint", checkpoint, "trainer checkpoint")->required();
    select->add_option("--centroid", centroid_mode, "dacc|per-class")
        ->check(CLI::IsMember({"dacc", "per-class"}));
    select->add_option("--epoch", epoch_for_tau, "epoch index for the tau schedule");

    auto* sweep = app.add_subcommand("sweep", "run an ablation cross-product");
    std::vector<std::string> toggles;
    int seeds = 1, jobs = 1;
    sweep->add_option("--toggles", toggles, "boolean config keys to cross")->delimiter(',');
    sweep->add_option("--seeds", seeds, "seeds per configuration");
    sweep->add_option("--jobs", jobs, "parallel rows");

    for (auto* sub : {gen, train, select, sweep}) attach_config_flags(sub, overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        const RunConfig cfg = build_config(config_path, overrides);
        if (gen->parsed()) return cmd_gen(cfg, n_test_per_class);
        if (train->parsed()) return cmd_train(cfg, resume, dump_selection);
        if (select->parsed()) return cmd_select(cfg, checkpoint, centroid_mode, epoch_for_tau);
        if (sweep->parsed()) return cmd_sweep(cfg, toggles, seeds, jobs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return looks_like_io_error(e.what()) ? kExitIo : kExitNumeric;
    }
    return 0;
}
