#include "dasc/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dasc {

namespace {

using nlohmann::json;

void put_opt(json& j, const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
    else j[key] = nullptr;
}

std::optional<double> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

}  // namespace

std::string MetricsRecord::to_json() const {
    json j;
    j["epoch"] = epoch;
    j["overall_acc"] = overall_acc;
    put_opt(j, "many_acc", many_acc);
    put_opt(j, "medium_acc", medium_acc);
    put_opt(j, "few_acc", few_acc);
    put_opt(j, "selection_auc", selection_auc);
    put_opt(j, "selection_auc_few", selection_auc_few);
    put_opt(j, "selection_precision", selection_precision);
    put_opt(j, "selection_recall", selection_recall);
    put_opt(j, "pseudo_acc_all", pseudo_acc_all);
    put_opt(j, "pseudo_acc_high", pseudo_acc_high);
    put_opt(j, "pseudo_acc_low", pseudo_acc_low);
    j["clean_fraction"] = clean_fraction;
    j["tau"] = tau;
    j["per_class_acc"] = per_class_acc;
    return j.dump();
}

MetricsRecord MetricsRecord::from_json(const std::string& line) {
    const json j = json::parse(line);
    MetricsRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.overall_acc = j.at("overall_acc").get<double>();
    r.many_acc = get_opt(j, "many_acc");
    r.medium_acc = get_opt(j, "medium_acc");
    r.few_acc = get_opt(j, "few_acc");
    r.selection_auc = get_opt(j, "selection_auc");
    r.selection_auc_few = get_opt(j, "selection_auc_few");
    r.selection_precision = get_opt(j, "selection_precision");
    r.selection_recall = get_opt(j, "selection_recall");
    r.pseudo_acc_all = get_opt(j, "pseudo_acc_all");
    r.pseudo_acc_high = get_opt(j, "pseudo_acc_high");
    r.pseudo_acc_low = get_opt(j, "pseudo_acc_low");
    r.clean_fraction = j.at("clean_fraction").get<double>();
    r.tau = j.at("tau").get<double>();
    r.per_class_acc = j.at("per_class_acc").get<std::vector<double>>();
    return r;
}

ClassSets class_sets(const std::vector<int>& class_frequencies) {
    const int K = static_cast<int>(class_frequencies.size());
    ClassSets sets;
    if (K < 3) {
        for (int k = 0; k < K; ++k) sets.many.push_back(k);
        return sets;
    }
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (class_frequencies[a] != class_frequencies[b])
            return class_frequencies[a] > class_frequencies[b];
        return a < b;
    });
    const int n_many = (K + 2) / 3;  // ceil(K/3)
    const int n_few = K / 3;         // floor(K/3)
    for (int i = 0; i < K; ++i) {
        if (i < n_many) sets.many.push_back(order[i]);
        else if (i >= K - n_few) sets.few.push_back(order[i]);
        else sets.medium.push_back(order[i]);
    }
    return sets;
}

std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<bool>& binary_labels) {
    if (scores.size() != binary_labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool b : binary_labels) n_pos += b;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    // Average ranks; tied scores share the mean rank.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (binary_labels[order[k]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

PseudoAccuracy pseudo_accuracy(const Matrix& pseudo, const std::vector<int>& true_labels,
                               const ConfidenceGroups& groups) {
    auto acc_over = [&](const std::vector<std::size_t>& idx) -> std::optional<double> {
        if (idx.empty()) return std::nullopt;
        std::size_t hits = 0;
        for (std::size_t i : idx) {
            auto row = pseudo.row(i);
            const int pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
            hits += pred == true_labels[i];
        }
        return static_cast<double>(hits) / static_cast<double>(idx.size());
    };
    std::vector<std::size_t> all(pseudo.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    PseudoAccuracy pa;
    pa.all = acc_over(all);
    pa.high = acc_over(groups.high_idx);
    pa.low = acc_over(groups.low_idx);
    return pa;
}

MetricsRecord evaluate(const Matrix& test_probs, const std::vector<int>& test_true,
                       const std::vector<int>& train_true_frequencies,
                       const SelectionResult* selection, const std::vector<int>& train_noisy,
                       const std::vector<int>& train_true, int epoch, double tau,
                       bool auc_on_gamma, const std::vector<double>* gamma_label) {
    MetricsRecord rec;
    rec.epoch = epoch;
    rec.tau = tau;

    const int K = static_cast<int>(test_probs.cols);
    std::vector<std::size_t> per_class_n(K, 0), per_class_hit(K, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_probs.rows; ++i) {
        auto row = test_probs.row(i);
        const int pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        const int y = test_true[i];
        per_class_n[y]++;
        if (pred == y) {
            per_class_hit[y]++;
            hits++;
        }
    }
    rec.overall_acc = static_cast<double>(hits) / static_cast<double>(test_probs.rows);
    rec.per_class_acc.resize(K, 0.0);
    for (int k = 0; k < K; ++k)
        rec.per_class_acc[k] = per_class_n[k] ? static_cast<double>(per_class_hit[k]) / per_class_n[k] : 0.0;

    const ClassSets sets = class_sets(train_true_frequencies);
    auto set_acc = [&](const std::vector<int>& cls) -> std::optional<double> {
        std::size_t n = 0, h = 0;
        for (int k : cls) {
            n += per_class_n[k];
            h += per_class_hit[k];
        }
        if (n == 0) return std::nullopt;
        return static_cast<double>(h) / static_cast<double>(n);
    };
    rec.many_acc = set_acc(sets.many);
    rec.medium_acc = set_acc(sets.medium);
    rec.few_acc = set_acc(sets.few);

    if (selection) {
        const std::size_t n = selection->clean_mask.size();
        std::size_t n_clean = 0;
        for (bool b : selection->clean_mask) n_clean += b;
        rec.clean_fraction = n ? static_cast<double>(n_clean) / n : 0.0;

        const bool have_truth =
            !train_true.empty() &&
            std::all_of(train_true.begin(), train_true.end(), [](int y) { return y >= 0; });
        if (have_truth) {
            std::vector<bool> is_clean_truth(n);
            for (std::size_t i = 0; i < n; ++i) is_clean_truth[i] = train_noisy[i] == train_true[i];

            const std::vector<double>& score =
                auc_on_gamma && gamma_label ? *gamma_label : selection->clean_posterior;
            rec.selection_auc = roc_auc(score, is_clean_truth);

            std::vector<bool> few(K, false);
            for (int k : sets.few) few[k] = true;
            std::vector<double> score_few;
            std::vector<bool> truth_few;
            for (std::size_t i = 0; i < n; ++i) {
                if (!few[train_noisy[i]]) continue;
                score_few.push_back(score[i]);
                truth_few.push_back(is_clean_truth[i]);
            }
            rec.selection_auc_few = roc_auc(score_few, truth_few);

            std::size_t sel = 0, sel_correct = 0, truly_clean = 0;
            for (std::size_t i = 0; i < n; ++i) {
                truly_clean += is_clean_truth[i];
                if (selection->clean_mask[i]) {
                    sel++;
                    sel_correct += is_clean_truth[i];
                }
            }
            if (sel) rec.selection_precision = static_cast<double>(sel_correct) / sel;
            if (truly_clean) rec.selection_recall = static_cast<double>(sel_correct) / truly_clean;
        }
    }
    return rec;
}

}  // namespace dasc
