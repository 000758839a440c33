#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dasc/losses.hpp"
#include "dasc/matrix.hpp"
#include "dasc/select.hpp"

namespace dasc {

struct MetricsRecord {
    int epoch = 0;
    double overall_acc = 0.0;
    std::optional<double> many_acc, medium_acc, few_acc;
    std::optional<double> selection_auc, selection_auc_few;
    std::optional<double> selection_precision, selection_recall;
    std::optional<double> pseudo_acc_all, pseudo_acc_high, pseudo_acc_low;
    double clean_fraction = 0.0;
    double tau = 0.0;
    std::vector<double> per_class_acc;

    std::string to_json() const;
    static MetricsRecord from_json(const std::string& line);
};

struct ClassSets {
    std::vector<int> many, medium, few;  // class ids
};

// Contiguous thirds by training frequency: the largest ceil(K/3) classes are
// Many, the smallest floor(K/3) are Few. Ties break by class index. K < 3
// puts everything in Many.
ClassSets class_sets(const std::vector<int>& class_frequencies);

// Mann-Whitney rank AUC; ties contribute 1/2. Requires both label values.
std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<bool>& binary_labels);

struct PseudoAccuracy {
    std::optional<double> all, high, low;
};

PseudoAccuracy pseudo_accuracy(const Matrix& pseudo, const std::vector<int>& true_labels,
                               const ConfidenceGroups& groups);

// Aggregates everything from test predictions and the epoch's selection.
// `selection` may be null before the selection phase starts.
MetricsRecord evaluate(const Matrix& test_probs, const std::vector<int>& test_true,
                       const std::vector<int>& train_true_frequencies,
                       const SelectionResult* selection, const std::vector<int>& train_noisy,
                       const std::vector<int>& train_true, int epoch, double tau,
                       bool auc_on_gamma = false, const std::vector<double>* gamma_label = nullptr);

}  // namespace dasc
