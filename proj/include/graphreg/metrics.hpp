#pragma once

// Multiclass evaluation: confusion matrix (rows = true class, columns =
// predicted), per-label one-vs-rest panel, macro one-vs-rest ROC AUC with
// tie handling, and macro F1.

#include "graphreg/common.hpp"

namespace graphreg {

struct ConfusionMatrix {
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

    Index num_classes() const { return counts.rows(); }
    std::int64_t total() const { return counts.sum(); }
    Scalar accuracy() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 Index num_classes);

struct LabelMetrics {
    Scalar acc = 0;          // (TP+TN)/total
    Scalar error_rate = 0;   // 1 - acc
    Scalar recall = 0;       // TP rate
    Scalar specificity = 0;  // TN rate
    Scalar fall_out = 0;     // FP rate
    Scalar miss_rate = 0;    // FN rate
};

struct MetricPanel {
    std::vector<LabelMetrics> per_label;
    Scalar accuracy = 0;
    Scalar macro_auc = std::numeric_limits<Scalar>::quiet_NaN();  // needs scores
    Scalar macro_f1 = 0;
};

// Per-label binary rates from the matrix plus global accuracy and macro F1.
MetricPanel panel_from_matrix(const ConfusionMatrix& m);

// Macro one-vs-rest AUC via the rank (Mann-Whitney) formulation; tied scores
// count one half. Classes absent from the labels are excluded with a warning.
Scalar roc_auc_ovr(const Eigen::Ref<const MatrixX>& scores, const std::vector<int>& labels);

Scalar macro_f1(const ConfusionMatrix& m);

// Table-style exports; layout mirrors the per-label panel with one metric per
// row block and one column per label.
std::string panel_to_csv(const MetricPanel& panel, const std::vector<std::string>& class_names);
std::string panel_to_json(const MetricPanel& panel, const std::vector<std::string>& class_names);
std::string confusion_to_csv(const ConfusionMatrix& m, const std::vector<std::string>& class_names);

}  // namespace graphreg
