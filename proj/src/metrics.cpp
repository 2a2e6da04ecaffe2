#include "graphreg/metrics.hpp"

#include "graphreg/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <iostream>
#include <numeric>

namespace graphreg {

Scalar ConfusionMatrix::accuracy() const {
    const std::int64_t t = total();
    if (t == 0) throw Error("empty confusion matrix has no accuracy");
    return static_cast<Scalar>(counts.diagonal().sum()) / static_cast<Scalar>(t);
}

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                 Index num_classes) {
    if (preds.size() != labels.size())
        throw Error(cat("prediction count ", preds.size(), " != label count ", labels.size()));
    ConfusionMatrix m;
    m.counts.setZero(num_classes, num_classes);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw Error(cat("label ", labels[i], " at index ", i, " out of range"));
        if (preds[i] < 0 || preds[i] >= num_classes)
            throw Error(cat("prediction ", preds[i], " at index ", i, " out of range"));
        ++m.counts(labels[i], preds[i]);
    }
    return m;
}

MetricPanel panel_from_matrix(const ConfusionMatrix& m) {
    const std::int64_t total = m.total();
    if (total == 0) throw Error("cannot build a metric panel from an empty confusion matrix");
    MetricPanel panel;
    panel.accuracy = m.accuracy();
    panel.macro_f1 = macro_f1(m);
    for (Index l = 0; l < m.num_classes(); ++l) {
        const std::int64_t tp = m.counts(l, l);
        const std::int64_t fn = m.counts.row(l).sum() - tp;
        const std::int64_t fp = m.counts.col(l).sum() - tp;
        const std::int64_t tn = total - tp - fn - fp;
        if (tp + fn == 0 && fp + tn == 0)
            throw Error(cat("label ", l, " has zero positives and zero negatives"));
        LabelMetrics lm;
        lm.acc = static_cast<Scalar>(tp + tn) / static_cast<Scalar>(total);
        lm.error_rate = 1.0 - lm.acc;
        auto rate = [](std::int64_t num, std::int64_t den) {
            return den == 0 ? 0.0 : static_cast<Scalar>(num) / static_cast<Scalar>(den);
        };
        lm.recall = rate(tp, tp + fn);
        lm.miss_rate = tp + fn == 0 ? 1.0 : 1.0 - lm.recall;
        lm.specificity = rate(tn, tn + fp);
        lm.fall_out = tn + fp == 0 ? 1.0 : 1.0 - lm.specificity;
        panel.per_label.push_back(lm);
    }
    return panel;
}

Scalar roc_auc_ovr(const Eigen::Ref<const MatrixX>& scores, const std::vector<int>& labels) {
    if (static_cast<std::size_t>(scores.rows()) != labels.size())
        throw Error(cat("score rows ", scores.rows(), " != label count ", labels.size()));
    const Index n = scores.rows(), classes = scores.cols();
    Scalar sum = 0;
    Index used = 0;
    for (Index c = 0; c < classes; ++c) {
        Index n_pos = 0;
        for (int y : labels) n_pos += (y == c);
        const Index n_neg = n - n_pos;
        if (n_pos == 0 || n_neg == 0) {
            std::cerr << "[graphreg] roc_auc_ovr: class " << c
                      << " absent from labels, excluded from the macro average\n";
            continue;
        }
        // average ranks with ties sharing the mean rank
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](Index a, Index b) { return scores(a, c) < scores(b, c); });
        std::vector<Scalar> rank(static_cast<std::size_t>(n));
        Index i = 0;
        while (i < n) {
            Index j = i;
            while (j + 1 < n && scores(order[j + 1], c) == scores(order[i], c)) ++j;
            const Scalar avg = (static_cast<Scalar>(i) + static_cast<Scalar>(j)) / 2.0 + 1.0;
            for (Index k = i; k <= j; ++k) rank[static_cast<std::size_t>(order[k])] = avg;
            i = j + 1;
        }
        Scalar rank_sum = 0;
        for (Index r = 0; r < n; ++r)
            if (labels[static_cast<std::size_t>(r)] == c) rank_sum += rank[static_cast<std::size_t>(r)];
        const Scalar auc = (rank_sum - static_cast<Scalar>(n_pos) * (static_cast<Scalar>(n_pos) + 1.0) / 2.0) /
                           (static_cast<Scalar>(n_pos) * static_cast<Scalar>(n_neg));
        sum += auc;
        ++used;
    }
    if (used == 0) throw Error("roc_auc_ovr: no class present in the labels");
    return sum / static_cast<Scalar>(used);
}

Scalar macro_f1(const ConfusionMatrix& m) {
    Scalar sum = 0;
    for (Index l = 0; l < m.num_classes(); ++l) {
        const std::int64_t tp = m.counts(l, l);
        const std::int64_t fn = m.counts.row(l).sum() - tp;
        const std::int64_t fp = m.counts.col(l).sum() - tp;
        if (tp + fn == 0 && tp + fp == 0) {
            std::cerr << "[graphreg] macro_f1: label " << l
                      << " has no actual or predicted samples, contributes F1=0\n";
            continue;  // contributes zero to the sum
        }
        const Scalar precision = tp + fp == 0 ? 0.0 : static_cast<Scalar>(tp) / static_cast<Scalar>(tp + fp);
        const Scalar recall = tp + fn == 0 ? 0.0 : static_cast<Scalar>(tp) / static_cast<Scalar>(tp + fn);
        if (precision + recall > 0) sum += 2.0 * precision * recall / (precision + recall);
    }
    return sum / static_cast<Scalar>(m.num_classes());
}

static const char* kMetricNames[] = {"ACC", "ER", "Recall", "Specificity", "FallOut", "MissRate"};

static Scalar metric_value(const LabelMetrics& lm, int metric) {
    switch (metric) {
        case 0: return lm.acc;
        case 1: return lm.error_rate;
        case 2: return lm.recall;
        case 3: return lm.specificity;
        case 4: return lm.fall_out;
        default: return lm.miss_rate;
    }
}

std::string panel_to_csv(const MetricPanel& panel, const std::vector<std::string>& class_names) {
    std::string out = "metric";
    for (const auto& name : class_names) out += "," + name;
    out += "\n";
    for (int metric = 0; metric < 6; ++metric) {
        out += kMetricNames[metric];
        for (const LabelMetrics& lm : panel.per_label) out += "," + fmt_double(metric_value(lm, metric));
        out += "\n";
    }
    out += "accuracy," + fmt_double(panel.accuracy) + "\n";
    out += "macro_auc," + fmt_double(panel.macro_auc) + "\n";
    out += "macro_f1," + fmt_double(panel.macro_f1) + "\n";
    return out;
}

std::string panel_to_json(const MetricPanel& panel, const std::vector<std::string>& class_names) {
    nlohmann::json j;
    for (int metric = 0; metric < 6; ++metric) {
        nlohmann::json row;
        for (std::size_t l = 0; l < panel.per_label.size(); ++l)
            row[class_names.at(l)] = metric_value(panel.per_label[l], metric);
        j["per_label"][kMetricNames[metric]] = row;
    }
    j["accuracy"] = panel.accuracy;
    if (std::isfinite(panel.macro_auc)) j["macro_auc"] = panel.macro_auc;
    j["macro_f1"] = panel.macro_f1;
    return j.dump(2);
}

std::string confusion_to_csv(const ConfusionMatrix& m, const std::vector<std::string>& class_names) {
    std::string out = "true\\pred";
    for (const auto& name : class_names) out += "," + name;
    out += "\n";
    for (Index r = 0; r < m.num_classes(); ++r) {
        out += class_names.at(static_cast<std::size_t>(r));
        for (Index c = 0; c < m.num_classes(); ++c) out += "," + std::to_string(m.counts(r, c));
        out += "\n";
    }
    return out;
}

}  // namespace graphreg
