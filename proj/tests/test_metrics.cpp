#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphreg/metrics.hpp"

using namespace graphreg;

namespace {

ConfusionMatrix from_rows(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
    ConfusionMatrix m;
    const Index n = static_cast<Index>(rows.size());
    m.counts.setZero(n, n);
    Index r = 0;
    for (const auto& row : rows) {
        Index c = 0;
        for (std::int64_t v : row) m.counts(r, c++) = v;
        ++r;
    }
    return m;
}

// independent pairwise AUC oracle: every positive-negative pair, ties half
Scalar auc_pairwise(const Eigen::Ref<const MatrixX>& scores, const std::vector<int>& labels) {
    const Index classes = scores.cols();
    Scalar sum = 0;
    Index used = 0;
    for (Index c = 0; c < classes; ++c) {
        Scalar wins = 0;
        Index pairs = 0;
        for (Index i = 0; i < scores.rows(); ++i) {
            if (labels[static_cast<std::size_t>(i)] != c) continue;
            for (Index j = 0; j < scores.rows(); ++j) {
                if (labels[static_cast<std::size_t>(j)] == c) continue;
                ++pairs;
                if (scores(i, c) > scores(j, c)) wins += 1.0;
                else if (scores(i, c) == scores(j, c)) wins += 0.5;
            }
        }
        if (pairs == 0) continue;
        sum += wins / static_cast<Scalar>(pairs);
        ++used;
    }
    return sum / static_cast<Scalar>(used);
}

}  // namespace

TEST_CASE("confusion matrix counts per (true, predicted) cell") {
    auto m = confusion_matrix({0, 0, 1, 1, 1}, {0, 1, 1, 1, 0}, 2);
    CHECK(m.counts(0, 0) == 1);
    CHECK(m.counts(1, 0) == 1);
    CHECK(m.counts(1, 1) == 2);
    CHECK(m.counts(0, 1) == 1);
    CHECK(m.total() == 5);
    CHECK_THROWS_AS(confusion_matrix({0, 3}, {0, 0}, 2), Error);
}

TEST_CASE("perfect predictions give a diagonal matrix; single-column when collapsed") {
    auto diag = confusion_matrix({0, 1, 2}, {0, 1, 2}, 3);
    CHECK(diag.counts.diagonal().sum() == diag.total());
    auto lazy = confusion_matrix({0, 0, 0}, {0, 1, 2}, 3);
    CHECK(lazy.counts.col(0).sum() == lazy.total());
    CHECK(lazy.counts.rightCols(2).sum() == 0);
}

TEST_CASE("paper confusion matrix reproduces the reported accuracy") {
    // DenseNet121 with the similarity graph, experiment II
    auto m = from_rows({{981, 9, 1, 0}, {13, 919, 6, 0}, {2, 20, 911, 1}, {0, 0, 0, 965}});
    CHECK(m.total() == 3828);
    CHECK(m.accuracy() == doctest::Approx(0.986).epsilon(0.0006));
    CHECK(m.accuracy() == doctest::Approx(3776.0 / 3828.0).epsilon(1e-15));

    auto panel = panel_from_matrix(m);
    // ND recall derived from the matrix itself: 981/991
    CHECK(panel.per_label[0].recall == doctest::Approx(981.0 / 991.0).epsilon(1e-12));
}

TEST_CASE("per-label panel on a hand-tallied 2x2 matrix") {
    auto m = from_rows({{8, 2}, {1, 9}});
    auto panel = panel_from_matrix(m);
    CHECK(panel.per_label[0].recall == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(panel.per_label[0].fall_out == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(panel.accuracy == doctest::Approx(17.0 / 20.0).epsilon(1e-12));

    const Scalar f1_0 = 2.0 * (8.0 / 9.0) * 0.8 / ((8.0 / 9.0) + 0.8);
    const Scalar f1_1 = 2.0 * (9.0 / 11.0) * 0.9 / ((9.0 / 11.0) + 0.9);
    CHECK(macro_f1(m) == doctest::Approx((f1_0 + f1_1) / 2.0).epsilon(1e-12));
    CHECK(panel.macro_f1 == doctest::Approx(0.850).epsilon(0.001));
}

TEST_CASE("diagonal matrix: recalls 1, fallouts 0, macro F1 1; all-wrong gives 0") {
    auto diag = from_rows({{5, 0, 0}, {0, 7, 0}, {0, 0, 9}});
    auto panel = panel_from_matrix(diag);
    for (const auto& lm : panel.per_label) {
        CHECK(lm.recall == 1.0);
        CHECK(lm.fall_out == 0.0);
    }
    CHECK(macro_f1(diag) == 1.0);

    auto wrong = from_rows({{0, 5}, {5, 0}});
    CHECK(macro_f1(wrong) == 0.0);
}

TEST_CASE("panel identities hold to 1e-12 on random matrices") {
    Rng rng(31);
    std::uniform_int_distribution<std::int64_t> cell(0, 40);
    for (int rep = 0; rep < 200; ++rep) {
        ConfusionMatrix m;
        m.counts.setZero(4, 4);
        for (Index r = 0; r < 4; ++r)
            for (Index c = 0; c < 4; ++c) m.counts(r, c) = cell(rng);
        if (m.total() == 0) continue;
        MetricPanel panel;
        try {
            panel = panel_from_matrix(m);
        } catch (const Error&) {
            continue;  // a label with neither positives nor negatives
        }
        for (const auto& lm : panel.per_label) {
            CHECK(std::abs(lm.acc + lm.error_rate - 1.0) < 1e-12);
            CHECK(std::abs(lm.recall + lm.miss_rate - 1.0) < 1e-12);
            CHECK(std::abs(lm.specificity + lm.fall_out - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("AUC on the worked 4-sample example") {
    MatrixX scores(4, 2);
    scores.col(1) << 0.9, 0.8, 0.4, 0.3;
    scores.col(0) = 1.0 - scores.col(1).array();
    CHECK(roc_auc_ovr(scores, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(roc_auc_ovr(scores, {1, 0, 1, 0}) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("AUC degenerate cases: perfect order 1.0, constant scores 0.5") {
    MatrixX scores(6, 2);
    scores.col(1) << 0.99, 0.9, 0.8, 0.2, 0.1, 0.05;
    scores.col(0) = 1.0 - scores.col(1).array();
    CHECK(roc_auc_ovr(scores, {1, 1, 1, 0, 0, 0}) == doctest::Approx(1.0));

    MatrixX flat = MatrixX::Constant(6, 2, 0.5);
    CHECK(roc_auc_ovr(flat, {1, 1, 1, 0, 0, 0}) == doctest::Approx(0.5));
}

TEST_CASE("rank AUC equals the pairwise oracle on random tie-heavy instances") {
    Rng rng(47);
    std::uniform_int_distribution<int> lab(0, 2);
    std::uniform_int_distribution<int> quant(0, 9);
    for (int rep = 0; rep < 40; ++rep) {
        std::uniform_int_distribution<Index> size(10, 200);
        const Index n = size(rng);
        MatrixX scores(n, 3);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = lab(rng);
            for (Index c = 0; c < 3; ++c) scores(i, c) = quant(rng) / 10.0;  // many ties
        }
        bool all_present = true;
        for (int c = 0; c < 3; ++c)
            all_present &= std::count(labels.begin(), labels.end(), c) > 0;
        if (!all_present) continue;
        CHECK(roc_auc_ovr(scores, labels) == doctest::Approx(auc_pairwise(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("AUC is invariant under strictly monotone score transforms") {
    Rng rng(53);
    std::uniform_real_distribution<Scalar> u(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, 1);
    MatrixX scores(30, 2);
    std::vector<int> labels;
    for (Index i = 0; i < 30; ++i) {
        scores(i, 0) = u(rng);
        scores(i, 1) = u(rng);
        labels.push_back(lab(rng));
    }
    const Scalar base = roc_auc_ovr(scores, labels);
    MatrixX transformed = scores.array().exp().matrix();
    CHECK(roc_auc_ovr(transformed, labels) == doctest::Approx(base).epsilon(1e-12));
    transformed = (scores.array() * 7.0 + 3.0).matrix();
    CHECK(roc_auc_ovr(transformed, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("panel exports carry the Table-style layout") {
    auto m = from_rows({{8, 2}, {1, 9}});
    auto panel = panel_from_matrix(m);
    std::string csv = panel_to_csv(panel, {"A", "B"});
    CHECK(csv.find("metric,A,B") == 0);
    CHECK(csv.find("Recall,0.8,0.9") != std::string::npos);
    std::string json = panel_to_json(panel, {"A", "B"});
    CHECK(json.find("\"Recall\"") != std::string::npos);
    std::string cm = confusion_to_csv(m, {"A", "B"});
    CHECK(cm.find("A,8,2") != std::string::npos);
}
