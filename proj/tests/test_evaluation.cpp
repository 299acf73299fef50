// Metrics against independent arithmetic, CV determinism, grid-search oracle.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wfp/evaluation.hpp"

using namespace wfp;

namespace {

// labels lists realizing a given confusion matrix
std::pair<std::vector<std::string>, std::vector<std::string>>
realize(const std::vector<std::vector<uint64_t>>& counts, const std::vector<std::string>& classes) {
    std::vector<std::string> truth, pred;
    for (size_t i = 0; i < counts.size(); ++i)
        for (size_t j = 0; j < counts[i].size(); ++j)
            for (uint64_t c = 0; c < counts[i][j]; ++c) {
                truth.push_back(classes[i]);
                pred.push_back(classes[j]);
            }
    return {truth, pred};
}

LabeledDataset blob_dataset(size_t per_class, size_t n_classes, double sep, uint64_t seed) {
    LabeledDataset ds;
    ds.feature_names = {"x", "y"};
    Rng rng(seed);
    for (size_t c = 0; c < n_classes; ++c) {
        double cx = sep * std::cos(2 * M_PI * static_cast<double>(c) / static_cast<double>(n_classes));
        double cy = sep * std::sin(2 * M_PI * static_cast<double>(c) / static_cast<double>(n_classes));
        for (size_t i = 0; i < per_class; ++i)
            ds.append_row({rng.normal(cx, 1.0), rng.normal(cy, 1.0)}, BinaryLabel::Targeted,
                          "site" + std::to_string(c));
    }
    return ds;
}

} // namespace

TEST_CASE("direct substitution: TP 3, FP 1, TN 5, FN 1") {
    auto [truth, pred] = realize({{3, 1}, {1, 5}}, {"pos", "neg"});
    auto r = compute_metrics(truth, pred, "pos");
    CHECK(r.accuracy == Catch::Approx(0.8).epsilon(1e-12));
    CHECK(r.precision == Catch::Approx(0.75).epsilon(1e-12));
    CHECK(r.recall == Catch::Approx(0.75).epsilon(1e-12));
    CHECK(r.f1 == Catch::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("all-correct predictions score 1.0 in every averaging mode") {
    std::vector<std::string> truth = {"a", "b", "c", "a", "b"};
    auto bin = compute_metrics(truth, truth, std::string("a"));
    CHECK(bin.accuracy == 1.0);
    CHECK(bin.precision == 1.0);
    CHECK(bin.recall == 1.0);
    CHECK(bin.f1 == 1.0);
    for (Averaging avg : {Averaging::Macro, Averaging::Weighted}) {
        auto r = compute_metrics(truth, truth, avg);
        CHECK(r.accuracy == 1.0);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.f1 == 1.0);
    }
}

TEST_CASE("fixed 3-class matrix: weighted recall equals accuracy, macro differs") {
    // supports 10, 5, 5
    std::vector<std::vector<uint64_t>> counts = {{8, 1, 1}, {2, 2, 1}, {0, 1, 4}};
    auto [truth, pred] = realize(counts, {"a", "b", "c"});
    auto weighted = compute_metrics(truth, pred, Averaging::Weighted);
    auto macro = compute_metrics(truth, pred, Averaging::Macro);
    double accuracy = 14.0 / 20.0;
    CHECK(weighted.accuracy == Catch::Approx(accuracy).epsilon(1e-12));
    CHECK(weighted.recall == Catch::Approx(accuracy).epsilon(1e-12));
    // hand arithmetic: recalls 0.8, 0.4, 0.8 -> macro 2/3
    CHECK(macro.recall == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(macro.recall != weighted.recall);
}

TEST_CASE("metrics match independent arithmetic on 1000 random matrices") {
    Rng rng(12345);
    for (int trial = 0; trial < 1000; ++trial) {
        size_t K = 2 + rng.below(4);
        std::vector<std::string> classes;
        for (size_t k = 0; k < K; ++k) classes.push_back("c" + std::to_string(k));
        std::vector<std::vector<uint64_t>> counts(K, std::vector<uint64_t>(K));
        uint64_t total = 0;
        for (auto& row : counts)
            for (auto& c : row) {
                c = rng.below(8); // zeros exercise the zero-division conventions
                total += c;
            }
        if (total == 0) {
            counts[0][0] = 1;
            total = 1;
        }
        auto [truth, pred] = realize(counts, classes);
        for (Averaging avg : {Averaging::Macro, Averaging::Weighted}) {
            auto r = compute_metrics(truth, pred, avg, classes);
            // independent pass over the raw counts
            double trace = 0;
            for (size_t k = 0; k < K; ++k) trace += static_cast<double>(counts[k][k]);
            double accuracy = trace / static_cast<double>(total);
            double sum_p = 0, sum_r = 0, sum_f = 0, wsum_p = 0, wsum_r = 0, wsum_f = 0;
            for (size_t k = 0; k < K; ++k) {
                double tp = static_cast<double>(counts[k][k]);
                double row = 0, col = 0;
                for (size_t j = 0; j < K; ++j) {
                    row += static_cast<double>(counts[k][j]);
                    col += static_cast<double>(counts[j][k]);
                }
                double p = col > 0 ? tp / col : 0.0;
                double rec = row > 0 ? tp / row : 0.0;
                double f = p + rec > 0 ? 2 * p * rec / (p + rec) : 0.0;
                sum_p += p;
                sum_r += rec;
                sum_f += f;
                wsum_p += row / static_cast<double>(total) * p;
                wsum_r += row / static_cast<double>(total) * rec;
                wsum_f += row / static_cast<double>(total) * f;
            }
            CHECK(std::abs(r.accuracy - accuracy) <= 1e-12);
            if (avg == Averaging::Macro) {
                CHECK(std::abs(r.precision - sum_p / static_cast<double>(K)) <= 1e-12);
                CHECK(std::abs(r.recall - sum_r / static_cast<double>(K)) <= 1e-12);
                CHECK(std::abs(r.f1 - sum_f / static_cast<double>(K)) <= 1e-12);
            } else {
                CHECK(std::abs(r.precision - wsum_p) <= 1e-12);
                CHECK(std::abs(r.recall - wsum_r) <= 1e-12);
                CHECK(std::abs(r.f1 - wsum_f) <= 1e-12);
                CHECK(std::abs(r.recall - r.accuracy) <= 1e-12); // support-weighted identity
            }
        }
    }
}

TEST_CASE("joint permutation leaves metrics unchanged") {
    auto [truth, pred] = realize({{5, 2, 1}, {1, 6, 2}, {0, 3, 7}}, {"a", "b", "c"});
    auto base = compute_metrics(truth, pred, Averaging::Macro);
    Rng rng(7);
    std::vector<size_t> perm(truth.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<std::string> t2, p2;
    for (size_t i : perm) {
        t2.push_back(truth[i]);
        p2.push_back(pred[i]);
    }
    auto shuffled = compute_metrics(t2, p2, Averaging::Macro);
    CHECK(shuffled.accuracy == base.accuracy);
    CHECK(shuffled.precision == base.precision);
    CHECK(shuffled.recall == base.recall);
    CHECK(shuffled.f1 == base.f1);
}

TEST_CASE("swapping the declared positive class uses the complementary entries") {
    auto [truth, pred] = realize({{7, 3}, {2, 8}}, {"a", "b"});
    auto ra = compute_metrics(truth, pred, std::string("a"));
    auto rb = compute_metrics(truth, pred, std::string("b"));
    CHECK(ra.accuracy == rb.accuracy);
    CHECK(rb.precision == Catch::Approx(8.0 / 11.0).epsilon(1e-12)); // TN_a/(TN_a+FN_a)
    CHECK(rb.recall == Catch::Approx(8.0 / 10.0).epsilon(1e-12));    // TN_a/(TN_a+FP_a)
}

TEST_CASE("always-majority prediction on the campaign imbalance") {
    std::vector<std::string> truth, pred;
    for (int i = 0; i < 4699; ++i) truth.push_back("targeted");
    for (int i = 0; i < 17026; ++i) truth.push_back("untargeted");
    pred.assign(truth.size(), "untargeted");
    auto r = compute_metrics(truth, pred, std::string("targeted"));
    CHECK(r.accuracy == Catch::Approx(17026.0 / 21725.0).epsilon(1e-12));
    CHECK(std::round(r.accuracy * 10000.0) / 10000.0 == 0.7837);
    CHECK(r.recall == 0.0);
    CHECK(r.precision == 0.0); // no positive predictions: 0 by convention
    CHECK(r.f1 == 0.0);
}

TEST_CASE("metric input errors") {
    std::vector<std::string> t = {"a", "b"};
    std::vector<std::string> p = {"a"};
    try {
        compute_metrics(t, p, std::string("a"));
        FAIL("expected LengthMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::LengthMismatch);
    }
    std::vector<std::string> bad = {"a", "zzz"};
    try {
        compute_metrics(t, bad, std::string("a"));
        FAIL("expected UnknownLabel");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownLabel);
    }
    // a prediction outside truth but inside the model classes is fine
    std::vector<std::string> model_classes = {"a", "b", "zzz"};
    auto r = compute_metrics(t, bad, Averaging::Macro, model_classes);
    CHECK(r.accuracy == 0.5);
}

TEST_CASE("cross-validation folds are stratified, proportional, deterministic") {
    auto ds = blob_dataset(50, 2, 3.0, 11); // 100 rows, two classes of 50
    auto fold = cv_detail::fold_assignment(ds, 5, Task::Multiclass, 9);
    std::map<size_t, std::map<std::string, size_t>> per_fold;
    for (size_t i = 0; i < ds.size(); ++i)
        per_fold[fold[i]][ds.task_label(i, Task::Multiclass)] += 1;
    REQUIRE(per_fold.size() == 5);
    for (const auto& [f, classes] : per_fold)
        for (const auto& [cls, n] : classes) CHECK(n == 10);

    auto a = cross_validate({ClassifierKind::DT, {{"max_depth", 4}}, 5}, ds, 5,
                            Task::Multiclass, 21);
    auto b = cross_validate({ClassifierKind::DT, {{"max_depth", 4}}, 5}, ds, 5,
                            Task::Multiclass, 21);
    CHECK(a.fold_scores == b.fold_scores);
    CHECK(a.mean == Catch::Approx((a.fold_scores[0] + a.fold_scores[1] + a.fold_scores[2] +
                                   a.fold_scores[3] + a.fold_scores[4]) /
                                  5.0));
}

TEST_CASE("a constant predictor scores the held-out majority fraction") {
    // constant feature: NB reduces to the class prior, predicting the
    // majority class everywhere
    LabeledDataset ds;
    ds.feature_names = {"x"};
    for (int i = 0; i < 30; ++i) ds.append_row({1.0}, BinaryLabel::Targeted, "big");
    for (int i = 0; i < 10; ++i) ds.append_row({1.0}, BinaryLabel::Targeted, "small");
    auto cv = cross_validate({ClassifierKind::NB, {}, 3}, ds, 5, Task::Multiclass, 17);
    for (double s : cv.fold_scores) CHECK(s == Catch::Approx(30.0 / 40.0));
}

TEST_CASE("cross-validation rejects classes smaller than k") {
    LabeledDataset ds;
    ds.feature_names = {"x"};
    for (int i = 0; i < 3; ++i) ds.append_row({1.0 * i}, BinaryLabel::Targeted, "rare");
    for (int i = 0; i < 20; ++i) ds.append_row({5.0 + i}, BinaryLabel::Untargeted, "");
    try {
        cross_validate({ClassifierKind::DT, {}, 1}, ds, 5, Task::Multiclass, 1);
        FAIL("expected ClassTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ClassTooSmall);
    }
}

TEST_CASE("grid enumeration is lexicographic with the last axis fastest") {
    HyperGrid grid = {{"a", {1, 2}}, {"b", {10, 20, 30}}};
    auto combos = enumerate_grid(grid);
    REQUIRE(combos.size() == 6);
    CHECK(combos[0] == std::map<std::string, double>{{"a", 1}, {"b", 10}});
    CHECK(combos[1] == std::map<std::string, double>{{"a", 1}, {"b", 20}});
    CHECK(combos[3] == std::map<std::string, double>{{"a", 2}, {"b", 10}});
}

TEST_CASE("grid search: single combination, oracle agreement, tie rule, cap") {
    auto ds = blob_dataset(20, 2, 2.0, 31);
    auto single = grid_search(ClassifierKind::KNN, {{"k", {3}}}, ds, 3, Task::Multiclass, 5);
    CHECK(single.table.size() == 1);
    CHECK(hyper(single.best_spec, "k") == 3);

    // 2x2 grid vs an independent nested-loop re-evaluation
    HyperGrid grid = {{"max_depth", {2, 4}}, {"min_samples_leaf", {1, 3}}};
    auto gs = grid_search(ClassifierKind::DT, grid, ds, 3, Task::Multiclass, 5);
    CHECK(gs.table.size() == 4);
    double best = -1.0;
    std::map<std::string, double> best_combo;
    for (double depth : {2.0, 4.0}) {
        for (double leaf : {1.0, 3.0}) {
            auto cv = cross_validate(
                {ClassifierKind::DT, {{"max_depth", depth}, {"min_samples_leaf", leaf}}, 5}, ds, 3,
                Task::Multiclass, 5);
            if (cv.mean > best) {
                best = cv.mean;
                best_combo = {{"max_depth", depth}, {"min_samples_leaf", leaf}};
            }
        }
    }
    CHECK(gs.best_spec.hyperparameters == best_combo);

    // constructed tie: duplicated value lists give equal means; the earlier
    // combination must win
    auto tie = grid_search(ClassifierKind::DT, {{"max_depth", {6, 6}}}, ds, 3, Task::Multiclass, 5);
    REQUIRE(tie.table.size() == 2);
    CHECK(tie.table[0].mean == tie.table[1].mean);
    CHECK(hyper(tie.best_spec, "max_depth") == 6);

    try {
        grid_search(ClassifierKind::KNN, {{"k", {1, 2, 3}}}, ds, 3, Task::Multiclass, 5, 2);
        FAIL("expected GridTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::GridTooLarge);
    }
}

TEST_CASE("evaluate_suite reports all models in roster order with the table layout") {
    auto ds = blob_dataset(30, 3, 6.0, 41);
    auto split = split_dataset(ds, {}, StratifyOn::Site, 7);
    SuiteOptions opt;
    opt.task = Task::Multiclass;
    opt.seed = 7;
    opt.cv_folds = 3;
    opt.roster = {ClassifierKind::DT, ClassifierKind::NB, ClassifierKind::KNN};
    opt.grids[ClassifierKind::DT] = {{"max_depth", {4, 8}}};
    opt.grids[ClassifierKind::KNN] = {{"k", {3, 5}}};
    auto rows = evaluate_suite(split, opt);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "DT");
    CHECK(rows[1].model == "NB");
    CHECK(rows[2].model == "KNN");
    for (const auto& r : rows) CHECK(r.metrics.accuracy > 0.8); // well-separated blobs
    auto table = format_report_table(rows);
    CHECK(table.substr(0, table.find('\n')) ==
          "Model   Accuracy   Precision   Recall   F1 Score");
    auto csv_text = report_to_csv(rows);
    CHECK(csv_text.substr(0, csv_text.find("\r\n")) == "Model,Accuracy,Precision,Recall,F1");
    // weighted recall identity shows up in the report too
    for (const auto& r : rows)
        CHECK(r.metrics.recall == Catch::Approx(r.metrics.accuracy).epsilon(1e-12));
}
