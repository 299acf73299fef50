// The seven classifiers: contracts, oracles, determinism, serialization.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wfp/learners/model.hpp"

using namespace wfp;

namespace {

LabeledDataset blobs(size_t per_class, std::vector<std::vector<double>> centers, double sigma,
                     uint64_t seed, size_t arity = 2) {
    LabeledDataset ds;
    for (size_t j = 0; j < arity; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    Rng rng(seed);
    for (size_t c = 0; c < centers.size(); ++c) {
        for (size_t i = 0; i < per_class; ++i) {
            std::vector<double> row(arity);
            for (size_t j = 0; j < arity; ++j) row[j] = rng.normal(centers[c][j], sigma);
            ds.append_row(std::move(row), BinaryLabel::Targeted, "site" + std::to_string(c));
        }
    }
    return ds;
}

double train_accuracy(const TrainedModel& m, const LabeledDataset& ds, Task task) {
    auto pred = m.predict(ds.rows);
    size_t hits = 0;
    for (size_t i = 0; i < ds.size(); ++i)
        if (pred[i] == ds.task_label(i, task)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

LabeledDataset four_point_line() {
    LabeledDataset ds;
    ds.feature_names = {"x"};
    ds.append_row({1.0}, BinaryLabel::Targeted, "A");
    ds.append_row({2.0}, BinaryLabel::Targeted, "A");
    ds.append_row({3.0}, BinaryLabel::Targeted, "B");
    ds.append_row({4.0}, BinaryLabel::Targeted, "B");
    return ds;
}

} // namespace

TEST_CASE("DT: perfectly separable line splits at the midpoint") {
    auto ds = four_point_line();
    auto m = fit({ClassifierKind::DT, {}, 1}, ds, Task::Multiclass, ScalerKind::None);
    const auto& dt = std::get<DtState>(m.state);
    REQUIRE(dt.tree.nodes.size() == 3);
    CHECK(dt.tree.nodes[0].feature == 0);
    CHECK(dt.tree.nodes[0].threshold == 2.5);
    CHECK(train_accuracy(m, ds, Task::Multiclass) == 1.0);
    CHECK(m.predict({{1.0}})[0] == "A");
    CHECK(m.predict({{4.0}})[0] == "B");
}

TEST_CASE("fit rejects single-class data and bad hyperparameters") {
    LabeledDataset ds;
    ds.feature_names = {"x"};
    ds.append_row({1.0}, BinaryLabel::Targeted, "A");
    ds.append_row({2.0}, BinaryLabel::Targeted, "A");
    try {
        fit({ClassifierKind::DT, {}, 1}, ds, Task::Multiclass);
        FAIL("expected DegenerateInput");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateInput);
    }
    auto good = four_point_line();
    try {
        fit({ClassifierKind::DT, {{"max_dep", 3}}, 1}, good, Task::Multiclass);
        FAIL("expected InvalidHyperparameter");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidHyperparameter);
    }
    try {
        fit({ClassifierKind::ADAB, {{"max_depth", 3}}, 1}, good, Task::Multiclass);
        FAIL("expected InvalidHyperparameter");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidHyperparameter);
    }
}

TEST_CASE("DT training accuracy is 1.0 on consistent data with no constraints") {
    auto ds = blobs(30, {{0, 0}, {1.5, 1.5}, {-2, 3}}, 1.2, 5); // overlapping but distinct rows
    auto m = fit({ClassifierKind::DT, {}, 1}, ds, Task::Multiclass);
    CHECK(train_accuracy(m, ds, Task::Multiclass) == 1.0);
}

TEST_CASE("RF with one tree, no bootstrap, all features reproduces DT") {
    auto ds = blobs(40, {{0, 0}, {3, 3}}, 1.0, 9);
    auto dt = fit({ClassifierKind::DT, {}, 3}, ds, Task::Multiclass);
    auto rf = fit({ClassifierKind::RF,
                   {{"n_estimators", 1}, {"bootstrap", 0}, {"max_features", 2}},
                   3},
                  ds, Task::Multiclass);
    CHECK(rf.predict(ds.rows) == dt.predict(ds.rows));
    Rng rng(31);
    Matrix probe;
    for (int i = 0; i < 200; ++i) probe.push_back({rng.normal(1.5, 3), rng.normal(1.5, 3)});
    CHECK(rf.predict(probe) == dt.predict(probe));
}

TEST_CASE("RF probability is the vote fraction") {
    auto ds = blobs(25, {{0, 0}, {4, 4}}, 1.0, 21);
    auto rf = fit({ClassifierKind::RF, {{"n_estimators", 10}}, 7}, ds, Task::Multiclass);
    auto proba = rf.predict_proba({{2.0, 2.0}});
    double v0 = proba[0][0] * 10.0;
    CHECK(std::abs(v0 - std::round(v0)) < 1e-9); // vote counts over 10 trees
    CHECK(proba[0][0] + proba[0][1] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("GBM per-sample gradients match central finite differences") {
    const double h = 1e-4;
    auto rel_err = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
    };
    // binary logistic loss, at the scores of partially fitted models
    auto ds = blobs(40, {{0, 0}, {2, 2}}, 1.5, 17);
    for (size_t stages : {1u, 5u, 10u}) {
        auto m = fit({ClassifierKind::GBM, {{"n_estimators", static_cast<double>(stages)}}, 3},
                     ds, Task::Multiclass);
        auto scores = m.decision_scores(ds.rows);
        for (size_t i = 0; i < ds.size(); i += 7) {
            double f = scores[i][1];
            double y = m.classes[1] == ds.task_label(i, Task::Multiclass) ? 1.0 : 0.0;
            double analytic = gbm_loss::logistic_grad(f, y);
            double numeric =
                (gbm_loss::logistic_loss(f + h, y) - gbm_loss::logistic_loss(f - h, y)) / (2 * h);
            CHECK(rel_err(analytic, numeric) < 1e-5);
        }
    }
    // multiclass softmax loss
    auto ds3 = blobs(30, {{0, 0}, {2, 2}, {-2, 2}}, 1.2, 23);
    auto m3 = fit({ClassifierKind::GBM, {{"n_estimators", 5}}, 3}, ds3, Task::Multiclass);
    auto scores3 = m3.decision_scores(ds3.rows);
    for (size_t i = 0; i < ds3.size(); i += 5) {
        size_t yk = 0;
        for (size_t k = 0; k < m3.classes.size(); ++k)
            if (m3.classes[k] == ds3.task_label(i, Task::Multiclass)) yk = k;
        auto analytic = gbm_loss::softmax_grad(scores3[i], yk);
        for (size_t k = 0; k < analytic.size(); ++k) {
            auto up = scores3[i];
            auto dn = scores3[i];
            up[k] += h;
            dn[k] -= h;
            double numeric =
                (gbm_loss::softmax_loss(up, yk) - gbm_loss::softmax_loss(dn, yk)) / (2 * h);
            CHECK(rel_err(analytic[k], numeric) < 1e-5);
        }
    }
}

TEST_CASE("GBM probability is the logistic of the score, monotone") {
    auto ds = blobs(40, {{0, 0}, {3, 3}}, 1.0, 29);
    auto m = fit({ClassifierKind::GBM, {}, 3}, ds, Task::Multiclass);
    auto scores = m.decision_scores(ds.rows);
    auto proba = m.predict_proba(ds.rows);
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(proba[i][1] == Catch::Approx(gbm_loss::sigmoid(scores[i][1])).epsilon(1e-12));
    }
}

TEST_CASE("AdaBoost stage weights are positive and boosting fits the blobs") {
    auto ds = blobs(40, {{0, 0}, {3, 0}, {0, 3}}, 0.8, 31);
    auto m = fit({ClassifierKind::ADAB, {{"n_estimators", 60}}, 3}, ds, Task::Multiclass);
    const auto& state = std::get<AdaState>(m.state);
    REQUIRE(!state.alphas.empty());
    for (double a : state.alphas) CHECK(a > 0.0);
    CHECK(train_accuracy(m, ds, Task::Multiclass) > 0.9);
}

TEST_CASE("SVM separable toy data: objective non-increasing across epochs, accuracy 1.0") {
    auto ds = blobs(30, {{0, 0}, {6, 6}}, 0.6, 37);
    double lambda = 1e-2;
    double prev = std::numeric_limits<double>::infinity();
    for (size_t epochs : {1u, 2u, 4u, 8u, 16u, 32u}) {
        auto m = fit({ClassifierKind::SVM,
                      {{"lambda", lambda}, {"epochs", static_cast<double>(epochs)}},
                      11},
                     ds, Task::Multiclass);
        const auto& s = std::get<SvmState>(m.state);
        // one-vs-rest objective for class 0
        double obj = 0.0;
        for (size_t j = 0; j < s.weights[0].size(); ++j)
            obj += 0.5 * lambda * s.weights[0][j] * s.weights[0][j];
        double hinge = 0.0;
        Matrix X;
        for (const auto& r : ds.rows) X.push_back(m.scaler.apply(r));
        for (size_t i = 0; i < X.size(); ++i) {
            double margin = s.biases[0];
            for (size_t j = 0; j < X[i].size(); ++j) margin += s.weights[0][j] * X[i][j];
            double y = ds.task_label(i, Task::Multiclass) == m.classes[0] ? 1.0 : -1.0;
            hinge += std::max(0.0, 1.0 - y * margin);
        }
        obj += hinge / static_cast<double>(X.size());
        CHECK(obj <= prev + 1e-9);
        prev = obj;
        if (epochs == 32) CHECK(train_accuracy(m, ds, Task::Multiclass) == 1.0);
    }
}

TEST_CASE("NB posterior equals a brute-force Bayes computation") {
    auto ds = blobs(20, {{0, 0}, {2, 1}, {4, -1}}, 1.0, 41);
    auto m = fit({ClassifierKind::NB, {}, 1}, ds, Task::Multiclass, ScalerKind::None);
    const auto& nb = std::get<NbState>(m.state);
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x = {rng.normal(2, 2), rng.normal(0, 2)};
        // densities multiplied out directly
        std::vector<double> joint(m.classes.size());
        double total = 0.0;
        for (size_t k = 0; k < joint.size(); ++k) {
            double prior = std::exp(nb.log_priors[k]);
            double dens = 1.0;
            for (size_t j = 0; j < 2; ++j) {
                double v = nb.vars[k][j];
                double d = x[j] - nb.means[k][j];
                dens *= std::exp(-d * d / (2 * v)) / std::sqrt(2 * M_PI * v);
            }
            joint[k] = prior * dens;
            total += joint[k];
        }
        auto proba = m.predict_proba({x});
        for (size_t k = 0; k < joint.size(); ++k)
            CHECK(proba[0][k] == Catch::Approx(joint[k] / total).margin(1e-9));
    }
}

TEST_CASE("NB with two symmetric classes gives (0.5, 0.5) at the midpoint") {
    LabeledDataset ds;
    ds.feature_names = {"x"};
    for (double v : {-3.0, -2.0, -1.0}) ds.append_row({v}, BinaryLabel::Targeted, "L");
    for (double v : {1.0, 2.0, 3.0}) ds.append_row({v}, BinaryLabel::Targeted, "R");
    auto m = fit({ClassifierKind::NB, {}, 1}, ds, Task::Multiclass, ScalerKind::None);
    auto proba = m.predict_proba({{0.0}});
    CHECK(proba[0][0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(proba[0][1] == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("KNN k=1 reproduces training labels exactly") {
    auto ds = blobs(25, {{0, 0}, {1, 1}}, 1.0, 47);
    auto m = fit({ClassifierKind::KNN, {{"k", 1}}, 1}, ds, Task::Multiclass);
    auto pred = m.predict(ds.rows);
    for (size_t i = 0; i < ds.size(); ++i) CHECK(pred[i] == ds.task_label(i, Task::Multiclass));
}

TEST_CASE("KNN k=3 matches the all-pairs brute-force oracle") {
    auto ds = blobs(15, {{0, 0}, {2, 2}}, 1.5, 53);
    auto m = fit({ClassifierKind::KNN, {{"k", 3}}, 1}, ds, Task::Multiclass);
    Matrix scaled;
    for (const auto& r : ds.rows) scaled.push_back(m.scaler.apply(r));
    Rng rng(59);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> q = {rng.normal(1, 2), rng.normal(1, 2)};
        auto got = m.predict({q})[0];
        // oracle: exhaustive distances, (distance, index) ordering, majority
        auto qs = m.scaler.apply(q);
        std::vector<std::pair<double, size_t>> all;
        for (size_t i = 0; i < scaled.size(); ++i) {
            double s = 0;
            for (size_t j = 0; j < qs.size(); ++j)
                s += (scaled[i][j] - qs[j]) * (scaled[i][j] - qs[j]);
            all.emplace_back(s, i);
        }
        std::sort(all.begin(), all.end());
        std::map<std::string, int> votes;
        for (int i = 0; i < 3; ++i) votes[ds.task_label(all[static_cast<size_t>(i)].second, Task::Multiclass)] += 1;
        std::string want;
        int best = -1;
        for (const auto& cls : m.classes)
            if (votes[cls] > best) { best = votes[cls]; want = cls; }
        CHECK(got == want);
    }
}

TEST_CASE("label permutation equivariance") {
    // well-separated blobs: no prediction ties, which are the one place the
    // outcome may follow the (renamed) class ordering instead
    auto ds = blobs(20, {{0, 0}, {5, 5}, {0, 7}}, 0.5, 61);
    LabeledDataset renamed = ds;
    std::map<std::string, std::string> rename = {
        {"site0", "zebra"}, {"site1", "apple"}, {"site2", "mango"}};
    for (auto& s : renamed.site_labels) s = rename[s];
    for (ClassifierKind kind : {ClassifierKind::DT, ClassifierKind::RF, ClassifierKind::GBM,
                                ClassifierKind::NB, ClassifierKind::KNN}) {
        auto m1 = fit({kind, {}, 5}, ds, Task::Multiclass);
        auto m2 = fit({kind, {}, 5}, renamed, Task::Multiclass);
        auto p1 = m1.predict(ds.rows);
        auto p2 = m2.predict(ds.rows);
        for (size_t i = 0; i < p1.size(); ++i) CHECK(p2[i] == rename[p1[i]]);
    }
}

TEST_CASE("determinism: identical spec and data give byte-identical saved models") {
    auto ds = blobs(20, {{0, 0}, {2, 2}, {4, 0}}, 1.0, 67);
    for (ClassifierKind kind : classifier_roster()) {
        auto m1 = fit({kind, {}, 99}, ds, Task::Multiclass);
        auto m2 = fit({kind, {}, 99}, ds, Task::Multiclass);
        CHECK(save_model(m1) == save_model(m2));
    }
}

TEST_CASE("save/load round-trips predictions for all seven kinds") {
    auto ds = blobs(17, {{0, 0}, {2, 2}, {4, 0}}, 1.0, 71);
    Rng rng(73);
    Matrix probe;
    for (int i = 0; i < 50; ++i) probe.push_back({rng.normal(2, 2), rng.normal(1, 2)});
    for (ClassifierKind kind : classifier_roster()) {
        auto m = fit({kind, {}, 13}, ds, Task::Multiclass);
        auto text = save_model(m);
        auto back = load_model(text);
        CHECK(back.predict(probe) == m.predict(probe));
        CHECK(back.classes == m.classes);
    }
}

TEST_CASE("corrupt and future-version model documents are rejected") {
    auto ds = four_point_line();
    auto m = fit({ClassifierKind::DT, {}, 1}, ds, Task::Multiclass);
    auto text = save_model(m);
    try {
        load_model(text.substr(0, text.size() / 2));
        FAIL("expected CorruptDocument");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CorruptDocument);
    }
    auto bumped = text;
    bumped.replace(bumped.find("\"schema_version\": 1"), 19, "\"schema_version\": 9");
    try {
        load_model(bumped);
        FAIL("expected VersionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::VersionMismatch);
    }
    try {
        load_model("{\"schema_version\": 1}");
        FAIL("expected CorruptDocument");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CorruptDocument);
    }
}

TEST_CASE("predict rejects arity mismatches; SVM rejects predict_proba") {
    auto ds = four_point_line();
    auto m = fit({ClassifierKind::DT, {}, 1}, ds, Task::Multiclass);
    try {
        m.predict({{1.0, 2.0}});
        FAIL("expected ArityMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ArityMismatch);
    }
    auto blob = blobs(10, {{0, 0}, {4, 4}}, 0.5, 79);
    auto svm = fit({ClassifierKind::SVM, {}, 1}, blob, Task::Multiclass);
    try {
        svm.predict_proba(blob.rows);
        FAIL("expected Unsupported");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Unsupported);
    }
}

TEST_CASE("predict_proba rows are a probability simplex that agrees with predict") {
    auto ds = blobs(20, {{0, 0}, {2, 2}, {0, 4}}, 1.1, 83);
    Rng rng(89);
    Matrix probe;
    for (int i = 0; i < 40; ++i) probe.push_back({rng.normal(1, 2), rng.normal(2, 2)});
    for (ClassifierKind kind : {ClassifierKind::DT, ClassifierKind::RF, ClassifierKind::GBM,
                                ClassifierKind::ADAB, ClassifierKind::NB, ClassifierKind::KNN}) {
        auto m = fit({kind, {}, 7}, ds, Task::Multiclass);
        auto proba = m.predict_proba(probe);
        auto labels = m.predict(probe);
        for (size_t i = 0; i < probe.size(); ++i) {
            double total = 0.0;
            for (double p : proba[i]) {
                CHECK(p >= 0.0);
                total += p;
            }
            CHECK(total == Catch::Approx(1.0).margin(1e-9));
            size_t arg = 0;
            for (size_t k = 1; k < proba[i].size(); ++k)
                if (proba[i][k] > proba[i][arg]) arg = k;
            CHECK(labels[i] == m.classes[arg]);
        }
    }
}
