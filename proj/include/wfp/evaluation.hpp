// evaluation.hpp - confusion matrices, accuracy/precision/recall/F1,
// stratified cross-validation, grid search, and the model comparison suite
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wfp/csv.hpp"
#include "wfp/dataset.hpp"
#include "wfp/errors.hpp"
#include "wfp/learners/model.hpp"

namespace wfp {

struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<uint64_t>> counts; // [true][predicted]
    uint64_t total = 0;

    struct Tally {
        uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    };

    Tally tally(size_t k) const {
        Tally t;
        t.tp = counts[k][k];
        for (size_t j = 0; j < classes.size(); ++j) {
            if (j == k) continue;
            t.fn += counts[k][j];
            t.fp += counts[j][k];
        }
        t.tn = total - t.tp - t.fp - t.fn;
        return t;
    }

    uint64_t trace() const {
        uint64_t s = 0;
        for (size_t k = 0; k < classes.size(); ++k) s += counts[k][k];
        return s;
    }

    uint64_t support(size_t k) const {
        uint64_t s = 0;
        for (uint64_t c : counts[k]) s += c;
        return s;
    }

    static ConfusionMatrix build(std::span<const std::string> truth,
                                 std::span<const std::string> predicted,
                                 std::span<const std::string> extra_classes = {}) {
        if (truth.size() != predicted.size())
            raise(Errc::LengthMismatch, "truth has " + std::to_string(truth.size()) +
                                            " labels, predictions " +
                                            std::to_string(predicted.size()));
        if (truth.empty()) raise(Errc::LengthMismatch, "no rows to evaluate");
        std::set<std::string> known(truth.begin(), truth.end());
        known.insert(extra_classes.begin(), extra_classes.end());
        for (const auto& p : predicted)
            if (!known.count(p))
                raise(Errc::UnknownLabel, "prediction '" + p + "' outside truth and model classes");
        ConfusionMatrix m;
        m.classes.assign(known.begin(), known.end());
        m.counts.assign(m.classes.size(), std::vector<uint64_t>(m.classes.size(), 0));
        std::map<std::string, size_t> index;
        for (size_t k = 0; k < m.classes.size(); ++k) index[m.classes[k]] = k;
        for (size_t i = 0; i < truth.size(); ++i)
            m.counts[index[truth[i]]][index[predicted[i]]] += 1;
        m.total = truth.size();
        return m;
    }
};

enum class Averaging : uint8_t { BinaryPositive, Macro, Weighted };

inline const char* averaging_name(Averaging a) {
    switch (a) {
    case Averaging::BinaryPositive: return "binary";
    case Averaging::Macro:          return "macro";
    case Averaging::Weighted:       return "weighted";
    }
    return "?";
}

struct PerClassMetrics {
    std::string label;
    uint64_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Averaging averaging = Averaging::BinaryPositive;
    std::vector<PerClassMetrics> per_class;
    ConfusionMatrix confusion;
};

namespace metrics_detail {

// zero denominators are defined as 0 throughout
inline double ratio(uint64_t num, uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline PerClassMetrics one_vs_rest(const ConfusionMatrix& m, size_t k) {
    auto t = m.tally(k);
    PerClassMetrics pc;
    pc.label = m.classes[k];
    pc.support = m.support(k);
    pc.precision = ratio(t.tp, t.tp + t.fp);
    pc.recall = ratio(t.tp, t.tp + t.fn);
    pc.f1 = pc.precision + pc.recall > 0.0
                ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                : 0.0;
    return pc;
}

inline MetricsReport from_confusion(ConfusionMatrix m, Averaging averaging,
                                    const std::string& positive_class) {
    MetricsReport r;
    r.averaging = averaging;
    r.accuracy = ratio(m.trace(), m.total);
    for (size_t k = 0; k < m.classes.size(); ++k) r.per_class.push_back(one_vs_rest(m, k));
    if (averaging == Averaging::BinaryPositive) {
        const PerClassMetrics* pos = nullptr;
        for (const auto& pc : r.per_class)
            if (pc.label == positive_class) pos = &pc;
        if (!pos) raise(Errc::UnknownLabel, "positive class '" + positive_class + "' not present");
        r.precision = pos->precision;
        r.recall = pos->recall;
        r.f1 = pos->f1;
    } else if (averaging == Averaging::Macro) {
        for (const auto& pc : r.per_class) {
            r.precision += pc.precision;
            r.recall += pc.recall;
            r.f1 += pc.f1;
        }
        double k = static_cast<double>(r.per_class.size());
        r.precision /= k;
        r.recall /= k;
        r.f1 /= k;
    } else {
        for (const auto& pc : r.per_class) {
            double w = static_cast<double>(pc.support) / static_cast<double>(m.total);
            r.precision += w * pc.precision;
            r.recall += w * pc.recall;
            r.f1 += w * pc.f1;
        }
    }
    r.confusion = std::move(m);
    return r;
}

} // namespace metrics_detail

// binary mode: the four counts of the declared positive class
inline MetricsReport compute_metrics(std::span<const std::string> truth,
                                     std::span<const std::string> predicted,
                                     const std::string& positive_class,
                                     std::span<const std::string> model_classes = {}) {
    std::vector<std::string> extra(model_classes.begin(), model_classes.end());
    extra.push_back(positive_class);
    auto m = ConfusionMatrix::build(truth, predicted, extra);
    return metrics_detail::from_confusion(std::move(m), Averaging::BinaryPositive, positive_class);
}

// multi-class mode: one-vs-rest per class, aggregated by the requested mean
inline MetricsReport compute_metrics(std::span<const std::string> truth,
                                     std::span<const std::string> predicted, Averaging averaging,
                                     std::span<const std::string> model_classes = {}) {
    auto m = ConfusionMatrix::build(truth, predicted, model_classes);
    return metrics_detail::from_confusion(std::move(m), averaging, "");
}

// --- cross-validation ---------------------------------------------------------

struct CvResult {
    std::vector<double> fold_scores; // held-out accuracy per fold
    double mean = 0.0;
};

namespace cv_detail {

// stratified fold ids, deterministic in (data order, k, seed)
inline std::vector<size_t> fold_assignment(const LabeledDataset& data, size_t k, Task task,
                                           uint64_t seed) {
    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < data.size(); ++i) strata[data.task_label(i, task)].push_back(i);
    std::vector<size_t> fold(data.size(), 0);
    size_t ordinal = 0;
    for (auto& [label_name, idx] : strata) {
        if (idx.size() < k)
            raise(Errc::ClassTooSmall, "class '" + label_name + "' has " +
                                           std::to_string(idx.size()) + " rows, need " +
                                           std::to_string(k));
        Rng rng = Rng::derive(seed, ordinal++);
        rng.shuffle(idx);
        for (size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = i % k;
    }
    return fold;
}

} // namespace cv_detail

// Preprocess statistics (the scaler) are refit inside fit() on each fold's
// training part; the held-out part is scored on raw rows.
inline CvResult cross_validate(const ClassifierSpec& spec, const LabeledDataset& data, size_t k,
                               Task task, uint64_t seed,
                               ScalerKind scaler_policy = ScalerKind::ZScore) {
    if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
    auto fold = cv_detail::fold_assignment(data, k, task, seed);
    CvResult result;
    for (size_t f = 0; f < k; ++f) {
        std::vector<size_t> train_idx, test_idx;
        for (size_t i = 0; i < data.size(); ++i)
            (fold[i] == f ? test_idx : train_idx).push_back(i);
        auto model = fit(spec, data.subset(train_idx), task, scaler_policy);
        size_t hits = 0;
        for (size_t i : test_idx) {
            int pred = model.predict_index(data.rows[i]);
            if (model.classes[static_cast<size_t>(pred)] == data.task_label(i, task)) ++hits;
        }
        result.fold_scores.push_back(static_cast<double>(hits) /
                                     static_cast<double>(test_idx.size()));
    }
    for (double s : result.fold_scores) result.mean += s;
    result.mean /= static_cast<double>(k);
    return result;
}

// --- grid search ----------------------------------------------------------------

struct GridPoint {
    std::map<std::string, double> combo;
    std::vector<double> fold_scores;
    double mean = 0.0;
};

struct GridSearchResult {
    ClassifierSpec best_spec;
    TrainedModel best_model; // refit on the full provided data
    std::vector<GridPoint> table;
};

// Cartesian product in lexicographic order: names sorted, last name varying
// fastest, values in their listed order.
inline std::vector<std::map<std::string, double>> enumerate_grid(const HyperGrid& grid) {
    std::vector<std::pair<std::string, std::vector<double>>> axes(grid.begin(), grid.end());
    size_t total = 1;
    for (const auto& [name, values] : axes) {
        if (values.empty()) throw std::invalid_argument("grid axis '" + name + "' has no values");
        total *= values.size();
    }
    std::vector<std::map<std::string, double>> combos;
    combos.reserve(total);
    for (size_t at = 0; at < total; ++at) {
        std::map<std::string, double> combo;
        size_t rest = at;
        for (size_t a = axes.size(); a-- > 0;) {
            const auto& [name, values] = axes[a];
            combo[name] = values[rest % values.size()];
            rest /= values.size();
        }
        combos.push_back(std::move(combo));
    }
    return combos;
}

constexpr size_t kDefaultGridCap = 512;

inline GridSearchResult grid_search(ClassifierKind kind, const HyperGrid& grid,
                                    const LabeledDataset& data, size_t k, Task task, uint64_t seed,
                                    size_t cap = kDefaultGridCap,
                                    ScalerKind scaler_policy = ScalerKind::ZScore) {
    if (grid.empty()) throw std::invalid_argument("hyperparameter grid is empty");
    auto combos = enumerate_grid(grid);
    if (combos.size() > cap)
        raise(Errc::GridTooLarge, std::to_string(combos.size()) + " combinations exceed cap " +
                                      std::to_string(cap));
    GridSearchResult result;
    bool have_best = false;
    double best_mean = 0.0;
    for (const auto& combo : combos) {
        ClassifierSpec spec{kind, combo, seed};
        validate_spec(spec);
        auto cv = cross_validate(spec, data, k, task, seed, scaler_policy);
        result.table.push_back({combo, cv.fold_scores, cv.mean});
        if (!have_best || cv.mean > best_mean) { // ties keep the earlier combination
            have_best = true;
            best_mean = cv.mean;
            result.best_spec = spec;
        }
    }
    result.best_model = fit(result.best_spec, data, task, scaler_policy);
    return result;
}

inline std::string grid_results_to_csv(const GridSearchResult& r) {
    std::vector<std::string> names;
    if (!r.table.empty())
        for (const auto& [name, value] : r.table[0].combo) names.push_back(name);
    std::vector<std::string> header = names;
    for (size_t f = 0; f < (r.table.empty() ? 0 : r.table[0].fold_scores.size()); ++f)
        header.push_back("fold_" + std::to_string(f));
    header.push_back("mean");
    std::string out = csv::join_row(header);
    for (const auto& point : r.table) {
        std::vector<std::string> fields;
        for (const auto& name : names) fields.push_back(csv::format_double(point.combo.at(name)));
        for (double s : point.fold_scores) fields.push_back(csv::format_double(s));
        fields.push_back(csv::format_double(point.mean));
        out += csv::join_row(fields);
    }
    return out;
}

// --- model comparison suite ------------------------------------------------------

struct SuiteOptions {
    Task task = Task::Binary;
    Averaging multiclass_averaging = Averaging::Weighted;
    std::string positive_class = kTargetedName;
    size_t cv_folds = 5;
    uint64_t seed = 0;
    ScalerKind scaler_policy = ScalerKind::ZScore;
    std::vector<ClassifierKind> roster = classifier_roster();
    std::map<ClassifierKind, HyperGrid> grids; // per-kind override; default grids otherwise
    size_t grid_cap = kDefaultGridCap;
};

struct SuiteRow {
    std::string model;
    ClassifierSpec chosen_spec;
    MetricsReport metrics;
};

// Tunes each roster member on TRAIN by cross-validated grid search, refits
// on TRAIN, and scores once on TEST.
inline std::vector<SuiteRow> evaluate_suite(const LabeledDataset& data, const SuiteOptions& opt) {
    if (!data.split) throw std::invalid_argument("evaluate_suite needs a split assignment");
    auto train = data.subset(data.part_indices(Part::Train));
    auto test = data.subset(data.part_indices(Part::Test));
    if (test.size() == 0) throw std::invalid_argument("test partition is empty");
    std::vector<std::string> truth;
    truth.reserve(test.size());
    for (size_t i = 0; i < test.size(); ++i) truth.push_back(test.task_label(i, opt.task));

    std::vector<SuiteRow> rows;
    for (ClassifierKind kind : opt.roster) {
        HyperGrid grid = default_grid(kind);
        if (auto it = opt.grids.find(kind); it != opt.grids.end()) grid = it->second;
        TrainedModel model;
        ClassifierSpec chosen{kind, {}, opt.seed};
        if (grid.empty()) {
            model = fit(chosen, train, opt.task, opt.scaler_policy);
        } else {
            auto gs = grid_search(kind, grid, train, opt.cv_folds, opt.task, opt.seed,
                                  opt.grid_cap, opt.scaler_policy);
            model = std::move(gs.best_model);
            chosen = gs.best_spec;
        }
        auto pred = model.predict(test.rows);
        MetricsReport metrics =
            opt.task == Task::Binary
                ? compute_metrics(truth, pred, opt.positive_class, model.classes)
                : compute_metrics(truth, pred, opt.multiclass_averaging, model.classes);
        rows.push_back({classifier_name(kind), chosen, std::move(metrics)});
    }
    return rows;
}

// Table 4/5 layout: Model, Accuracy, Precision, Recall, F1 Score
inline std::string format_report_table(std::span<const SuiteRow> rows) {
    std::string out = "Model   Accuracy   Precision   Recall   F1 Score\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-7s %8.4f %11.4f %8.4f %10.4f\n", r.model.c_str(),
                      r.metrics.accuracy, r.metrics.precision, r.metrics.recall, r.metrics.f1);
        out += line;
    }
    return out;
}

inline std::string report_to_csv(std::span<const SuiteRow> rows) {
    std::string out = csv::join_row({"Model", "Accuracy", "Precision", "Recall", "F1"});
    for (const auto& r : rows)
        out += csv::join_row({r.model, csv::format_fixed(r.metrics.accuracy, 4),
                              csv::format_fixed(r.metrics.precision, 4),
                              csv::format_fixed(r.metrics.recall, 4),
                              csv::format_fixed(r.metrics.f1, 4)});
    return out;
}

} // namespace wfp
