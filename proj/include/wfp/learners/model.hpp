// model.hpp - the seven classifiers behind one train/predict contract
//
// fit() scales its training rows with the requested policy and embeds the
// fitted ScalerParams; predict() applies them to raw rows internally. All
// randomness derives from the spec seed, and parallel-unit generators are
// derived per unit (tree index, class column) so schedules cannot drift.
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wfp/dataset.hpp"
#include "wfp/learners/spec.hpp"
#include "wfp/learners/tree.hpp"
#include "wfp/rng.hpp"

namespace wfp {

namespace gbm_loss {

inline double sigmoid(double f) {
    if (f >= 0) return 1.0 / (1.0 + std::exp(-f));
    double e = std::exp(f);
    return e / (1.0 + e);
}

// -[y log p + (1-y) log (1-p)] in a cancellation-free form
inline double logistic_loss(double score, double y01) {
    return std::max(score, 0.0) + std::log1p(std::exp(-std::abs(score))) - y01 * score;
}

inline double logistic_grad(double score, double y01) { return sigmoid(score) - y01; }

inline std::vector<double> softmax(std::span<const double> scores) {
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    std::vector<double> p(scores.size());
    double z = 0.0;
    for (size_t k = 0; k < scores.size(); ++k) {
        p[k] = std::exp(scores[k] - mx);
        z += p[k];
    }
    for (double& v : p) v /= z;
    return p;
}

inline double softmax_loss(std::span<const double> scores, size_t y) {
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    return std::log(z) + mx - scores[y];
}

inline std::vector<double> softmax_grad(std::span<const double> scores, size_t y) {
    auto g = softmax(scores);
    g[y] -= 1.0;
    return g;
}

} // namespace gbm_loss

// --- fitted states ---------------------------------------------------------

struct DtState {
    Tree tree;

    std::vector<double> scores(std::span<const double> x, size_t) const {
        return tree.leaf_for(x).dist;
    }
};

struct RfState {
    std::vector<Tree> trees;

    std::vector<double> scores(std::span<const double> x, size_t n_classes) const {
        std::vector<double> votes(n_classes, 0.0);
        for (const Tree& t : trees) {
            const auto& dist = t.leaf_for(x).dist;
            size_t best = 0;
            for (size_t k = 1; k < dist.size(); ++k)
                if (dist[k] > dist[best]) best = k;
            votes[best] += 1.0;
        }
        return votes;
    }
};

struct GbmState {
    std::vector<double> init_scores;      // length 1 (binary) or K
    std::vector<std::vector<Tree>> stages; // stages[s][column]
    double learning_rate = 0.1;

    bool binary() const { return init_scores.size() == 1; }

    // raw additive scores; binary yields {-f/2-ish asymmetry avoided: {0, f}}
    std::vector<double> raw(std::span<const double> x, size_t n_classes) const {
        if (binary()) {
            double f = init_scores[0];
            for (const auto& stage : stages) f += learning_rate * stage[0].leaf_for(x).value;
            return {0.0, f};
        }
        std::vector<double> f(init_scores);
        for (const auto& stage : stages)
            for (size_t k = 0; k < n_classes; ++k)
                f[k] += learning_rate * stage[k].leaf_for(x).value;
        return f;
    }

    std::vector<double> scores(std::span<const double> x, size_t n_classes) const {
        if (binary()) {
            double p = gbm_loss::sigmoid(raw(x, n_classes)[1]);
            return {1.0 - p, p};
        }
        return gbm_loss::softmax(raw(x, n_classes));
    }
};

struct AdaState {
    std::vector<Tree> trees;
    std::vector<double> alphas;
    std::vector<double> priors; // fallback when no stage was accepted

    std::vector<double> scores(std::span<const double> x, size_t n_classes) const {
        if (trees.empty()) return priors;
        std::vector<double> votes(n_classes, 0.0);
        for (size_t t = 0; t < trees.size(); ++t) {
            const auto& dist = trees[t].leaf_for(x).dist;
            size_t best = 0;
            for (size_t k = 1; k < dist.size(); ++k)
                if (dist[k] > dist[best]) best = k;
            votes[best] += alphas[t];
        }
        return votes;
    }
};

struct SvmState {
    Matrix weights; // per class, one-vs-rest
    std::vector<double> biases;

    std::vector<double> scores(std::span<const double> x, size_t n_classes) const {
        std::vector<double> margins(n_classes, 0.0);
        for (size_t k = 0; k < n_classes; ++k) {
            double m = biases[k];
            for (size_t j = 0; j < x.size(); ++j) m += weights[k][j] * x[j];
            margins[k] = m;
        }
        return margins;
    }
};

struct NbState {
    Matrix means; // [class][feature]
    Matrix vars;
    std::vector<double> log_priors;

    std::vector<double> scores(std::span<const double> x, size_t n_classes) const {
        std::vector<double> logp(n_classes);
        for (size_t k = 0; k < n_classes; ++k) {
            double s = log_priors[k];
            for (size_t j = 0; j < x.size(); ++j) {
                double v = vars[k][j];
                double d = x[j] - means[k][j];
                s += -0.5 * (std::log(2.0 * M_PI * v) + d * d / v);
            }
            logp[k] = s;
        }
        return logp;
    }
};

struct KnnState {
    Matrix train;
    std::vector<int> labels;
    size_t k = 5;

    // neighbor selection by (distance, row index); label votes per class
    std::vector<double> scores(std::span<const double> x, size_t n_classes) const {
        std::vector<std::pair<double, size_t>> d;
        d.reserve(train.size());
        for (size_t i = 0; i < train.size(); ++i) {
            double s = 0.0;
            for (size_t j = 0; j < x.size(); ++j) {
                double diff = train[i][j] - x[j];
                s += diff * diff;
            }
            d.emplace_back(s, i);
        }
        size_t kk = std::min(k, d.size());
        std::partial_sort(d.begin(), d.begin() + static_cast<long>(kk), d.end());
        std::vector<double> votes(n_classes, 0.0);
        for (size_t i = 0; i < kk; ++i) votes[static_cast<size_t>(labels[d[i].second])] += 1.0;
        return votes;
    }
};

// --- trained model -----------------------------------------------------------

constexpr int kModelSchemaVersion = 1;

struct TrainedModel {
    ClassifierSpec spec;
    std::vector<std::string> classes;
    ScalerParams scaler;
    size_t feature_arity = 0;
    std::variant<DtState, RfState, GbmState, AdaState, SvmState, NbState, KnnState> state;

    size_t n_classes() const { return classes.size(); }

    std::vector<double> class_scores(std::span<const double> raw_row) const {
        if (raw_row.size() != feature_arity)
            raise(Errc::ArityMismatch, "row has " + std::to_string(raw_row.size()) +
                                           " features, model expects " +
                                           std::to_string(feature_arity));
        std::vector<double> x = scaler.apply(raw_row);
        return std::visit([&](const auto& s) { return s.scores(x, n_classes()); }, state);
    }

    int predict_index(std::span<const double> raw_row) const {
        auto s = class_scores(raw_row);
        size_t best = 0;
        for (size_t k = 1; k < s.size(); ++k)
            if (s[k] > s[best]) best = k; // ties keep the lowest class index
        return static_cast<int>(best);
    }

    std::vector<int> predict_indices(const Matrix& rows) const {
        std::vector<int> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(predict_index(r));
        return out;
    }

    std::vector<std::string> predict(const Matrix& rows) const {
        std::vector<std::string> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(classes[static_cast<size_t>(predict_index(r))]);
        return out;
    }

    // probability simplex per row; SVM exposes margins only
    Matrix predict_proba(const Matrix& rows) const {
        if (std::holds_alternative<SvmState>(state))
            raise(Errc::Unsupported, "SVM defines margins, not probabilities");
        Matrix out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            auto s = class_scores(r);
            if (std::holds_alternative<NbState>(state)) {
                s = gbm_loss::softmax(s); // log posteriors -> posteriors
            } else {
                double total = 0.0;
                for (double v : s) total += v;
                if (total > 0)
                    for (double& v : s) v /= total;
                else
                    s.assign(s.size(), 1.0 / static_cast<double>(s.size()));
            }
            out.push_back(std::move(s));
        }
        return out;
    }

    // raw per-class scores (margins, votes, additive scores, log posteriors)
    Matrix decision_scores(const Matrix& rows) const {
        Matrix out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            if (const auto* g = std::get_if<GbmState>(&state)) {
                std::vector<double> x = scaler.apply(r);
                out.push_back(g->raw(x, n_classes()));
            } else {
                out.push_back(class_scores(r));
            }
        }
        return out;
    }
};

// --- fitting ---------------------------------------------------------------------

namespace fit_detail {

inline std::vector<size_t> iota_rows(size_t n) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

inline DtState fit_dt(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y,
                      size_t K) {
    ClassTreeConfig cfg;
    cfg.max_depth = static_cast<int>(hyper(spec, "max_depth"));
    cfg.min_samples_split = static_cast<size_t>(hyper(spec, "min_samples_split"));
    cfg.min_samples_leaf = static_cast<size_t>(hyper(spec, "min_samples_leaf"));
    std::vector<double> w(X.size(), 1.0);
    DtState s;
    s.tree = fit_classification_tree(X, y, K, w, iota_rows(X.size()), cfg);
    return s;
}

inline RfState fit_rf(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y,
                      size_t K) {
    size_t n = X.size();
    size_t d = X[0].size();
    size_t n_trees = static_cast<size_t>(hyper(spec, "n_estimators"));
    size_t max_features = static_cast<size_t>(hyper(spec, "max_features"));
    if (max_features == 0)
        max_features = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    max_features = std::min(max_features, d);
    bool bootstrap = hyper(spec, "bootstrap") != 0.0;
    std::vector<double> w(n, 1.0);
    RfState s;
    s.trees.reserve(n_trees);
    for (size_t t = 0; t < n_trees; ++t) {
        Rng rng = Rng::derive(spec.seed, t);
        std::vector<size_t> rows;
        rows.reserve(n);
        if (bootstrap) {
            for (size_t i = 0; i < n; ++i) rows.push_back(static_cast<size_t>(rng.below(n)));
        } else {
            rows = iota_rows(n);
        }
        ClassTreeConfig cfg;
        cfg.max_depth = static_cast<int>(hyper(spec, "max_depth"));
        cfg.min_samples_split = static_cast<size_t>(hyper(spec, "min_samples_split"));
        cfg.min_samples_leaf = static_cast<size_t>(hyper(spec, "min_samples_leaf"));
        cfg.max_features = max_features < d ? max_features : 0;
        cfg.rng = &rng;
        s.trees.push_back(fit_classification_tree(X, y, K, w, rows, cfg));
    }
    return s;
}

inline GbmState fit_gbm(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y,
                        size_t K) {
    size_t n = X.size();
    size_t n_stages = static_cast<size_t>(hyper(spec, "n_estimators"));
    RegTreeConfig tree_cfg;
    tree_cfg.max_depth = static_cast<int>(hyper(spec, "max_depth"));
    GbmState s;
    s.learning_rate = hyper(spec, "learning_rate");
    auto rows = iota_rows(n);
    if (K == 2) {
        double pos = 0.0;
        for (int yi : y) pos += yi == 1 ? 1.0 : 0.0;
        double p_bar = pos / static_cast<double>(n);
        s.init_scores = {std::log(p_bar / (1.0 - p_bar))};
        std::vector<double> f(n, s.init_scores[0]);
        std::vector<double> resid(n), hess(n);
        for (size_t stage = 0; stage < n_stages; ++stage) {
            for (size_t i = 0; i < n; ++i) {
                double p = gbm_loss::sigmoid(f[i]);
                double yi = y[i] == 1 ? 1.0 : 0.0;
                resid[i] = yi - p;
                hess[i] = p * (1.0 - p);
            }
            Tree tree = fit_regression_tree(X, resid, hess, rows, tree_cfg);
            for (size_t i = 0; i < n; ++i) f[i] += s.learning_rate * tree.leaf_for(X[i]).value;
            std::vector<Tree> stage_trees;
            stage_trees.push_back(std::move(tree));
            s.stages.push_back(std::move(stage_trees));
        }
    } else {
        s.init_scores.assign(K, 0.0);
        std::vector<double> prior(K, 0.0);
        for (int yi : y) prior[static_cast<size_t>(yi)] += 1.0;
        for (size_t k = 0; k < K; ++k)
            s.init_scores[k] = std::log(std::max(prior[k] / static_cast<double>(n), 1e-12));
        Matrix f(K, std::vector<double>(n));
        for (size_t k = 0; k < K; ++k) std::fill(f[k].begin(), f[k].end(), s.init_scores[k]);
        std::vector<double> col(K), resid(n), hess(n);
        Matrix p(n, std::vector<double>(K));
        for (size_t stage = 0; stage < n_stages; ++stage) {
            for (size_t i = 0; i < n; ++i) {
                for (size_t k = 0; k < K; ++k) col[k] = f[k][i];
                p[i] = gbm_loss::softmax(col);
            }
            std::vector<Tree> stage_trees;
            stage_trees.reserve(K);
            for (size_t k = 0; k < K; ++k) {
                for (size_t i = 0; i < n; ++i) {
                    double yk = static_cast<size_t>(y[i]) == k ? 1.0 : 0.0;
                    resid[i] = yk - p[i][k];
                    hess[i] = p[i][k] * (1.0 - p[i][k]);
                }
                Tree tree = fit_regression_tree(X, resid, hess, rows, tree_cfg);
                for (size_t i = 0; i < n; ++i)
                    f[k][i] += s.learning_rate * tree.leaf_for(X[i]).value;
                stage_trees.push_back(std::move(tree));
            }
            s.stages.push_back(std::move(stage_trees));
        }
    }
    return s;
}

inline AdaState fit_adab(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y,
                         size_t K) {
    size_t n = X.size();
    size_t n_stages = static_cast<size_t>(hyper(spec, "n_estimators"));
    ClassTreeConfig cfg;
    cfg.max_depth = static_cast<int>(hyper(spec, "max_depth"));
    AdaState s;
    s.priors.assign(K, 0.0);
    for (int yi : y) s.priors[static_cast<size_t>(yi)] += 1.0 / static_cast<double>(n);
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    double stop_error = 1.0 - 1.0 / static_cast<double>(K);
    for (size_t stage = 0; stage < n_stages; ++stage) {
        Tree tree = fit_classification_tree(X, y, K, w, iota_rows(n), cfg);
        std::vector<char> wrong(n, 0);
        double err = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const auto& dist = tree.leaf_for(X[i]).dist;
            size_t best = 0;
            for (size_t k = 1; k < K; ++k)
                if (dist[k] > dist[best]) best = k;
            if (best != static_cast<size_t>(y[i])) {
                wrong[i] = 1;
                err += w[i];
            }
        }
        if (err >= stop_error) break; // stage weight would not be positive
        double floored = std::max(err, 1e-12);
        double alpha = std::log((1.0 - floored) / floored) + std::log(static_cast<double>(K) - 1.0);
        s.trees.push_back(std::move(tree));
        s.alphas.push_back(alpha);
        if (err <= 0.0) break; // perfect stage
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            if (wrong[i]) w[i] *= std::exp(alpha);
            total += w[i];
        }
        for (double& wi : w) wi /= total;
    }
    return s;
}

// Pegasos: epoch-shuffled subgradient descent with eta_t = 1/(lambda t).
// The unregularized bias moves on the harmonic schedule 1/t; scaling its
// step by 1/lambda like the weights would let it random-walk at 1/lambda
// magnitude with nothing to shrink it back. The returned iterate is the
// epoch-end snapshot with the lowest primal objective, so the objective is
// non-increasing in the epoch budget.
inline SvmState fit_svm(const ClassifierSpec& spec, const Matrix& X, const std::vector<int>& y,
                        size_t K) {
    size_t n = X.size();
    size_t d = X[0].size();
    double lambda = hyper(spec, "lambda");
    size_t epochs = static_cast<size_t>(hyper(spec, "epochs"));
    SvmState s;
    s.weights.assign(K, std::vector<double>(d, 0.0));
    s.biases.assign(K, 0.0);
    for (size_t k = 0; k < K; ++k) {
        Rng rng = Rng::derive(spec.seed, k);
        std::vector<double> w(d, 0.0);
        double b = 0.0;
        auto objective = [&] {
            double obj = 0.0;
            for (size_t j = 0; j < d; ++j) obj += 0.5 * lambda * w[j] * w[j];
            double hinge = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double yi = static_cast<size_t>(y[i]) == k ? 1.0 : -1.0;
                double margin = b;
                for (size_t j = 0; j < d; ++j) margin += w[j] * X[i][j];
                hinge += std::max(0.0, 1.0 - yi * margin);
            }
            return obj + hinge / static_cast<double>(n);
        };
        double best_obj = std::numeric_limits<double>::infinity();
        std::vector<size_t> order = iota_rows(n);
        uint64_t t = 0;
        for (size_t epoch = 0; epoch < epochs; ++epoch) {
            rng.shuffle(order);
            for (size_t i : order) {
                ++t;
                double eta = 1.0 / (lambda * static_cast<double>(t));
                double yi = static_cast<size_t>(y[i]) == k ? 1.0 : -1.0;
                double margin = b;
                for (size_t j = 0; j < d; ++j) margin += w[j] * X[i][j];
                double shrink = 1.0 - eta * lambda;
                if (yi * margin < 1.0) {
                    for (size_t j = 0; j < d; ++j) w[j] = shrink * w[j] + eta * yi * X[i][j];
                    b += yi / static_cast<double>(t);
                } else {
                    for (size_t j = 0; j < d; ++j) w[j] = shrink * w[j];
                }
            }
            double obj = objective();
            if (obj < best_obj) {
                best_obj = obj;
                s.weights[k] = w;
                s.biases[k] = b;
            }
        }
    }
    return s;
}

inline NbState fit_nb(const Matrix& X, const std::vector<int>& y, size_t K) {
    size_t n = X.size();
    size_t d = X[0].size();
    NbState s;
    s.means.assign(K, std::vector<double>(d, 0.0));
    s.vars.assign(K, std::vector<double>(d, 0.0));
    s.log_priors.assign(K, 0.0);
    std::vector<double> count(K, 0.0);
    for (size_t i = 0; i < n; ++i) {
        count[static_cast<size_t>(y[i])] += 1.0;
        for (size_t j = 0; j < d; ++j) s.means[static_cast<size_t>(y[i])][j] += X[i][j];
    }
    for (size_t k = 0; k < K; ++k)
        for (size_t j = 0; j < d; ++j) s.means[k][j] /= count[k];
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) {
            double diff = X[i][j] - s.means[static_cast<size_t>(y[i])][j];
            s.vars[static_cast<size_t>(y[i])][j] += diff * diff;
        }
    // variance floor: 1e-9 x the largest overall feature variance
    double max_var = 0.0;
    for (size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (size_t i = 0; i < n; ++i) mean += X[i][j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (size_t i = 0; i < n; ++i) var += (X[i][j] - mean) * (X[i][j] - mean);
        max_var = std::max(max_var, var / static_cast<double>(n));
    }
    double floor = std::max(1e-9 * max_var, 1e-12);
    for (size_t k = 0; k < K; ++k) {
        s.log_priors[k] = std::log(count[k] / static_cast<double>(n));
        for (size_t j = 0; j < d; ++j)
            s.vars[k][j] = std::max(s.vars[k][j] / count[k], floor);
    }
    return s;
}

} // namespace fit_detail

inline TrainedModel fit(const ClassifierSpec& spec, const LabeledDataset& train, Task task,
                        ScalerKind scaler_policy = ScalerKind::ZScore) {
    validate_spec(spec);
    if (train.size() == 0) throw std::invalid_argument("training set is empty");
    for (const auto& row : train.rows)
        for (double v : row)
            if (is_missing(v))
                throw std::invalid_argument("training set contains missing values");

    TrainedModel m;
    m.spec = spec;
    m.feature_arity = train.arity();

    std::set<std::string> label_set;
    for (size_t i = 0; i < train.size(); ++i) label_set.insert(train.task_label(i, task));
    m.classes.assign(label_set.begin(), label_set.end());
    if (m.classes.size() < 2)
        raise(Errc::DegenerateInput, "one class in training data: '" + m.classes[0] + "'");

    auto idx = fit_detail::iota_rows(train.size());
    m.scaler = ScalerParams::fit(scaler_policy, train.rows, idx, train.arity());
    Matrix X;
    X.reserve(train.size());
    for (const auto& row : train.rows) X.push_back(m.scaler.apply(row));

    std::map<std::string, int> class_index;
    for (size_t k = 0; k < m.classes.size(); ++k) class_index[m.classes[k]] = static_cast<int>(k);
    std::vector<int> y(train.size());
    for (size_t i = 0; i < train.size(); ++i) y[i] = class_index[train.task_label(i, task)];

    size_t K = m.classes.size();
    switch (spec.kind) {
    case ClassifierKind::DT:   m.state = fit_detail::fit_dt(spec, X, y, K); break;
    case ClassifierKind::RF:   m.state = fit_detail::fit_rf(spec, X, y, K); break;
    case ClassifierKind::GBM:  m.state = fit_detail::fit_gbm(spec, X, y, K); break;
    case ClassifierKind::ADAB: m.state = fit_detail::fit_adab(spec, X, y, K); break;
    case ClassifierKind::SVM:  m.state = fit_detail::fit_svm(spec, X, y, K); break;
    case ClassifierKind::NB:   m.state = fit_detail::fit_nb(X, y, K); break;
    case ClassifierKind::KNN: {
        KnnState s;
        s.train = X;
        s.labels = y;
        s.k = static_cast<size_t>(hyper(spec, "k"));
        m.state = std::move(s);
        break;
    }
    }
    return m;
}

// --- serialization ------------------------------------------------------------------

namespace model_io {

using nlohmann::json;

inline json tree_to_json(const Tree& t) {
    json f = json::array(), thr = json::array(), l = json::array(), r = json::array(),
         val = json::array(), dist = json::array();
    for (const TreeNode& n : t.nodes) {
        f.push_back(n.feature);
        thr.push_back(n.threshold);
        l.push_back(n.left);
        r.push_back(n.right);
        val.push_back(n.value);
        dist.push_back(n.dist);
    }
    return json{{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r},
                {"value", val}, {"dist", dist}};
}

inline Tree tree_from_json(const json& j) {
    Tree t;
    size_t n = j.at("feature").size();
    t.nodes.resize(n);
    for (size_t i = 0; i < n; ++i) {
        t.nodes[i].feature = j.at("feature")[i].get<int>();
        t.nodes[i].threshold = j.at("threshold")[i].get<double>();
        t.nodes[i].left = j.at("left")[i].get<int>();
        t.nodes[i].right = j.at("right")[i].get<int>();
        t.nodes[i].value = j.at("value")[i].get<double>();
        t.nodes[i].dist = j.at("dist")[i].get<std::vector<double>>();
    }
    return t;
}

inline json state_to_json(const TrainedModel& m) {
    json j;
    if (const auto* dt = std::get_if<DtState>(&m.state)) {
        j["tree"] = tree_to_json(dt->tree);
    } else if (const auto* rf = std::get_if<RfState>(&m.state)) {
        json trees = json::array();
        for (const Tree& t : rf->trees) trees.push_back(tree_to_json(t));
        j["trees"] = trees;
    } else if (const auto* g = std::get_if<GbmState>(&m.state)) {
        j["init_scores"] = g->init_scores;
        j["learning_rate"] = g->learning_rate;
        json stages = json::array();
        for (const auto& stage : g->stages) {
            json cols = json::array();
            for (const Tree& t : stage) cols.push_back(tree_to_json(t));
            stages.push_back(cols);
        }
        j["stages"] = stages;
    } else if (const auto* a = std::get_if<AdaState>(&m.state)) {
        json trees = json::array();
        for (const Tree& t : a->trees) trees.push_back(tree_to_json(t));
        j["trees"] = trees;
        j["alphas"] = a->alphas;
        j["priors"] = a->priors;
    } else if (const auto* s = std::get_if<SvmState>(&m.state)) {
        j["weights"] = s->weights;
        j["biases"] = s->biases;
    } else if (const auto* nb = std::get_if<NbState>(&m.state)) {
        j["means"] = nb->means;
        j["vars"] = nb->vars;
        j["log_priors"] = nb->log_priors;
    } else if (const auto* knn = std::get_if<KnnState>(&m.state)) {
        j["train"] = knn->train;
        j["labels"] = knn->labels;
        j["k"] = knn->k;
    }
    return j;
}

inline void state_from_json(TrainedModel& m, const json& j) {
    switch (m.spec.kind) {
    case ClassifierKind::DT: {
        DtState s;
        s.tree = tree_from_json(j.at("tree"));
        m.state = std::move(s);
        break;
    }
    case ClassifierKind::RF: {
        RfState s;
        for (const auto& t : j.at("trees")) s.trees.push_back(tree_from_json(t));
        m.state = std::move(s);
        break;
    }
    case ClassifierKind::GBM: {
        GbmState s;
        s.init_scores = j.at("init_scores").get<std::vector<double>>();
        s.learning_rate = j.at("learning_rate").get<double>();
        for (const auto& stage : j.at("stages")) {
            std::vector<Tree> cols;
            for (const auto& t : stage) cols.push_back(tree_from_json(t));
            s.stages.push_back(std::move(cols));
        }
        m.state = std::move(s);
        break;
    }
    case ClassifierKind::ADAB: {
        AdaState s;
        for (const auto& t : j.at("trees")) s.trees.push_back(tree_from_json(t));
        s.alphas = j.at("alphas").get<std::vector<double>>();
        s.priors = j.at("priors").get<std::vector<double>>();
        m.state = std::move(s);
        break;
    }
    case ClassifierKind::SVM: {
        SvmState s;
        s.weights = j.at("weights").get<Matrix>();
        s.biases = j.at("biases").get<std::vector<double>>();
        m.state = std::move(s);
        break;
    }
    case ClassifierKind::NB: {
        NbState s;
        s.means = j.at("means").get<Matrix>();
        s.vars = j.at("vars").get<Matrix>();
        s.log_priors = j.at("log_priors").get<std::vector<double>>();
        m.state = std::move(s);
        break;
    }
    case ClassifierKind::KNN: {
        KnnState s;
        s.train = j.at("train").get<Matrix>();
        s.labels = j.at("labels").get<std::vector<int>>();
        s.k = j.at("k").get<size_t>();
        m.state = std::move(s);
        break;
    }
    }
}

} // namespace model_io

inline std::string save_model(const TrainedModel& m) {
    using nlohmann::json;
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = classifier_name(m.spec.kind);
    j["seed"] = m.spec.seed;
    j["hyperparameters"] = m.spec.hyperparameters;
    j["classes"] = m.classes;
    j["feature_arity"] = m.feature_arity;
    j["scaler"] = json{{"kind", static_cast<int>(m.scaler.kind)},
                       {"offset", m.scaler.offset},
                       {"scale", m.scaler.scale}};
    j["state"] = model_io::state_to_json(m);
    return j.dump(1) + "\n";
}

inline TrainedModel load_model(const std::string& text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::CorruptDocument, e.what());
    }
    try {
        int version = j.at("schema_version").get<int>();
        if (version != kModelSchemaVersion)
            raise(Errc::VersionMismatch, "model document version " + std::to_string(version) +
                                             ", supported " + std::to_string(kModelSchemaVersion));
        TrainedModel m;
        m.spec.kind = classifier_from_name(j.at("kind").get<std::string>());
        m.spec.seed = j.at("seed").get<uint64_t>();
        m.spec.hyperparameters = j.at("hyperparameters").get<std::map<std::string, double>>();
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.feature_arity = j.at("feature_arity").get<size_t>();
        m.scaler.kind = static_cast<ScalerKind>(j.at("scaler").at("kind").get<int>());
        m.scaler.offset = j.at("scaler").at("offset").get<std::vector<double>>();
        m.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
        model_io::state_from_json(m, j.at("state"));
        return m;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(Errc::CorruptDocument, e.what());
    }
}

} // namespace wfp
