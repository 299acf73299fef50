// spec.hpp - classifier roster, hyperparameter schemas, default grids
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wfp/errors.hpp"

namespace wfp {

enum class ClassifierKind : uint8_t { DT, RF, GBM, ADAB, SVM, NB, KNN };

inline const std::vector<ClassifierKind>& classifier_roster() {
    static const std::vector<ClassifierKind> roster = {
        ClassifierKind::DT,  ClassifierKind::RF, ClassifierKind::GBM, ClassifierKind::ADAB,
        ClassifierKind::SVM, ClassifierKind::NB, ClassifierKind::KNN,
    };
    return roster;
}

inline const char* classifier_name(ClassifierKind k) {
    switch (k) {
    case ClassifierKind::DT:   return "DT";
    case ClassifierKind::RF:   return "RF";
    case ClassifierKind::GBM:  return "GBM";
    case ClassifierKind::ADAB: return "AdaB";
    case ClassifierKind::SVM:  return "SVM";
    case ClassifierKind::NB:   return "NB";
    case ClassifierKind::KNN:  return "KNN";
    }
    return "?";
}

inline ClassifierKind classifier_from_name(const std::string& name) {
    for (ClassifierKind k : classifier_roster())
        if (name == classifier_name(k)) return k;
    raise(Errc::InvalidHyperparameter, "unknown classifier '" + name + "'");
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::DT;
    std::map<std::string, double> hyperparameters; // absent keys use defaults
    uint64_t seed = 0;

    bool operator==(const ClassifierSpec&) const = default;
};

struct HyperSchema {
    const char* name;
    double def;
    double lo;
    double hi;
    bool integer;
};

// Integer depth/count parameters use 0 to mean "unbounded" where noted.
inline const std::vector<HyperSchema>& hyper_schema(ClassifierKind kind) {
    static const std::vector<HyperSchema> dt = {
        {"max_depth", 0, 0, 1e9, true}, // 0 = unbounded
        {"min_samples_split", 2, 2, 1e9, true},
        {"min_samples_leaf", 1, 1, 1e9, true},
    };
    static const std::vector<HyperSchema> rf = {
        {"n_estimators", 100, 1, 100000, true},
        {"max_depth", 0, 0, 1e9, true},
        {"max_features", 0, 0, 1e6, true}, // 0 = ceil(sqrt(d))
        {"bootstrap", 1, 0, 1, true},
        {"min_samples_split", 2, 2, 1e9, true},
        {"min_samples_leaf", 1, 1, 1e9, true},
    };
    static const std::vector<HyperSchema> gbm = {
        {"n_estimators", 100, 1, 100000, true},
        {"learning_rate", 0.1, 1e-6, 10, false},
        {"max_depth", 3, 1, 64, true},
    };
    static const std::vector<HyperSchema> adab = {
        {"n_estimators", 300, 1, 100000, true},
        {"max_depth", 2, 1, 2, true}, // stumps or depth-2 trees
    };
    static const std::vector<HyperSchema> svm = {
        {"lambda", 1e-4, 1e-12, 1e6, false},
        {"epochs", 20, 1, 100000, true},
    };
    static const std::vector<HyperSchema> nb = {};
    static const std::vector<HyperSchema> knn = {
        {"k", 5, 1, 1e9, true},
    };
    switch (kind) {
    case ClassifierKind::DT:   return dt;
    case ClassifierKind::RF:   return rf;
    case ClassifierKind::GBM:  return gbm;
    case ClassifierKind::ADAB: return adab;
    case ClassifierKind::SVM:  return svm;
    case ClassifierKind::NB:   return nb;
    case ClassifierKind::KNN:  return knn;
    }
    return nb;
}

inline void validate_spec(const ClassifierSpec& spec) {
    const auto& schema = hyper_schema(spec.kind);
    for (const auto& [name, value] : spec.hyperparameters) {
        const HyperSchema* found = nullptr;
        for (const auto& s : schema)
            if (name == s.name) { found = &s; break; }
        if (!found)
            raise(Errc::InvalidHyperparameter, std::string(classifier_name(spec.kind)) +
                                                   " has no hyperparameter '" + name + "'");
        if (!(value >= found->lo && value <= found->hi))
            raise(Errc::InvalidHyperparameter, name + "=" + std::to_string(value) +
                                                   " outside [" + std::to_string(found->lo) + ", " +
                                                   std::to_string(found->hi) + "]");
        if (found->integer && value != std::floor(value))
            raise(Errc::InvalidHyperparameter, name + " must be an integer");
    }
}

inline double hyper(const ClassifierSpec& spec, const std::string& name) {
    auto it = spec.hyperparameters.find(name);
    if (it != spec.hyperparameters.end()) return it->second;
    for (const auto& s : hyper_schema(spec.kind))
        if (name == s.name) return s.def;
    raise(Errc::InvalidHyperparameter, "no such hyperparameter '" + name + "'");
}

using HyperGrid = std::map<std::string, std::vector<double>>;

// Small documented defaults; override per run.
inline HyperGrid default_grid(ClassifierKind kind) {
    switch (kind) {
    case ClassifierKind::DT:
        return {{"max_depth", {4, 8, 16, 0}}};
    case ClassifierKind::RF:
        return {{"n_estimators", {100, 300}}, {"max_depth", {8, 16, 0}}};
    case ClassifierKind::GBM:
        return {{"n_estimators", {100, 300}}, {"learning_rate", {0.05, 0.1}}, {"max_depth", {2, 3}}};
    case ClassifierKind::ADAB:
        return {{"n_estimators", {50, 200}}};
    case ClassifierKind::SVM:
        return {{"lambda", {1e-4, 1e-2}}, {"epochs", {20}}};
    case ClassifierKind::NB:
        return {};
    case ClassifierKind::KNN:
        return {{"k", {3, 5, 11}}};
    }
    return {};
}

} // namespace wfp
