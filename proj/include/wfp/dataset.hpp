// dataset.hpp - labeled datasets: monitored-list labeling, preprocessing,
// stratified splitting, CSV persistence, external CSV import
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wfp/csv.hpp"
#include "wfp/errors.hpp"
#include "wfp/features.hpp"
#include "wfp/flow.hpp"
#include "wfp/net.hpp"
#include "wfp/rng.hpp"

namespace wfp {

enum class BinaryLabel : uint8_t { Targeted, Untargeted };
enum class Part : uint8_t { Train, Validation, Test };
enum class Task : uint8_t { Binary, Multiclass };

constexpr const char* kTargetedName = "targeted";
constexpr const char* kUntargetedName = "untargeted";

inline const char* part_name(Part p) {
    switch (p) {
    case Part::Train:      return "train";
    case Part::Validation: return "validation";
    case Part::Test:       return "test";
    }
    return "?";
}

// --- monitored list --------------------------------------------------------

struct MonitoredSite {
    std::string label;
    std::vector<Cidr> matchers;
};

// Site labels are unique and matcher sets pairwise disjoint, so an address
// maps to at most one site. "untargeted" is reserved for the complement.
class MonitoredList {
public:
    void add(const std::string& label, const Cidr& matcher) {
        if (label.empty() || label == kUntargetedName)
            raise(Errc::AmbiguousMatch, "site label '" + label + "' is reserved or empty");
        for (const auto& site : sites_) {
            if (site.label == label) continue;
            for (const auto& m : site.matchers)
                if (m.overlaps(matcher))
                    raise(Errc::AmbiguousMatch, matcher.to_string() + " overlaps " +
                                                    m.to_string() + " of site " + site.label);
        }
        for (auto& site : sites_) {
            if (site.label == label) {
                site.matchers.push_back(matcher);
                return;
            }
        }
        sites_.push_back({label, {matcher}});
    }

    // one "label,matcher" pair per line; '#' starts a comment
    static MonitoredList parse(const std::string& text) {
        MonitoredList list;
        size_t lineno = 0;
        size_t start = 0;
        while (start <= text.size()) {
            size_t end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            std::string line = text.substr(start, end - start);
            start = end + 1;
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
                line.pop_back();
            size_t begin = line.find_first_not_of(" \t");
            if (begin == std::string::npos) continue;
            line = line.substr(begin);
            auto comma = line.find(',');
            if (comma == std::string::npos)
                raise(Errc::HeaderMismatch, "monitored list line " + std::to_string(lineno) +
                                                ": expected 'label,matcher'");
            std::string label = line.substr(0, comma);
            std::string matcher_text = line.substr(comma + 1);
            auto matcher = Cidr::parse(matcher_text);
            if (!matcher)
                raise(Errc::HeaderMismatch, "monitored list line " + std::to_string(lineno) +
                                                ": bad matcher '" + matcher_text + "'");
            list.add(label, *matcher);
        }
        return list;
    }

    std::string to_text() const {
        std::string out;
        for (const auto& site : sites_)
            for (const auto& m : site.matchers) out += site.label + "," + m.to_string() + "\n";
        return out;
    }

    // Detects invariant violations at runtime: two distinct matching sites
    // for one address is an error, not a silent pick.
    std::optional<std::string> match(const IpAddr& addr) const {
        const std::string* found = nullptr;
        for (const auto& site : sites_) {
            bool hit = false;
            for (const auto& m : site.matchers)
                if (m.contains(addr)) { hit = true; break; }
            if (!hit) continue;
            if (found && *found != site.label)
                raise(Errc::AmbiguousMatch,
                      addr.to_string() + " matches both " + *found + " and " + site.label);
            found = &site.label;
        }
        if (!found) return std::nullopt;
        return *found;
    }

    const std::vector<MonitoredSite>& sites() const { return sites_; }

private:
    std::vector<MonitoredSite> sites_;
};

// --- labeled dataset --------------------------------------------------------

constexpr int kDatasetSchemaVersion = 1;

struct LabeledDataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows; // NaN marks a missing value
    std::vector<BinaryLabel> binary_labels;
    std::vector<std::string> site_labels; // empty = none; nonempty iff targeted
    int schema_version = kDatasetSchemaVersion;
    std::optional<std::vector<Part>> split;

    size_t size() const { return rows.size(); }
    size_t arity() const { return feature_names.size(); }

    std::string task_label(size_t i, Task task) const {
        if (task == Task::Binary)
            return binary_labels[i] == BinaryLabel::Targeted ? kTargetedName : kUntargetedName;
        return site_labels[i].empty() ? kUntargetedName : site_labels[i];
    }

    std::vector<size_t> part_indices(Part p) const {
        std::vector<size_t> idx;
        if (!split) return idx;
        for (size_t i = 0; i < size(); ++i)
            if ((*split)[i] == p) idx.push_back(i);
        return idx;
    }

    LabeledDataset subset(std::span<const size_t> indices) const {
        LabeledDataset out;
        out.feature_names = feature_names;
        out.schema_version = schema_version;
        if (split) out.split.emplace();
        for (size_t i : indices) {
            out.rows.push_back(rows[i]);
            out.binary_labels.push_back(binary_labels[i]);
            out.site_labels.push_back(site_labels[i]);
            if (split) out.split->push_back((*split)[i]);
        }
        return out;
    }

    void append_row(std::vector<double> row, BinaryLabel b, std::string site) {
        rows.push_back(std::move(row));
        binary_labels.push_back(b);
        site_labels.push_back(std::move(site));
    }
};

// --- labeling ----------------------------------------------------------------

// A row is targeted iff either flow endpoint matches a monitored site.
inline LabeledDataset label(std::span<const Flow> flows, std::span<const FeatureVector> features,
                            const MonitoredList& list) {
    if (flows.size() != features.size())
        raise(Errc::ArityMismatch, "flows and features must align one-to-one");
    LabeledDataset ds;
    ds.feature_names = feature_names();
    for (size_t i = 0; i < flows.size(); ++i) {
        auto site_a = list.match(flows[i].key.addr_a);
        auto site_b = list.match(flows[i].key.addr_b);
        std::string site;
        if (site_a && site_b && *site_a != *site_b)
            raise(Errc::AmbiguousMatch, "flow endpoints match two sites: " + *site_a + ", " + *site_b);
        if (site_a) site = *site_a;
        else if (site_b) site = *site_b;
        auto vals = features[i].values();
        ds.append_row(std::vector<double>(vals.begin(), vals.end()),
                      site.empty() ? BinaryLabel::Untargeted : BinaryLabel::Targeted, site);
    }
    return ds;
}

// --- scaling -------------------------------------------------------------------

enum class ScalerKind : uint8_t { None, ZScore, MinMax };
enum class MissingPolicy : uint8_t { Drop, ImputeMedian };

struct PreprocessPolicy {
    bool dedup = false;
    MissingPolicy missing = MissingPolicy::Drop;
    ScalerKind scaler = ScalerKind::ZScore;
};

// Affine per-feature transform fitted on training rows. Constant features
// (zero sigma or zero range) map to 0.
struct ScalerParams {
    ScalerKind kind = ScalerKind::None;
    std::vector<double> offset;
    std::vector<double> scale;

    static ScalerParams fit(ScalerKind kind, const std::vector<std::vector<double>>& rows,
                            std::span<const size_t> indices, size_t arity) {
        ScalerParams p;
        p.kind = kind;
        if (kind == ScalerKind::None) return p;
        p.offset.assign(arity, 0.0);
        p.scale.assign(arity, 0.0);
        for (size_t j = 0; j < arity; ++j) {
            if (kind == ScalerKind::ZScore) {
                double sum = 0.0;
                size_t n = 0;
                for (size_t i : indices) {
                    if (is_missing(rows[i][j])) continue;
                    sum += rows[i][j];
                    ++n;
                }
                double mean = n ? sum / static_cast<double>(n) : 0.0;
                double ss = 0.0;
                for (size_t i : indices) {
                    if (is_missing(rows[i][j])) continue;
                    double d = rows[i][j] - mean;
                    ss += d * d;
                }
                p.offset[j] = mean;
                p.scale[j] = n ? std::sqrt(ss / static_cast<double>(n)) : 0.0; // population sigma
            } else {
                double lo = 0.0, hi = 0.0;
                bool seen = false;
                for (size_t i : indices) {
                    if (is_missing(rows[i][j])) continue;
                    double v = rows[i][j];
                    if (!seen) { lo = hi = v; seen = true; }
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                p.offset[j] = lo;
                p.scale[j] = hi - lo;
            }
        }
        return p;
    }

    double apply_one(size_t j, double x) const {
        if (kind == ScalerKind::None) return x;
        if (is_missing(x)) return x;
        return scale[j] > 0.0 ? (x - offset[j]) / scale[j] : 0.0;
    }

    std::vector<double> apply(std::span<const double> row) const {
        std::vector<double> out(row.begin(), row.end());
        if (kind == ScalerKind::None) return out;
        for (size_t j = 0; j < out.size(); ++j) out[j] = apply_one(j, out[j]);
        return out;
    }

    size_t arity() const { return kind == ScalerKind::None ? 0 : offset.size(); }
};

// --- preprocessing ---------------------------------------------------------------

namespace dataset_detail {

inline bool value_equal(double a, double b) {
    if (is_missing(a) || is_missing(b)) return is_missing(a) && is_missing(b);
    return a == b;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<size_t> all_indices(size_t n) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

// training rows when a split exists, otherwise every row
inline std::vector<size_t> stat_indices(const LabeledDataset& ds) {
    return ds.split ? ds.part_indices(Part::Train) : all_indices(ds.size());
}

} // namespace dataset_detail

// Duplicate removal, missing-value handling, then scaling. Scaler and
// imputation statistics come from TRAIN rows when a split is present.
inline std::pair<LabeledDataset, ScalerParams> preprocess(const LabeledDataset& input,
                                                          const PreprocessPolicy& policy) {
    using namespace dataset_detail;
    LabeledDataset ds = input;

    if (policy.dedup) {
        std::vector<size_t> keep;
        for (size_t i = 0; i < ds.size(); ++i) {
            bool dup = false;
            for (size_t k : keep) {
                if (ds.binary_labels[i] != ds.binary_labels[k] ||
                    ds.site_labels[i] != ds.site_labels[k])
                    continue;
                bool same = true;
                for (size_t j = 0; j < ds.arity() && same; ++j)
                    same = value_equal(ds.rows[i][j], ds.rows[k][j]);
                if (same) { dup = true; break; }
            }
            if (!dup) keep.push_back(i);
        }
        ds = ds.subset(keep);
    }

    if (policy.missing == MissingPolicy::Drop) {
        std::vector<size_t> keep;
        for (size_t i = 0; i < ds.size(); ++i) {
            bool any_missing = false;
            for (double v : ds.rows[i])
                if (is_missing(v)) { any_missing = true; break; }
            if (!any_missing) keep.push_back(i);
        }
        ds = ds.subset(keep);
    } else {
        auto stat_idx = stat_indices(ds);
        for (size_t j = 0; j < ds.arity(); ++j) {
            std::vector<double> train_vals;
            for (size_t i : stat_idx)
                if (!is_missing(ds.rows[i][j])) train_vals.push_back(ds.rows[i][j]);
            if (train_vals.empty())
                for (size_t i = 0; i < ds.size(); ++i)
                    if (!is_missing(ds.rows[i][j])) train_vals.push_back(ds.rows[i][j]);
            double med = median(std::move(train_vals));
            for (auto& row : ds.rows)
                if (is_missing(row[j])) row[j] = med;
        }
    }

    if (ds.size() == 0) raise(Errc::EmptyAfterFilter, "no rows survive preprocessing");

    ScalerParams params = ScalerParams::fit(policy.scaler, ds.rows, stat_indices(ds), ds.arity());
    if (policy.scaler != ScalerKind::None)
        for (auto& row : ds.rows) row = params.apply(row);
    return {std::move(ds), std::move(params)};
}

// --- splitting -----------------------------------------------------------------

struct SplitRatios {
    double train = 0.7;
    double validation = 0.15;
    double test = 0.15;
};

enum class StratifyOn : uint8_t { Binary, Site };

namespace dataset_detail {

// Largest-remainder apportionment of m rows over the three partitions,
// adjusted so every partition keeps at least one row (possible once m >= 3).
inline std::array<size_t, 3> apportion(size_t m, const SplitRatios& r) {
    std::array<double, 3> quota = {r.train * static_cast<double>(m),
                                   r.validation * static_cast<double>(m),
                                   r.test * static_cast<double>(m)};
    std::array<size_t, 3> counts{};
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        counts[static_cast<size_t>(i)] = static_cast<size_t>(std::floor(quota[static_cast<size_t>(i)]));
        assigned += counts[static_cast<size_t>(i)];
    }
    size_t rem = m - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double fa = quota[static_cast<size_t>(a)] - std::floor(quota[static_cast<size_t>(a)]);
        double fb = quota[static_cast<size_t>(b)] - std::floor(quota[static_cast<size_t>(b)]);
        if (fa != fb) return fa > fb;
        return a < b; // earlier partition wins remainder ties
    });
    for (size_t i = 0; i < rem; ++i) counts[static_cast<size_t>(order[i % 3])] += 1;
    for (size_t p = 0; p < 3; ++p) {
        while (counts[p] == 0) {
            size_t donor = 0;
            for (size_t q = 1; q < 3; ++q)
                if (counts[q] > counts[donor]) donor = q;
            counts[donor] -= 1;
            counts[p] += 1;
        }
    }
    return counts;
}

} // namespace dataset_detail

// Deterministic per-stratum proportional assignment. Every class with at
// least 3 rows lands in every partition.
inline LabeledDataset split_dataset(const LabeledDataset& input, const SplitRatios& ratios,
                                    StratifyOn stratify, uint64_t seed) {
    double sum = ratios.train + ratios.validation + ratios.test;
    if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0 ||
        std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split ratios must be positive and sum to 1");
    LabeledDataset ds = input;
    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < ds.size(); ++i) {
        std::string key = stratify == StratifyOn::Binary ? ds.task_label(i, Task::Binary)
                                                         : ds.task_label(i, Task::Multiclass);
        strata[key].push_back(i);
    }
    std::vector<Part> assignment(ds.size(), Part::Train);
    size_t ordinal = 0;
    for (auto& [label_name, idx] : strata) {
        if (idx.size() < 3)
            raise(Errc::ClassTooSmall, "stratum '" + label_name + "' has " +
                                           std::to_string(idx.size()) + " rows, need 3");
        auto counts = dataset_detail::apportion(idx.size(), ratios);
        Rng rng = Rng::derive(seed, ordinal++);
        rng.shuffle(idx);
        size_t at = 0;
        for (size_t p = 0; p < 3; ++p)
            for (size_t c = 0; c < counts[p]; ++c)
                assignment[idx[at++]] = static_cast<Part>(p);
    }
    ds.split = std::move(assignment);
    return ds;
}

// --- dataset CSV -----------------------------------------------------------------

inline std::string dataset_to_csv(const LabeledDataset& ds) {
    std::vector<std::string> header = ds.feature_names;
    header.push_back("binary_label");
    header.push_back("site_label");
    if (ds.split) header.push_back("split");
    std::string out = csv::join_row(header);
    for (size_t i = 0; i < ds.size(); ++i) {
        std::vector<std::string> fields;
        fields.reserve(header.size());
        for (double v : ds.rows[i]) fields.push_back(is_missing(v) ? "" : csv::format_double(v));
        fields.push_back(ds.binary_labels[i] == BinaryLabel::Targeted ? kTargetedName
                                                                      : kUntargetedName);
        fields.push_back(ds.site_labels[i]);
        if (ds.split) fields.push_back(part_name((*ds.split)[i]));
        out += csv::join_row(fields);
    }
    return out;
}

inline LabeledDataset dataset_from_csv(const std::string& text) {
    auto rows = csv::parse(text);
    if (rows.empty()) raise(Errc::EmptyFile, "dataset CSV has no header");
    const auto& header = rows[0];
    bool has_split = !header.empty() && header.back() == "split";
    size_t label_cols = has_split ? 3u : 2u;
    if (header.size() < label_cols + 1)
        raise(Errc::HeaderMismatch, "dataset CSV header too short");
    size_t arity = header.size() - label_cols;
    if (header[arity] != "binary_label" || header[arity + 1] != "site_label")
        raise(Errc::HeaderMismatch, "dataset CSV must end with binary_label,site_label[,split]");
    LabeledDataset ds;
    ds.feature_names.assign(header.begin(), header.begin() + static_cast<long>(arity));
    if (has_split) ds.split.emplace();
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != header.size())
            raise(Errc::HeaderMismatch, "dataset CSV row " + std::to_string(i) +
                                            " has " + std::to_string(r.size()) + " fields");
        std::vector<double> vals(arity, kMissing);
        for (size_t j = 0; j < arity; ++j) {
            if (r[j].empty()) continue;
            auto v = csv::parse_double(r[j]);
            if (!v) raise(Errc::HeaderMismatch, "dataset CSV row " + std::to_string(i) +
                                                    ": bad number '" + r[j] + "'");
            vals[j] = *v;
        }
        BinaryLabel b;
        if (r[arity] == kTargetedName) b = BinaryLabel::Targeted;
        else if (r[arity] == kUntargetedName) b = BinaryLabel::Untargeted;
        else raise(Errc::HeaderMismatch, "bad binary label '" + r[arity] + "'");
        std::string site = r[arity + 1];
        if ((b == BinaryLabel::Targeted) == site.empty())
            raise(Errc::HeaderMismatch, "site label must be present exactly for targeted rows");
        ds.append_row(std::move(vals), b, std::move(site));
        if (has_split) {
            const std::string& p = r[arity + 2];
            if (p == "train") ds.split->push_back(Part::Train);
            else if (p == "validation") ds.split->push_back(Part::Validation);
            else if (p == "test") ds.split->push_back(Part::Test);
            else raise(Errc::HeaderMismatch, "bad split value '" + p + "'");
        }
    }
    return ds;
}

// --- external CSV import ------------------------------------------------------------

struct ColumnSpec {
    enum class Kind : uint8_t { Numeric, OneHot, Ignore };
    std::string internal_name;
    Kind kind = Kind::Numeric;
};

constexpr size_t kOneHotCap = 32;

// Selects and renames the mapped column subset. Unparseable numeric cells
// become missing values; the row count is preserved.
inline LabeledDataset import_external_csv(const std::string& text,
                                          const std::map<std::string, ColumnSpec>& column_map,
                                          const std::string& label_column,
                                          const std::set<std::string>& untargeted_labels = {}) {
    auto rows = csv::parse(text);
    if (rows.empty()) raise(Errc::EmptyFile, "external CSV is empty");
    const auto& header = rows[0];
    if (rows.size() == 1) raise(Errc::EmptyFile, "external CSV has a header but no rows");

    auto find_col = [&](const std::string& name) -> size_t {
        for (size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        raise(Errc::HeaderMismatch, "column '" + name + "' not in external CSV header");
    };

    size_t label_idx = find_col(label_column);
    struct Mapped {
        size_t col;
        ColumnSpec spec;
        std::vector<std::string> categories; // one-hot only
    };
    std::vector<Mapped> mapped;
    for (size_t j = 0; j < header.size(); ++j) {
        auto it = column_map.find(header[j]);
        if (it == column_map.end() || it->second.kind == ColumnSpec::Kind::Ignore) continue;
        mapped.push_back({j, it->second, {}});
    }
    for (const auto& [external, spec] : column_map)
        if (spec.kind != ColumnSpec::Kind::Ignore) find_col(external);

    for (auto& m : mapped) {
        if (m.spec.kind != ColumnSpec::Kind::OneHot) continue;
        std::set<std::string> values;
        for (size_t i = 1; i < rows.size(); ++i) {
            if (m.col < rows[i].size()) values.insert(rows[i][m.col]);
            if (values.size() > kOneHotCap)
                throw std::invalid_argument("one-hot column '" + header[m.col] + "' exceeds " +
                                            std::to_string(kOneHotCap) + " distinct values");
        }
        m.categories.assign(values.begin(), values.end());
    }

    LabeledDataset ds;
    for (const auto& m : mapped) {
        if (m.spec.kind == ColumnSpec::Kind::Numeric) {
            ds.feature_names.push_back(m.spec.internal_name);
        } else {
            for (const auto& c : m.categories)
                ds.feature_names.push_back(m.spec.internal_name + "=" + c);
        }
    }

    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != header.size())
            raise(Errc::HeaderMismatch, "external CSV row " + std::to_string(i) + " has " +
                                            std::to_string(r.size()) + " fields, header has " +
                                            std::to_string(header.size()));
        std::vector<double> vals;
        vals.reserve(ds.arity());
        for (const auto& m : mapped) {
            if (m.spec.kind == ColumnSpec::Kind::Numeric) {
                auto v = csv::parse_double(r[m.col]);
                vals.push_back(v ? *v : kMissing);
            } else {
                for (const auto& c : m.categories) vals.push_back(r[m.col] == c ? 1.0 : 0.0);
            }
        }
        std::string site = r[label_idx];
        bool targeted = !site.empty() && !untargeted_labels.count(site);
        ds.append_row(std::move(vals), targeted ? BinaryLabel::Targeted : BinaryLabel::Untargeted,
                      targeted ? site : std::string());
    }
    return ds;
}

} // namespace wfp
