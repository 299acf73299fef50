// wfp - website-fingerprinting traffic analysis pipeline
//
// Subcommands chain through documented file formats: each stage reads and
// writes CSV/pcapng/JSON artifacts, so any stage can be rerun or replaced.
// Exit codes: 0 ok, 1 I/O failure, 2 validation or parse failure, 3
// internal invariant breach.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "wfp/capture.hpp"
#include "wfp/dataset.hpp"
#include "wfp/evaluation.hpp"
#include "wfp/features.hpp"
#include "wfp/flow.hpp"
#include "wfp/learners/model.hpp"
#include "wfp/packet.hpp"
#include "wfp/synth.hpp"

namespace {

using namespace wfp;

// Every run logs its fully resolved configuration, defaults included.
void log_config(const CLI::App* cmd) {
    std::cerr << "[config] command=" << cmd->get_name() << "\n";
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->get_name() == "--help") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) {
                if (!value.empty()) value += ",";
                value += r;
            }
        } else {
            value = opt->get_default_str();
            if (value.empty() && opt->get_expected_min() == 0)
                value = "false"; // unset flag
        }
        std::cerr << "[config] " << opt->get_name() << "=" << value << "\n";
    }
}

Task parse_task(const std::string& s) {
    if (s == "binary") return Task::Binary;
    if (s == "multiclass") return Task::Multiclass;
    throw CLI::ValidationError("--task", "expected binary or multiclass");
}

ScalerKind parse_scaler(const std::string& s) {
    if (s == "zscore") return ScalerKind::ZScore;
    if (s == "minmax") return ScalerKind::MinMax;
    if (s == "none") return ScalerKind::None;
    throw CLI::ValidationError("--scaler", "expected zscore, minmax, or none");
}

SplitRatios parse_ratios(const std::string& s) {
    SplitRatios r;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &r.train, &r.validation, &r.test) != 3)
        throw CLI::ValidationError("--ratios", "expected train,validation,test");
    return r;
}

HyperGrid load_grid_file(const std::string& path) {
    HyperGrid grid;
    std::string text = read_file_text(path);
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("grid line '" + line + "': expected name=v1,v2,...");
        std::string name = line.substr(0, eq);
        std::vector<double> values;
        auto cells = csv::parse(line.substr(eq + 1) + "\n");
        for (const auto& cell : cells[0]) {
            auto v = csv::parse_double(cell);
            if (!v) throw std::invalid_argument("grid value '" + cell + "' is not a number");
            values.push_back(*v);
        }
        grid[name] = values;
    }
    if (grid.empty()) throw std::invalid_argument("grid file has no axes");
    return grid;
}

std::vector<std::pair<std::string, double>> parse_hyper_args(const std::vector<std::string>& args) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& a : args) {
        auto eq = a.find('=');
        auto v = eq == std::string::npos ? std::nullopt : csv::parse_double(a.substr(eq + 1));
        if (!v) throw std::invalid_argument("--hyper expects name=value, got '" + a + "'");
        out.emplace_back(a.substr(0, eq), *v);
    }
    return out;
}

LabeledDataset load_dataset(const std::string& path) { return dataset_from_csv(read_file_text(path)); }

LabeledDataset training_part(const LabeledDataset& ds) {
    return ds.split ? ds.subset(ds.part_indices(Part::Train)) : ds;
}

// --- subcommand bodies -------------------------------------------------------

struct IngestArgs {
    std::string capture_path;
    std::string out;
    double idle_timeout = 120.0;
    double active_timeout = 3600.0;
    bool no_tcp_close = false;
};

int cmd_ingest(const IngestArgs& a) {
    auto reader = CaptureReader::open(a.capture_path);
    IngestCounters counters;
    auto packets = ingest_packets(reader, &counters);
    AssembleConfig cfg{a.idle_timeout, a.active_timeout, !a.no_tcp_close};
    auto result = assemble(packets, cfg);
    write_file_text(a.out, flows_to_csv(result.flows));
    auto stats = flow_stats(result.flows);
    std::cout << format_stats_table(stats);
    std::cout << "decoded " << counters.decoded << ", skipped " << counters.skipped
              << ", malformed " << counters.malformed << ", non-tcp/udp dropped "
              << result.dropped_packets << "\n";
    return 0;
}

int cmd_featurize(const std::string& flows_path, const std::string& out) {
    auto flows = flows_from_csv(read_file_text(flows_path));
    LabeledDataset ds;
    ds.feature_names = feature_names();
    for (const Flow& f : flows) {
        auto v = featurize(f).values();
        ds.append_row(std::vector<double>(v.begin(), v.end()), BinaryLabel::Untargeted, "");
    }
    write_file_text(out, dataset_to_csv(ds));
    std::cout << "featurized " << ds.size() << " flows\n";
    return 0;
}

int cmd_label(const std::string& flows_path, const std::string& features_path,
              const std::string& list_path, const std::string& out) {
    auto flows = flows_from_csv(read_file_text(flows_path));
    auto features_ds = dataset_from_csv(read_file_text(features_path));
    if (features_ds.size() != flows.size())
        throw std::invalid_argument("flows and features row counts differ");
    std::vector<FeatureVector> feats(flows.size());
    auto list = MonitoredList::parse(read_file_text(list_path));
    auto labeled = label(flows, feats, list);
    labeled.rows = features_ds.rows; // keep the exact feature values from the CSV
    labeled.feature_names = features_ds.feature_names;
    write_file_text(out, dataset_to_csv(labeled));
    size_t targeted = 0;
    for (auto b : labeled.binary_labels)
        if (b == BinaryLabel::Targeted) ++targeted;
    std::cout << "labeled " << labeled.size() << " rows, " << targeted << " targeted, "
              << labeled.size() - targeted << " untargeted\n";
    return 0;
}

int cmd_split(const std::string& in, const std::string& out, const std::string& ratios,
              const std::string& stratify, uint64_t seed) {
    auto ds = load_dataset(in);
    StratifyOn on = stratify == "site" ? StratifyOn::Site : StratifyOn::Binary;
    if (stratify != "site" && stratify != "binary")
        throw CLI::ValidationError("--stratify", "expected binary or site");
    auto split = split_dataset(ds, parse_ratios(ratios), on, seed);
    write_file_text(out, dataset_to_csv(split));
    std::cout << "split " << split.size() << " rows: train "
              << split.part_indices(Part::Train).size() << ", validation "
              << split.part_indices(Part::Validation).size() << ", test "
              << split.part_indices(Part::Test).size() << "\n";
    return 0;
}

int cmd_train(const std::string& in, const std::string& model_name, const std::string& task_name,
              uint64_t seed, const std::vector<std::string>& hyper_args,
              const std::string& scaler_name, const std::string& out) {
    auto ds = load_dataset(in);
    ClassifierSpec spec;
    spec.kind = classifier_from_name(model_name);
    spec.seed = seed;
    for (const auto& [name, value] : parse_hyper_args(hyper_args))
        spec.hyperparameters[name] = value;
    auto model = fit(spec, training_part(ds), parse_task(task_name), parse_scaler(scaler_name));
    write_file_text(out, save_model(model));
    std::cout << "trained " << model_name << " on " << training_part(ds).size() << " rows, "
              << model.classes.size() << " classes\n";
    return 0;
}

int cmd_tune(const std::string& in, const std::string& model_name, const std::string& task_name,
             uint64_t seed, const std::string& grid_path, size_t folds,
             const std::string& scaler_name, const std::string& out,
             const std::string& results_path) {
    auto ds = load_dataset(in);
    ClassifierKind kind = classifier_from_name(model_name);
    HyperGrid grid = grid_path.empty() ? default_grid(kind) : load_grid_file(grid_path);
    if (grid.empty()) throw std::invalid_argument(model_name + " has no tunable hyperparameters");
    Task task = parse_task(task_name);
    auto gs = grid_search(kind, grid, training_part(ds), folds, task, seed, kDefaultGridCap,
                          parse_scaler(scaler_name));
    write_file_text(out, save_model(gs.best_model));
    if (!results_path.empty()) write_file_text(results_path, grid_results_to_csv(gs));
    std::cout << "tuned " << model_name << " over " << gs.table.size() << " combinations; best:";
    for (const auto& [name, value] : gs.best_spec.hyperparameters)
        std::cout << " " << name << "=" << csv::format_double(value);
    std::cout << "\n";
    return 0;
}

int cmd_evaluate(const std::string& in, const std::string& task_name, uint64_t seed, size_t folds,
                 const std::string& averaging_name, const std::string& positive_class,
                 const std::string& grid_path, const std::string& out) {
    auto ds = load_dataset(in);
    SuiteOptions opt;
    opt.task = parse_task(task_name);
    opt.seed = seed;
    opt.cv_folds = folds;
    opt.positive_class = positive_class;
    if (averaging_name == "macro") opt.multiclass_averaging = Averaging::Macro;
    else if (averaging_name != "weighted")
        throw CLI::ValidationError("--averaging", "expected weighted or macro");
    if (!grid_path.empty()) {
        HyperGrid shared = load_grid_file(grid_path);
        for (ClassifierKind kind : opt.roster) {
            HyperGrid filtered;
            for (const auto& [name, values] : shared) {
                for (const auto& schema : hyper_schema(kind)) {
                    if (name != schema.name) continue;
                    std::vector<double> in_range;
                    for (double v : values)
                        if (v >= schema.lo && v <= schema.hi) in_range.push_back(v);
                    if (!in_range.empty()) filtered[name] = in_range;
                }
            }
            opt.grids[kind] = filtered;
        }
    }
    auto rows = evaluate_suite(ds, opt);
    std::cout << format_report_table(rows);
    if (!out.empty()) write_file_text(out, report_to_csv(rows));
    return 0;
}

int cmd_synth_capture(size_t targeted, size_t untargeted, size_t visits, uint64_t seed,
                      const std::string& out_dir, const std::string& format_name,
                      const std::string& order_name) {
    SynthCaptureOptions opt;
    if (format_name == "pcapng") opt.format = CaptureFormat::Pcapng;
    else if (format_name == "pcap_us") opt.format = CaptureFormat::PcapMicro;
    else if (format_name == "pcap_ns") opt.format = CaptureFormat::PcapNano;
    else throw CLI::ValidationError("--format", "expected pcapng, pcap_us, or pcap_ns");
    if (order_name == "big") opt.byte_order = ByteOrder::Big;
    else if (order_name != "little")
        throw CLI::ValidationError("--byte-order", "expected little or big");
    auto profiles = default_profiles(targeted, untargeted, seed);
    auto synth = generate_capture(profiles, visits, seed, opt);
    std::filesystem::create_directories(out_dir);
    std::string ext = opt.format == CaptureFormat::Pcapng ? "pcapng" : "pcap";
    write_file_bytes(out_dir + "/capture." + ext, synth.capture_bytes);
    write_file_text(out_dir + "/monitored.txt", synth.monitored_list_text);
    write_file_text(out_dir + "/truth.csv", synth.truth_csv);
    std::cout << "generated " << synth.packet_count << " packets in " << synth.flow_count
              << " flows across " << targeted + untargeted << " sites\n";
    return 0;
}

int cmd_synth_dataset(size_t targeted, size_t untargeted, size_t rows_per_class,
                      double separability, double imbalance, uint64_t seed,
                      const std::string& out) {
    auto profiles = default_profiles(targeted, untargeted, seed);
    std::optional<double> fraction;
    if (imbalance >= 0.0) fraction = imbalance;
    auto ds = generate_dataset(profiles, rows_per_class, separability, fraction, seed);
    write_file_text(out, dataset_to_csv(ds));
    std::cout << "generated " << ds.size() << " rows, " << ds.arity() << " features\n";
    return 0;
}

int cmd_import(const std::string& in, const std::string& map_path, const std::string& label_column,
               const std::vector<std::string>& untargeted_labels, const std::string& out) {
    std::map<std::string, ColumnSpec> column_map;
    std::string text = read_file_text(map_path);
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        start = end + 1;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        auto rows = csv::parse(line + "\n");
        if (rows[0].size() < 2)
            throw std::invalid_argument("map line '" + line + "': expected external,internal[,onehot]");
        ColumnSpec spec;
        spec.internal_name = rows[0][1];
        spec.kind = ColumnSpec::Kind::Numeric;
        if (rows[0].size() > 2 && rows[0][2] == "onehot") spec.kind = ColumnSpec::Kind::OneHot;
        if (rows[0][1] == "IGNORE") spec.kind = ColumnSpec::Kind::Ignore;
        column_map[rows[0][0]] = spec;
    }
    std::set<std::string> untargeted(untargeted_labels.begin(), untargeted_labels.end());
    auto ds = import_external_csv(read_file_text(in), column_map, label_column, untargeted);
    write_file_text(out, dataset_to_csv(ds));
    std::cout << "imported " << ds.size() << " rows, " << ds.arity() << " features\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"website-fingerprinting traffic analysis toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "configuration file (INI; flags take precedence)");

    // ingest
    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "parse a capture into a flow CSV");
    c_ingest->add_option("--capture", ingest.capture_path, "capture file (pcapng or pcap)")
        ->required();
    c_ingest->add_option("--out", ingest.out, "flow CSV output")->required();
    c_ingest->add_option("--idle-timeout", ingest.idle_timeout, "idle timeout, seconds")
        ->capture_default_str();
    c_ingest->add_option("--active-timeout", ingest.active_timeout, "active timeout, seconds")
        ->capture_default_str();
    c_ingest->add_flag("--no-tcp-close", ingest.no_tcp_close, "ignore FIN/RST flow closure");

    // featurize
    std::string fz_flows, fz_out;
    auto* c_featurize = app.add_subcommand("featurize", "compute features from a flow CSV");
    c_featurize->add_option("--flows", fz_flows, "flow CSV input")->required();
    c_featurize->add_option("--out", fz_out, "dataset CSV output")->required();

    // label
    std::string lb_flows, lb_features, lb_list, lb_out;
    auto* c_label = app.add_subcommand("label", "tag rows against a monitored list");
    c_label->add_option("--flows", lb_flows, "flow CSV input")->required();
    c_label->add_option("--features", lb_features, "dataset CSV from featurize")->required();
    c_label->add_option("--list", lb_list, "monitored list file (label,matcher lines)")->required();
    c_label->add_option("--out", lb_out, "labeled dataset CSV output")->required();

    // split
    std::string sp_in, sp_out, sp_ratios = "0.7,0.15,0.15", sp_stratify = "binary";
    uint64_t sp_seed = 0;
    auto* c_split = app.add_subcommand("split", "assign train/validation/test partitions");
    c_split->add_option("--in", sp_in, "labeled dataset CSV")->required();
    c_split->add_option("--out", sp_out, "dataset CSV with split column")->required();
    c_split->add_option("--ratios", sp_ratios, "train,validation,test")->capture_default_str();
    c_split->add_option("--stratify", sp_stratify, "binary or site")->capture_default_str();
    c_split->add_option("--seed", sp_seed, "random seed")->required();

    // train
    std::string tr_in, tr_model, tr_task = "binary", tr_scaler = "zscore", tr_out;
    std::vector<std::string> tr_hyper;
    uint64_t tr_seed = 0;
    auto* c_train = app.add_subcommand("train", "fit one classifier");
    c_train->add_option("--in", tr_in, "dataset CSV (train partition used if split)")->required();
    c_train->add_option("--model", tr_model, "DT, RF, GBM, AdaB, SVM, NB, or KNN")->required();
    c_train->add_option("--task", tr_task, "binary or multiclass")->capture_default_str();
    c_train->add_option("--seed", tr_seed, "random seed")->required();
    c_train->add_option("--hyper", tr_hyper, "hyperparameter name=value (repeatable)");
    c_train->add_option("--scaler", tr_scaler, "zscore, minmax, or none")->capture_default_str();
    c_train->add_option("--out", tr_out, "model document output")->required();

    // tune
    std::string tu_in, tu_model, tu_task = "binary", tu_grid, tu_scaler = "zscore", tu_out,
                tu_results;
    uint64_t tu_seed = 0;
    size_t tu_folds = 5;
    auto* c_tune = app.add_subcommand("tune", "cross-validated grid search");
    c_tune->add_option("--in", tu_in, "dataset CSV (train partition used if split)")->required();
    c_tune->add_option("--model", tu_model, "classifier kind")->required();
    c_tune->add_option("--task", tu_task, "binary or multiclass")->capture_default_str();
    c_tune->add_option("--seed", tu_seed, "random seed")->required();
    c_tune->add_option("--grid", tu_grid, "grid file (name=v1,v2 lines); default grid otherwise");
    c_tune->add_option("--folds", tu_folds, "cross-validation folds")->capture_default_str();
    c_tune->add_option("--scaler", tu_scaler, "zscore, minmax, or none")->capture_default_str();
    c_tune->add_option("--out", tu_out, "best model output")->required();
    c_tune->add_option("--results", tu_results, "per-combination results CSV");

    // evaluate
    std::string ev_in, ev_task = "binary", ev_averaging = "weighted",
                ev_positive = kTargetedName, ev_grid, ev_out;
    uint64_t ev_seed = 0;
    size_t ev_folds = 5;
    auto* c_evaluate = app.add_subcommand("evaluate", "tune and compare all seven models");
    c_evaluate->add_option("--in", ev_in, "dataset CSV with split column")->required();
    c_evaluate->add_option("--task", ev_task, "binary or multiclass")->capture_default_str();
    c_evaluate->add_option("--seed", ev_seed, "random seed")->required();
    c_evaluate->add_option("--folds", ev_folds, "cross-validation folds")->capture_default_str();
    c_evaluate->add_option("--averaging", ev_averaging, "weighted or macro (multiclass)")
        ->capture_default_str();
    c_evaluate->add_option("--positive-class", ev_positive, "positive class (binary)")
        ->capture_default_str();
    c_evaluate->add_option("--grid", ev_grid, "shared grid file; axes filtered per model");
    c_evaluate->add_option("--out", ev_out, "report CSV output");

    // synth
    auto* c_synth = app.add_subcommand("synth", "generate synthetic traffic");
    c_synth->require_subcommand(1);
    size_t sc_targeted = 3, sc_untargeted = 2, sc_visits = 5;
    uint64_t sc_seed = 0;
    std::string sc_dir, sc_format = "pcapng", sc_order = "little";
    auto* c_synth_cap = c_synth->add_subcommand("capture", "pcapng/pcap with ground truth");
    c_synth_cap->add_option("--targeted", sc_targeted, "monitored site count")->capture_default_str();
    c_synth_cap->add_option("--untargeted", sc_untargeted, "background site count")
        ->capture_default_str();
    c_synth_cap->add_option("--visits", sc_visits, "visits per site")->capture_default_str();
    c_synth_cap->add_option("--seed", sc_seed, "random seed")->required();
    c_synth_cap->add_option("--out-dir", sc_dir, "output directory")->required();
    c_synth_cap->add_option("--format", sc_format, "pcapng, pcap_us, or pcap_ns")
        ->capture_default_str();
    c_synth_cap->add_option("--byte-order", sc_order, "little or big")->capture_default_str();

    size_t sd_classes = 5, sd_untargeted = 0, sd_rows = 200;
    double sd_sep = 3.0, sd_imbalance = -1.0;
    uint64_t sd_seed = 0;
    std::string sd_out;
    auto* c_synth_ds = c_synth->add_subcommand("dataset", "labeled feature rows");
    c_synth_ds->add_option("--classes", sd_classes, "targeted class count")->capture_default_str();
    c_synth_ds->add_option("--untargeted", sd_untargeted, "untargeted profile count")
        ->capture_default_str();
    c_synth_ds->add_option("--rows-per-class", sd_rows, "rows per class")->capture_default_str();
    c_synth_ds->add_option("--separability", sd_sep, "class separation, 0 = none")
        ->capture_default_str();
    c_synth_ds->add_option("--imbalance", sd_imbalance,
                           "targeted fraction (requires untargeted profiles)");
    c_synth_ds->add_option("--seed", sd_seed, "random seed")->required();
    c_synth_ds->add_option("--out", sd_out, "dataset CSV output")->required();

    // import
    std::string im_in, im_map, im_label, im_out;
    std::vector<std::string> im_untargeted;
    auto* c_import = app.add_subcommand("import", "map an external flow CSV into the schema");
    c_import->add_option("--in", im_in, "external CSV")->required();
    c_import->add_option("--map", im_map, "column map file (external,internal[,onehot] lines)")
        ->required();
    c_import->add_option("--label-column", im_label, "external label column")->required();
    c_import->add_option("--untargeted-labels", im_untargeted,
                         "label values to treat as untargeted (repeatable)");
    c_import->add_option("--out", im_out, "dataset CSV output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    try {
        for (CLI::App* sub : app.get_subcommands()) log_config(sub);
        if (c_ingest->parsed()) return cmd_ingest(ingest);
        if (c_featurize->parsed()) return cmd_featurize(fz_flows, fz_out);
        if (c_label->parsed()) return cmd_label(lb_flows, lb_features, lb_list, lb_out);
        if (c_split->parsed()) return cmd_split(sp_in, sp_out, sp_ratios, sp_stratify, sp_seed);
        if (c_train->parsed())
            return cmd_train(tr_in, tr_model, tr_task, tr_seed, tr_hyper, tr_scaler, tr_out);
        if (c_tune->parsed())
            return cmd_tune(tu_in, tu_model, tu_task, tu_seed, tu_grid, tu_folds, tu_scaler,
                            tu_out, tu_results);
        if (c_evaluate->parsed())
            return cmd_evaluate(ev_in, ev_task, ev_seed, ev_folds, ev_averaging, ev_positive,
                                ev_grid, ev_out);
        if (c_synth->parsed()) {
            for (CLI::App* sub : c_synth->get_subcommands()) log_config(sub);
            if (c_synth_cap->parsed())
                return cmd_synth_capture(sc_targeted, sc_untargeted, sc_visits, sc_seed, sc_dir,
                                         sc_format, sc_order);
            if (c_synth_ds->parsed())
                return cmd_synth_dataset(sd_classes, sd_untargeted, sd_rows, sd_sep, sd_imbalance,
                                         sd_seed, sd_out);
        }
        if (c_import->parsed()) return cmd_import(im_in, im_map, im_label, im_untargeted, im_out);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const wfp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
