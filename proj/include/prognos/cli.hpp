// Command-line surface:
//   ingest    parse + normalize a subset, report counts and stats
//   train     fit the network on a subset, write model.json (+ report CSV)
//   predict   per-cycle predictive distribution for one test unit (CSV)
//   evaluate  threshold metrics over the test fleet (JSON)
//   compare   BRNN vs deterministic baseline (JSON + plot CSVs)
//   stream    line-in/record-out inference over stdin/stdout
//
// --data-dir falls back to the RUL_DATA_DIR environment variable. Every
// subcommand exits nonzero with a one-line diagnostic on error.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prognos/cmapss.hpp"
#include "prognos/lstm.hpp"
#include "prognos/mc_dropout.hpp"
#include "prognos/metrics.hpp"
#include "prognos/model_io.hpp"
#include "prognos/streaming.hpp"
#include "prognos/training.hpp"

namespace prognos::cli {

namespace detail {

inline std::string data_file(const std::string& data_dir, const std::string& prefix,
                             const std::string& subset) {
    return (std::filesystem::path(data_dir) / (prefix + "_" + subset + ".txt")).string();
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

inline std::vector<EngineTrajectory> load_training_fleet(const std::string& data_dir,
                                                         const std::string& subset) {
    auto fleet = parse_trajectories(read_text_file(data_file(data_dir, "train", subset)));
    for (auto& traj : fleet) traj = attach_rul(std::move(traj), 0);
    return fleet;
}

inline std::vector<EngineTrajectory> load_test_fleet(const std::string& data_dir,
                                                     const std::string& subset) {
    auto fleet = parse_trajectories(read_text_file(data_file(data_dir, "test", subset)));
    const auto ruls = parse_rul_file(read_text_file(data_file(data_dir, "RUL", subset)));
    if (ruls.size() != fleet.size())
        throw std::runtime_error("RUL file has " + std::to_string(ruls.size()) +
                                 " entries but test set has " + std::to_string(fleet.size()) +
                                 " units");
    for (std::size_t i = 0; i < fleet.size(); ++i)
        fleet[i] = attach_rul(std::move(fleet[i]), ruls[i]);
    return fleet;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json lead = nlohmann::json::object();
    for (const auto& [unit, lt] : m.lead_time) {
        if (lt) lead[std::to_string(unit)] = *lt;
        else lead[std::to_string(unit)] = nullptr;
    }
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"false_alarm_rate", m.false_alarm_rate},
            {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}}},
            {"evaluated_cycles", m.total()},
            {"lead_time", lead}};
}

struct SharedOpts {
    std::string data_dir;
    std::string subset = "FD001";
};

inline void add_data_options(CLI::App* cmd, SharedOpts& opts) {
    const char* env = std::getenv("RUL_DATA_DIR");
    opts.data_dir = env ? env : "";
    cmd->add_option("--data-dir", opts.data_dir, "directory with train/test/RUL files")
        ->default_str(opts.data_dir.empty() ? "$RUL_DATA_DIR" : opts.data_dir);
    cmd->add_option("--subset", opts.subset, "dataset subset")
        ->check(CLI::IsMember({"FD001", "FD002", "FD003", "FD004"}));
}

inline void require_data_dir(const SharedOpts& opts) {
    if (opts.data_dir.empty())
        throw std::runtime_error("no data directory: pass --data-dir or set RUL_DATA_DIR");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"probabilistic failure-window prediction for turbofan telemetry"};
    app.require_subcommand(1);

    // ---- ingest ----
    detail::SharedOpts ingest_opts;
    bool ingest_regime = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "parse and normalize a subset, print counts");
    detail::add_data_options(ingest_cmd, ingest_opts);
    ingest_cmd->add_flag("--regime-normalize", ingest_regime, "per-regime z-score stats");

    // ---- train ----
    detail::SharedOpts train_opts;
    TrainConfig train_cfg;
    std::string train_out = "model.json";
    std::string train_report_path;
    bool train_regime = false;
    auto* train_cmd = app.add_subcommand("train", "train the network, write a model file");
    detail::add_data_options(train_cmd, train_opts);
    train_cmd->add_option("--out", train_out, "model file path");
    train_cmd->add_option("--report", train_report_path, "write per-epoch loss CSV here");
    train_cmd->add_option("--horizon", train_cfg.horizon, "warning window in cycles")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--window", train_cfg.window_length, "sequence length")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--hidden1", train_cfg.dims.hidden1, "first LSTM layer size")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--hidden2", train_cfg.dims.hidden2, "second LSTM layer size")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", train_cfg.seed, "RNG seed");
    train_cmd->add_option("--epochs", train_cfg.max_epochs, "maximum epochs")
        ->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--batch-size", train_cfg.batch_size, "mini-batch size")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", train_cfg.learning_rate, "Adam learning rate");
    train_cmd->add_option("--patience", train_cfg.patience, "early-stopping patience")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--val-fraction", train_cfg.validation_fraction,
                          "validation unit fraction");
    train_cmd->add_flag("--regime-normalize", train_regime, "per-regime z-score stats");

    // ---- predict ----
    detail::SharedOpts predict_opts;
    std::string predict_model;
    int predict_unit = 0;
    int predict_samples = 100;
    std::uint64_t predict_seed = 0;
    std::string predict_out;
    auto* predict_cmd = app.add_subcommand("predict", "forecast one test unit, print CSV");
    detail::add_data_options(predict_cmd, predict_opts);
    predict_cmd->add_option("--model", predict_model, "model file")->required();
    predict_cmd->add_option("--unit", predict_unit, "test unit id")->required()
        ->check(CLI::PositiveNumber);
    predict_cmd->add_option("--samples", predict_samples, "MC sample count")
        ->check(CLI::PositiveNumber);
    predict_cmd->add_option("--seed", predict_seed, "MC mask seed");
    predict_cmd->add_option("--out", predict_out, "write CSV here instead of stdout");

    // ---- evaluate ----
    detail::SharedOpts eval_opts;
    std::string eval_model;
    int eval_samples = 100;
    std::uint64_t eval_seed = 0;
    double eval_threshold = 0.5;
    int eval_sustain = 3;
    auto* eval_cmd = app.add_subcommand("evaluate", "metrics over the test fleet, print JSON");
    detail::add_data_options(eval_cmd, eval_opts);
    eval_cmd->add_option("--model", eval_model, "model file")->required();
    eval_cmd->add_option("--samples", eval_samples, "MC sample count")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--seed", eval_seed, "MC mask seed");
    eval_cmd->add_option("--threshold", eval_threshold, "decision threshold on the median");
    eval_cmd->add_option("--sustain", eval_sustain, "consecutive cycles for a crossing")
        ->check(CLI::PositiveNumber);

    // ---- compare ----
    detail::SharedOpts cmp_opts;
    std::string cmp_model;
    int cmp_samples = 100;
    std::uint64_t cmp_seed = 0;
    double cmp_threshold = 0.5;
    int cmp_sustain = 3;
    std::string cmp_out_dir = ".";
    auto* cmp_cmd =
        app.add_subcommand("compare", "BRNN vs deterministic baseline, JSON + plot CSVs");
    detail::add_data_options(cmp_cmd, cmp_opts);
    cmp_cmd->add_option("--model", cmp_model, "model file")->required();
    cmp_cmd->add_option("--samples", cmp_samples, "MC sample count")->check(CLI::PositiveNumber);
    cmp_cmd->add_option("--seed", cmp_seed, "MC mask seed");
    cmp_cmd->add_option("--threshold", cmp_threshold, "decision threshold on the median");
    cmp_cmd->add_option("--sustain", cmp_sustain, "consecutive cycles for a crossing")
        ->check(CLI::PositiveNumber);
    cmp_cmd->add_option("--out-dir", cmp_out_dir, "directory for plot CSV files");

    // ---- stream ----
    std::string stream_model;
    int stream_samples = 100;
    std::uint64_t stream_seed = 0;
    auto* stream_cmd = app.add_subcommand("stream", "stdin telemetry -> stdout JSON records");
    stream_cmd->add_option("--model", stream_model, "model file")->required();
    stream_cmd->add_option("--samples", stream_samples, "MC sample count")
        ->check(CLI::PositiveNumber);
    stream_cmd->add_option("--seed", stream_seed, "MC mask seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (ingest_cmd->parsed()) {
            detail::require_data_dir(ingest_opts);
            auto fleet = detail::load_training_fleet(ingest_opts.data_dir, ingest_opts.subset);
            const NormStats stats = fit_normalization(fleet, ingest_regime);
            auto normalized = apply_normalization(fleet, stats);
            const LabelScheme scheme;
            const auto windows = make_windows(normalized, scheme);
            std::size_t rows = 0;
            long positive = 0;
            for (const auto& t : fleet) rows += t.size();
            for (const auto& w : windows) positive += w.label;
            nlohmann::json out = {
                {"subset", ingest_opts.subset},
                {"units", fleet.size()},
                {"rows", rows},
                {"windows", windows.size()},
                {"positive_windows", positive},
                {"regime_normalize", ingest_regime},
                {"regime_count", stats.per_regime ? stats.regimes.size() : 0},
                {"feature_mean", stats.mean},
                {"feature_stddev", stats.stddev},
            };
            std::cout << out.dump(2) << '\n';
        } else if (train_cmd->parsed()) {
            detail::require_data_dir(train_opts);
            auto fleet = detail::load_training_fleet(train_opts.data_dir, train_opts.subset);
            const NormStats stats = fit_normalization(fleet, train_regime);
            auto normalized = apply_normalization(std::move(fleet), stats);
            LabelScheme scheme;
            scheme.horizon = train_cfg.horizon;
            const auto windows = make_windows(normalized, scheme, train_cfg.window_length);
            auto [params, report] = train(train_cfg, windows);
            save_model(ModelFile{std::move(params), train_cfg, stats}, train_out);
            if (!train_report_path.empty()) write_report_csv(report, train_report_path);
            nlohmann::json out = {
                {"model", train_out},
                {"windows", windows.size()},
                {"epochs_run", report.epochs.size()},
                {"best_epoch", report.best_epoch + 1},
                {"stop_reason", report.stop_reason},
            };
            if (!report.epochs.empty()) {
                out["best_val_loss"] =
                    report.epochs[static_cast<std::size_t>(report.best_epoch)].val_loss;
            }
            std::cout << out.dump(2) << '\n';
        } else if (predict_cmd->parsed()) {
            detail::require_data_dir(predict_opts);
            const ModelFile model = load_model(predict_model);
            auto fleet = detail::load_test_fleet(predict_opts.data_dir, predict_opts.subset);
            auto normalized = apply_normalization(std::move(fleet), model.stats);
            const EngineTrajectory* traj = nullptr;
            for (const auto& t : normalized)
                if (t.unit_id == predict_unit) traj = &t;
            if (!traj)
                throw std::runtime_error("unit " + std::to_string(predict_unit) + " not in " +
                                         predict_opts.subset + " test set");
            LabelScheme scheme;
            scheme.horizon = model.config.horizon;
            const EngineForecast fc =
                forecast_engine(model.params, model.config.dropout, *traj, scheme, predict_samples,
                                predict_seed, model.config.window_length);
            const std::string csv = plot_csv({fc});
            if (predict_out.empty()) std::cout << csv;
            else prognos::detail::write_file(predict_out, csv);
        } else if (eval_cmd->parsed()) {
            detail::require_data_dir(eval_opts);
            const ModelFile model = load_model(eval_model);
            auto fleet = detail::load_test_fleet(eval_opts.data_dir, eval_opts.subset);
            auto normalized = apply_normalization(std::move(fleet), model.stats);
            LabelScheme scheme;
            scheme.horizon = model.config.horizon;
            std::vector<EngineForecast> forecasts;
            std::vector<int> skipped;
            for (const auto& traj : normalized) {
                if (static_cast<int>(traj.size()) < model.config.window_length) {
                    skipped.push_back(traj.unit_id);
                    continue;
                }
                forecasts.push_back(forecast_engine(model.params, model.config.dropout, traj,
                                                    scheme, eval_samples, eval_seed,
                                                    model.config.window_length));
            }
            if (forecasts.empty()) throw std::runtime_error("no test unit is long enough to score");
            nlohmann::json out = detail::metrics_to_json(
                classify_metrics(forecasts, eval_threshold, eval_sustain));
            out["threshold"] = eval_threshold;
            out["samples"] = eval_samples;
            out["engines_evaluated"] = forecasts.size();
            out["engines_skipped_short"] = skipped;
            std::cout << out.dump(2) << '\n';
        } else if (cmp_cmd->parsed()) {
            detail::require_data_dir(cmp_opts);
            const ModelFile model = load_model(cmp_model);
            auto fleet = detail::load_test_fleet(cmp_opts.data_dir, cmp_opts.subset);
            auto normalized = apply_normalization(std::move(fleet), model.stats);
            LabelScheme scheme;
            scheme.horizon = model.config.horizon;
            // early-crossing semantics need the window entry inside the
            // record, so engines that never reach the warning window are
            // left out (and reported)
            std::vector<EngineForecast> brnn_fcs, base_fcs;
            std::vector<int> skipped;
            for (const auto& traj : normalized) {
                const bool long_enough =
                    static_cast<int>(traj.size()) >= model.config.window_length;
                if (!long_enough || !prognos::detail::find_window_entry(traj, scheme.horizon)) {
                    skipped.push_back(traj.unit_id);
                    continue;
                }
                brnn_fcs.push_back(forecast_engine(model.params, model.config.dropout, traj,
                                                   scheme, cmp_samples, cmp_seed,
                                                   model.config.window_length));
                base_fcs.push_back(baseline_forecast_engine(model.params, traj, scheme,
                                                            model.config.window_length));
            }
            if (brnn_fcs.empty())
                throw std::runtime_error("no test engine enters the warning window in-record");
            const ComparisonReport report = compare(brnn_fcs, base_fcs, cmp_threshold, cmp_sustain);
            const std::filesystem::path dir(cmp_out_dir);
            std::filesystem::create_directories(dir);
            const std::string single_path = (dir / "plot_single_engine.csv").string();
            const std::string aligned_path = (dir / "plot_aligned_fleet.csv").string();
            const std::string baseline_path = (dir / "plot_baseline_engine.csv").string();
            export_plot_data(std::vector<EngineForecast>{brnn_fcs.front()}, single_path);
            export_plot_data(align_to_warning_window(brnn_fcs), aligned_path);
            export_plot_data(std::vector<EngineForecast>{base_fcs.front()}, baseline_path);
            nlohmann::json out = {
                {"brnn", detail::metrics_to_json(report.brnn)},
                {"baseline", detail::metrics_to_json(report.baseline)},
                {"brnn_early_crossings", report.brnn_early_count},
                {"baseline_early_crossings", report.baseline_early_count},
                {"engines_compared", brnn_fcs.size()},
                {"engines_excluded", skipped},
                {"plots", {single_path, aligned_path, baseline_path}},
            };
            std::cout << out.dump(2) << '\n';
        } else if (stream_cmd->parsed()) {
            const ModelFile model = load_model(stream_model);
            stream_predict(model, std::cin, std::cout, stream_samples, stream_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace prognos::cli
