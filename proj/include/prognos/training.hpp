// Mini-batch Adam training with a unit-level validation split and early
// stopping. Training draws a fresh MaskSet per sequence per epoch;
// validation always runs the deterministic all-ones pass. The whole loop is
// sequential and consumes one splitmix64 stream in a fixed order, so a
// (config, seed) pair reproduces the run exactly.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/cmapss.hpp"
#include "prognos/lstm.hpp"
#include "prognos/numeric.hpp"
#include "prognos/rng.hpp"

namespace prognos {

struct TrainConfig {
    int window_length = 50;
    int horizon = 30;  // warning window, cycles
    Dims dims{};       // input 24, hidden 100/50
    DropoutSpec dropout{};
    double validation_fraction = 0.10;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 10;  // epochs without validation improvement
    std::uint64_t seed = 0;
};

struct AdamState {
    NetworkParams m;
    NetworkParams v;
    long t = 0;

    AdamState() = default;
    explicit AdamState(const Dims& dims) : m(dims), v(dims) {}
};

// One Adam update. Throws if any gradient entry is non-finite.
inline void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state,
                      const TrainConfig& config) {
    if (!(params.dims == grads.dims) || !(params.dims == state.m.dims))
        throw std::invalid_argument("adam_step: shape mismatch");
    auto gv = param_views(grads);
    for (const auto& span : gv)
        for (double g : span)
            if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");

    state.t += 1;
    const double b1 = config.beta1, b2 = config.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    auto pv = param_views(params);
    auto mv = param_views(state.m);
    auto vv = param_views(state.v);
    for (std::size_t s = 0; s < pv.size(); ++s) {
        for (std::size_t k = 0; k < pv[s].size(); ++k) {
            const double g = gv[s][k];
            mv[s][k] = b1 * mv[s][k] + (1.0 - b1) * g;
            vv[s][k] = b2 * vv[s][k] + (1.0 - b2) * g * g;
            const double m_hat = mv[s][k] / bc1;
            const double v_hat = vv[s][k] / bc2;
            pv[s][k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
        }
    }
}

// Splits window samples by engine unit so no unit contributes to both
// sides. Validation receives round(fraction * units) units, at least one
// and at most units-1, chosen from a seeded shuffle of the unit ids.
inline std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_validation(
    const std::vector<WindowSample>& samples, double fraction, Rng& rng) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw std::invalid_argument("split_validation: fraction must be in (0,1)");
    std::vector<int> units;
    for (const auto& s : samples)
        if (units.empty() || std::find(units.begin(), units.end(), s.unit_id) == units.end())
            units.push_back(s.unit_id);
    std::sort(units.begin(), units.end());
    if (units.size() < 2)
        throw std::invalid_argument("split_validation: need at least 2 units to split");

    for (std::size_t i = units.size() - 1; i > 0; --i)
        std::swap(units[i], units[rng.next_below(i + 1)]);
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(units.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, units.size() - 1);
    std::vector<int> val_units(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(val_units.begin(), val_units.end());

    std::pair<std::vector<WindowSample>, std::vector<WindowSample>> out;
    for (const auto& s : samples) {
        const bool in_val = std::binary_search(val_units.begin(), val_units.end(), s.unit_id);
        (in_val ? out.second : out.first).push_back(s);
    }
    return out;
}

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // index into epochs, -1 when no epoch ran
    std::string stop_reason;
};

namespace detail {

inline Matrix window_matrix(const WindowSample& s, int window_length, std::size_t input_dim) {
    if (s.features.size() != static_cast<std::size_t>(window_length) * input_dim)
        throw std::invalid_argument("window sample feature size does not match window_length*input");
    Matrix m(static_cast<std::size_t>(window_length), input_dim);
    m.values = s.features;
    return m;
}

inline double mean_validation_loss(const NetworkParams& params, const TrainConfig& cfg,
                                   const std::vector<WindowSample>& val, ForwardCache& cache) {
    if (val.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : val) {
        const Matrix seq = window_matrix(s, cfg.window_length, cfg.dims.input);
        total += bce_loss(forward(params, seq, nullptr, cache), static_cast<double>(s.label));
    }
    return total / static_cast<double>(val.size());
}

}  // namespace detail

// Full training loop: seeded init, unit-level split, shuffled mini-batches,
// one fresh MaskSet per sequence per epoch, Adam steps, early stopping on
// validation loss with best-epoch weight restore.
inline std::pair<NetworkParams, TrainReport> train(const TrainConfig& config,
                                                   const std::vector<WindowSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("train: no samples");
    Rng rng(config.seed);
    NetworkParams params = init_params(rng, config.dims);
    TrainReport report;
    if (config.max_epochs == 0) {
        report.stop_reason = "max_epochs";
        return {std::move(params), std::move(report)};
    }

    auto [train_set, val_set] = split_validation(samples, config.validation_fraction, rng);

    AdamState state(config.dims);
    NetworkParams grads = zeros_like(params);
    ForwardCache cache;
    NetworkParams best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_improve = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[rng.next_below(i + 1)]);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            auto gv = param_views(grads);
            for (auto& span : gv) std::fill(span.begin(), span.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const WindowSample& s = train_set[order[k]];
                const Matrix seq = detail::window_matrix(s, config.window_length, config.dims.input);
                const MaskSet masks = sample_masks(rng, config.dropout, config.dims);
                const double p = forward(params, seq, &masks, cache);
                const double loss = bce_loss(p, static_cast<double>(s.label));
                if (!std::isfinite(loss))
                    throw std::runtime_error("train: non-finite loss at epoch " +
                                             std::to_string(epoch) + ", batch sample " +
                                             std::to_string(k));
                epoch_loss += loss;
                backward(cache, params, static_cast<double>(s.label), grads);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto& span : param_views(grads))
                for (double& g : span) g *= scale;
            adam_step(params, grads, state, config);
        }

        EpochStats stats;
        stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
        stats.val_loss = detail::mean_validation_loss(params, config, val_set, cache);
        report.epochs.push_back(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            best_params = params;
            report.best_epoch = epoch;
            since_improve = 0;
        } else {
            ++since_improve;
        }
        if (since_improve >= config.patience) {
            report.stop_reason = "early_stop";
            break;
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
    return {std::move(best_params), std::move(report)};
}

inline std::string report_to_csv(const TrainReport& report) {
    std::string out = "epoch,train_loss,val_loss\n";
    char buf[32];
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        out += std::to_string(e + 1);
        out += ',';
        auto [p1, ec1] = std::to_chars(buf, buf + sizeof(buf), report.epochs[e].train_loss);
        out.append(buf, p1);
        out += ',';
        auto [p2, ec2] = std::to_chars(buf, buf + sizeof(buf), report.epochs[e].val_loss);
        out.append(buf, p2);
        out += '\n';
    }
    return out;
}

inline void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report file: " + path);
    out << report_to_csv(report);
}

}  // namespace prognos
