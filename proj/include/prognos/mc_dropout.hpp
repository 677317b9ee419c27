// Monte Carlo dropout inference: S stochastic forward passes with
// independent tied-mask draws give a predictive distribution per cycle,
// summarized by the {10,25,50,75,90} percentiles. The deterministic
// baseline is the same network run once with all-ones masks.
//
// Mask draws for window end cycle c of unit u use the substream
// derive_seed(seed, unit, cycle, sample); batch and streaming inference
// share this rule, which makes their outputs bit-identical.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/cmapss.hpp"
#include "prognos/lstm.hpp"
#include "prognos/numeric.hpp"
#include "prognos/rng.hpp"

namespace prognos {

struct PredictiveDistribution {
    int cycle = 0;
    std::vector<double> samples;
    double p10 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p90 = 0.0;
};

inline PredictiveDistribution summarize(std::vector<double> samples, int cycle = 0) {
    if (samples.empty()) throw std::invalid_argument("summarize: no samples");
    PredictiveDistribution d;
    d.cycle = cycle;
    d.p10 = quantile(samples, 0.10);
    d.p25 = quantile(samples, 0.25);
    d.p50 = quantile(samples, 0.50);
    d.p75 = quantile(samples, 0.75);
    d.p90 = quantile(samples, 0.90);
    d.samples = std::move(samples);
    return d;
}

// S stochastic passes with masks drawn sequentially from rng.
inline std::vector<double> mc_predict(const NetworkParams& params, const DropoutSpec& spec,
                                      const Matrix& window, int S, Rng& rng) {
    if (S < 1) throw std::invalid_argument("mc_predict: sample count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(S));
    ForwardCache cache;
    for (int s = 0; s < S; ++s) {
        const MaskSet masks = sample_masks(rng, spec, params.dims);
        out[static_cast<std::size_t>(s)] = forward(params, window, &masks, cache);
    }
    return out;
}

// S stochastic passes with per-sample substreams keyed on
// (seed, unit, cycle, sample). Used by forecast_engine and stream_predict.
inline std::vector<double> mc_predict_keyed(const NetworkParams& params, const DropoutSpec& spec,
                                            const Matrix& window, int S, std::uint64_t seed,
                                            int unit, int cycle) {
    if (S < 1) throw std::invalid_argument("mc_predict: sample count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(S));
    ForwardCache cache;
    for (int s = 0; s < S; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(unit),
                            static_cast<std::uint64_t>(cycle), static_cast<std::uint64_t>(s)));
        const MaskSet masks = sample_masks(rng, spec, params.dims);
        out[static_cast<std::size_t>(s)] = forward(params, window, &masks, cache);
    }
    return out;
}

// Single all-ones pass (the standard-RNN baseline readout).
inline double deterministic_predict(const NetworkParams& params, const Matrix& window) {
    ForwardCache cache;
    return forward(params, window, nullptr, cache);
}

struct EngineForecast {
    int unit_id = 0;
    int window_length = 0;
    std::vector<PredictiveDistribution> dists;  // one per cycle in [window_length, n]
    std::vector<int> labels;                    // aligned with dists; empty when RUL unknown
    std::optional<int> window_entry_cycle;      // first cycle with rul <= horizon, if in record

    bool has_labels() const { return !labels.empty(); }
};

namespace detail {

inline Matrix window_ending_at(const EngineTrajectory& traj, std::size_t end, int length) {
    Matrix w(static_cast<std::size_t>(length), kNumFeatures);
    for (int t = 0; t < length; ++t) {
        const std::size_t src = end - static_cast<std::size_t>(length) + static_cast<std::size_t>(t);
        for (std::size_t f = 0; f < kNumFeatures; ++f)
            w(static_cast<std::size_t>(t), f) = traj.feature(src, f);
    }
    return w;
}

inline std::optional<int> find_window_entry(const EngineTrajectory& traj, int horizon) {
    if (!traj.has_rul()) return std::nullopt;
    for (std::size_t t = 0; t < traj.size(); ++t)
        if (traj.rul[t] <= horizon) return traj.cycles[t];
    return std::nullopt;
}

}  // namespace detail

// Per-cycle MC forecasts over a normalized trajectory: for every end cycle
// from window_length to n, run S keyed passes on the trailing window and
// summarize. Labels come from the attached RUL when present.
inline EngineForecast forecast_engine(const NetworkParams& params, const DropoutSpec& spec,
                                      const EngineTrajectory& traj, const LabelScheme& scheme,
                                      int S, std::uint64_t seed, int window_length = 50) {
    const int n = static_cast<int>(traj.size());
    if (n < window_length)
        throw std::invalid_argument("forecast_engine: trajectory of unit " +
                                    std::to_string(traj.unit_id) + " has " + std::to_string(n) +
                                    " cycles, need >= " + std::to_string(window_length));
    EngineForecast fc;
    fc.unit_id = traj.unit_id;
    fc.window_length = window_length;
    fc.window_entry_cycle = detail::find_window_entry(traj, scheme.horizon);
    for (int end = window_length; end <= n; ++end) {
        const std::size_t end_idx = static_cast<std::size_t>(end);
        const Matrix w = detail::window_ending_at(traj, end_idx, window_length);
        const int cycle = traj.cycles[end_idx - 1];
        fc.dists.push_back(
            summarize(mc_predict_keyed(params, spec, w, S, seed, traj.unit_id, cycle), cycle));
        if (traj.has_rul()) fc.labels.push_back(make_labels(traj.rul[end_idx - 1], scheme));
    }
    return fc;
}

// Same shape of output, but every cycle carries the single deterministic
// pass (all five percentiles collapse to it). This is the standard-RNN
// comparison curve.
inline EngineForecast baseline_forecast_engine(const NetworkParams& params,
                                               const EngineTrajectory& traj,
                                               const LabelScheme& scheme, int window_length = 50) {
    const int n = static_cast<int>(traj.size());
    if (n < window_length)
        throw std::invalid_argument("forecast_engine: trajectory of unit " +
                                    std::to_string(traj.unit_id) + " has " + std::to_string(n) +
                                    " cycles, need >= " + std::to_string(window_length));
    EngineForecast fc;
    fc.unit_id = traj.unit_id;
    fc.window_length = window_length;
    fc.window_entry_cycle = detail::find_window_entry(traj, scheme.horizon);
    ForwardCache cache;
    for (int end = window_length; end <= n; ++end) {
        const std::size_t end_idx = static_cast<std::size_t>(end);
        const Matrix w = detail::window_ending_at(traj, end_idx, window_length);
        const double p = forward(params, w, nullptr, cache);
        fc.dists.push_back(summarize({p}, traj.cycles[end_idx - 1]));
        if (traj.has_rul()) fc.labels.push_back(make_labels(traj.rul[end_idx - 1], scheme));
    }
    return fc;
}

// Forecast table re-indexed to relative time tau = cycle - window_entry,
// so tau = 0 is the cycle where RUL first reaches the horizon. Engines
// whose record never enters the warning window are excluded and reported.
struct AlignedSeries {
    struct Row {
        int unit = 0;
        int tau = 0;
        double p10 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p90 = 0.0;
        std::optional<int> label;
    };
    std::vector<Row> rows;
    std::vector<int> excluded_units;
};

inline AlignedSeries align_to_warning_window(const std::vector<EngineForecast>& forecasts) {
    AlignedSeries out;
    for (const auto& fc : forecasts) {
        if (!fc.window_entry_cycle) {
            out.excluded_units.push_back(fc.unit_id);
            continue;
        }
        for (std::size_t k = 0; k < fc.dists.size(); ++k) {
            AlignedSeries::Row row;
            row.unit = fc.unit_id;
            row.tau = fc.dists[k].cycle - *fc.window_entry_cycle;
            row.p10 = fc.dists[k].p10;
            row.p25 = fc.dists[k].p25;
            row.p50 = fc.dists[k].p50;
            row.p75 = fc.dists[k].p75;
            row.p90 = fc.dists[k].p90;
            if (fc.has_labels()) row.label = fc.labels[k];
            out.rows.push_back(row);
        }
    }
    return out;
}

}  // namespace prognos
