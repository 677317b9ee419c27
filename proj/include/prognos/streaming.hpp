// Line-in / record-out streaming inference. Input is the 26-column
// telemetry format without RUL; output is one JSON object per line:
// {unit, cycle, p10..p90} once a unit's buffer holds a full window,
// {unit, cycle, status:"warmup"} before that, and {status:"error", ...}
// for lines that cannot be used (processing continues).
//
// Each unit keeps a ring buffer of its window_length most recent
// normalized feature vectors. Mask substreams are keyed on
// (seed, unit, cycle, sample) exactly as in batch forecasting, so a
// replayed trajectory reproduces forecast_engine bit-for-bit.
#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prognos/cmapss.hpp"
#include "prognos/mc_dropout.hpp"
#include "prognos/model_io.hpp"

namespace prognos {

struct StreamState {
    std::vector<std::array<double, kNumFeatures>> buffer;  // oldest first, <= window_length rows
    int last_cycle = 0;
    bool any_seen = false;
};

namespace detail {

inline std::array<double, kNumFeatures> normalize_row(const TelemetryRow& row,
                                                      const NormStats& stats) {
    const std::vector<double>* mean = &stats.mean;
    const std::vector<double>* sd = &stats.stddev;
    if (stats.per_regime) {
        const std::string key = NormStats::regime_key(row.settings);
        auto it = stats.regimes.find(key);
        if (it == stats.regimes.end())
            throw std::runtime_error("unseen settings regime (" + key + ")");
        mean = &it->second.first;
        sd = &it->second.second;
    }
    std::array<double, kNumFeatures> out{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const double x = f < kNumSettings ? row.settings[f] : row.sensors[f - kNumSettings];
        out[f] = (*sd)[f] == 0.0 ? 0.0 : (x - (*mean)[f]) / (*sd)[f];
    }
    return out;
}

}  // namespace detail

inline void stream_predict(const ModelFile& model, std::istream& in, std::ostream& out, int S,
                           std::uint64_t seed) {
    if (S < 1) throw std::invalid_argument("stream_predict: sample count must be >= 1");
    const int window_length = model.config.window_length;
    std::map<int, StreamState> states;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::split_fields(line).empty()) continue;
        nlohmann::json rec;
        try {
            const TelemetryRow row = parse_telemetry_line(line, line_no);
            StreamState& st = states[row.unit];
            if (st.any_seen && row.cycle <= st.last_cycle) {
                rec = {{"line", line_no},
                       {"unit", row.unit},
                       {"cycle", row.cycle},
                       {"status", "error"},
                       {"error", "out-of-order cycle (last seen " +
                                     std::to_string(st.last_cycle) + ")"}};
                out << rec.dump() << '\n';
                continue;
            }
            st.buffer.push_back(detail::normalize_row(row, model.stats));
            if (st.buffer.size() > static_cast<std::size_t>(window_length))
                st.buffer.erase(st.buffer.begin());
            st.last_cycle = row.cycle;
            st.any_seen = true;

            if (st.buffer.size() < static_cast<std::size_t>(window_length)) {
                rec = {{"unit", row.unit}, {"cycle", row.cycle}, {"status", "warmup"}};
            } else {
                Matrix w(static_cast<std::size_t>(window_length), kNumFeatures);
                for (std::size_t t = 0; t < st.buffer.size(); ++t)
                    for (std::size_t f = 0; f < kNumFeatures; ++f) w(t, f) = st.buffer[t][f];
                const auto samples = mc_predict_keyed(model.params, model.config.dropout, w, S,
                                                      seed, row.unit, row.cycle);
                const PredictiveDistribution d = summarize(samples, row.cycle);
                rec = {{"unit", row.unit}, {"cycle", row.cycle}, {"p10", d.p10}, {"p25", d.p25},
                       {"p50", d.p50},     {"p75", d.p75},       {"p90", d.p90}};
            }
        } catch (const std::exception& e) {
            rec = {{"line", line_no}, {"status", "error"}, {"error", e.what()}};
        }
        out << rec.dump() << '\n';
    }
}

}  // namespace prognos
