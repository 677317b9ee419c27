// C-MAPSS telemetry handling: parsing the 26-column text format, RUL
// derivation, per-feature normalization, failure-window labeling and
// fixed-length window extraction.
//
// Feature layout everywhere in this project: index 0..2 are the three
// operational settings, index 3..23 the twenty-one sensor channels
// (24 features per cycle).
#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/numeric.hpp"

namespace prognos {

inline constexpr std::size_t kNumSettings = 3;
inline constexpr std::size_t kNumSensors = 21;
inline constexpr std::size_t kNumFeatures = kNumSettings + kNumSensors;  // 24
inline constexpr std::size_t kNumColumns = 2 + kNumFeatures;             // unit, cycle, features

struct EngineTrajectory {
    int unit_id = 0;
    std::vector<int> cycles;                            // contiguous, starting at 1
    std::vector<std::array<double, kNumSettings>> settings;
    std::vector<std::array<double, kNumSensors>> sensors;
    std::vector<int> rul;                               // empty until attach_rul

    std::size_t size() const { return cycles.size(); }
    bool has_rul() const { return !rul.empty(); }

    double feature(std::size_t t, std::size_t f) const {
        return f < kNumSettings ? settings[t][f] : sensors[t][f - kNumSettings];
    }
    double& feature(std::size_t t, std::size_t f) {
        return f < kNumSettings ? settings[t][f] : sensors[t][f - kNumSettings];
    }
};

struct TelemetryRow {
    int unit = 0;
    int cycle = 0;
    std::array<double, kNumSettings> settings{};
    std::array<double, kNumSensors> sensors{};
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

inline double parse_double_field(std::string_view tok, std::size_t line_no, std::size_t col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": non-numeric field in column " +
                                 std::to_string(col + 1) + " ('" + std::string(tok) + "')");
    return v;
}

inline int parse_int_field(std::string_view tok, std::size_t line_no, std::size_t col) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": non-integer field in column " +
                                 std::to_string(col + 1) + " ('" + std::string(tok) + "')");
    return v;
}

// Shortest decimal form that parses back to the identical double.
inline void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

}  // namespace detail

// Parses one telemetry line (unit cycle s1..s3 m1..m21). Throws on wrong
// field count or a non-numeric field; line_no is used in diagnostics only.
inline TelemetryRow parse_telemetry_line(std::string_view line, std::size_t line_no = 1) {
    const auto fields = detail::split_fields(line);
    if (fields.size() != kNumColumns)
        throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(kNumColumns) + " fields, got " +
                                 std::to_string(fields.size()));
    TelemetryRow row;
    row.unit = detail::parse_int_field(fields[0], line_no, 0);
    row.cycle = detail::parse_int_field(fields[1], line_no, 1);
    if (row.unit <= 0)
        throw std::runtime_error("line " + std::to_string(line_no) + ": unit id must be positive");
    for (std::size_t i = 0; i < kNumSettings; ++i)
        row.settings[i] = detail::parse_double_field(fields[2 + i], line_no, 2 + i);
    for (std::size_t i = 0; i < kNumSensors; ++i)
        row.sensors[i] = detail::parse_double_field(fields[2 + kNumSettings + i], line_no,
                                                    2 + kNumSettings + i);
    return row;
}

// Reads a whole telemetry file. Rows are grouped per unit; each unit's
// cycle index must run contiguously from 1. Trajectories come back ordered
// by unit id, with the rul field left unset.
inline std::vector<EngineTrajectory> parse_trajectories(std::istream& in) {
    std::map<int, EngineTrajectory> by_unit;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::split_fields(line).empty()) continue;  // blank line
        const TelemetryRow row = parse_telemetry_line(line, line_no);
        EngineTrajectory& traj = by_unit[row.unit];
        if (traj.cycles.empty()) {
            traj.unit_id = row.unit;
            if (row.cycle != 1)
                throw std::runtime_error("line " + std::to_string(line_no) + ": unit " +
                                         std::to_string(row.unit) + " must start at cycle 1, got " +
                                         std::to_string(row.cycle));
        } else if (row.cycle != traj.cycles.back() + 1) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": non-contiguous cycle " +
                                     std::to_string(row.cycle) + " for unit " +
                                     std::to_string(row.unit) + " (previous " +
                                     std::to_string(traj.cycles.back()) + ")");
        }
        traj.cycles.push_back(row.cycle);
        traj.settings.push_back(row.settings);
        traj.sensors.push_back(row.sensors);
    }
    std::vector<EngineTrajectory> out;
    out.reserve(by_unit.size());
    for (auto& [id, traj] : by_unit) out.push_back(std::move(traj));
    return out;
}

inline std::vector<EngineTrajectory> parse_trajectories(const std::string& text) {
    std::istringstream in(text);
    return parse_trajectories(in);
}

// Serializes a fleet back to the 26-column text format. Doubles are written
// in shortest round-trip form, so parse(to_text(fleet)) == fleet.
inline std::string to_text(const std::vector<EngineTrajectory>& fleet) {
    std::string out;
    for (const auto& traj : fleet) {
        for (std::size_t t = 0; t < traj.size(); ++t) {
            out += std::to_string(traj.unit_id);
            out += ' ';
            out += std::to_string(traj.cycles[t]);
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                out += ' ';
                detail::append_double(out, traj.feature(t, f));
            }
            out += '\n';
        }
    }
    return out;
}

// One non-negative integer per line; entry i is the remaining life of test
// unit i at its final recorded cycle.
inline std::vector<int> parse_rul_file(std::istream& in) {
    std::vector<int> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 1)
            throw std::runtime_error("RUL line " + std::to_string(line_no) + ": expected one value");
        const int v = detail::parse_int_field(fields[0], line_no, 0);
        if (v < 0)
            throw std::runtime_error("RUL line " + std::to_string(line_no) + ": negative value");
        out.push_back(v);
    }
    return out;
}

inline std::vector<int> parse_rul_file(const std::string& text) {
    std::istringstream in(text);
    return parse_rul_file(in);
}

// rul[t] = final_rul + (last_cycle - cycles[t]). Training trajectories run
// to failure, so they use final_rul = 0.
inline EngineTrajectory attach_rul(EngineTrajectory traj, int final_rul) {
    if (final_rul < 0) throw std::invalid_argument("attach_rul: final_rul must be >= 0");
    traj.rul.resize(traj.size());
    const int last = traj.cycles.back();
    for (std::size_t t = 0; t < traj.size(); ++t) traj.rul[t] = final_rul + (last - traj.cycles[t]);
    return traj;
}

// Per-feature z-score statistics, population (divide-by-n) convention.
// In regime mode, stats are additionally keyed by the settings tuple
// rounded to one decimal place.
struct NormStats {
    std::vector<double> mean;    // size kNumFeatures
    std::vector<double> stddev;  // size kNumFeatures
    bool per_regime = false;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> regimes;

    static std::string regime_key(const std::array<double, kNumSettings>& s) {
        std::string key;
        for (std::size_t i = 0; i < kNumSettings; ++i) {
            double r = std::round(s[i] * 10.0) / 10.0;
            if (r == 0.0) r = 0.0;  // collapse -0.0
            char buf[32];
            const int len = std::snprintf(buf, sizeof(buf), "%.1f", r);
            if (i) key += '|';
            key.append(buf, static_cast<std::size_t>(len));
        }
        return key;
    }
};

namespace detail {

struct MomentAccum {
    std::array<double, kNumFeatures> sum{};
    std::array<double, kNumFeatures> sumsq{};
    std::size_t n = 0;

    void add(const EngineTrajectory& traj, std::size_t t) {
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            const double v = traj.feature(t, f);
            sum[f] += v;
            sumsq[f] += v * v;
        }
        ++n;
    }
    void finish(std::vector<double>& mean, std::vector<double>& stddev) const {
        mean.resize(kNumFeatures);
        stddev.resize(kNumFeatures);
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            mean[f] = sum[f] / static_cast<double>(n);
            const double var = sumsq[f] / static_cast<double>(n) - mean[f] * mean[f];
            stddev[f] = var > 0.0 ? std::sqrt(var) : 0.0;
        }
    }
};

}  // namespace detail

inline NormStats fit_normalization(const std::vector<EngineTrajectory>& fleet,
                                   bool regime_mode = false) {
    if (fleet.empty()) throw std::invalid_argument("fit_normalization: empty fleet");
    NormStats stats;
    stats.per_regime = regime_mode;
    detail::MomentAccum global;
    std::map<std::string, detail::MomentAccum> per_regime;
    for (const auto& traj : fleet) {
        for (std::size_t t = 0; t < traj.size(); ++t) {
            global.add(traj, t);
            if (regime_mode) per_regime[NormStats::regime_key(traj.settings[t])].add(traj, t);
        }
    }
    global.finish(stats.mean, stats.stddev);
    for (const auto& [key, acc] : per_regime) {
        auto& entry = stats.regimes[key];
        acc.finish(entry.first, entry.second);
    }
    return stats;
}

// (x - mean) / std per feature; features with zero variance map to 0.
inline std::vector<EngineTrajectory> apply_normalization(std::vector<EngineTrajectory> fleet,
                                                         const NormStats& stats) {
    for (auto& traj : fleet) {
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const std::vector<double>* mean = &stats.mean;
            const std::vector<double>* sd = &stats.stddev;
            if (stats.per_regime) {
                const std::string key = NormStats::regime_key(traj.settings[t]);
                auto it = stats.regimes.find(key);
                if (it == stats.regimes.end())
                    throw std::runtime_error("apply_normalization: unseen settings regime (" + key +
                                             ") for unit " + std::to_string(traj.unit_id));
                mean = &it->second.first;
                sd = &it->second.second;
            }
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                const double s = (*sd)[f];
                traj.feature(t, f) = s == 0.0 ? 0.0 : (traj.feature(t, f) - (*mean)[f]) / s;
            }
        }
    }
    return fleet;
}

struct LabelScheme {
    enum class Mode { binary, multiclass };
    Mode mode = Mode::binary;
    int horizon = 30;             // warning window, in cycles
    std::vector<int> boundaries;  // multiclass window edges w0 < w1 < ...

    int num_classes() const {
        return mode == Mode::binary ? 2 : static_cast<int>(boundaries.size()) + 1;
    }
};

// Binary: 1 iff rul <= horizon. Multiclass: class k for the first window
// [w_{k-1}+1, w_k] containing rul, with a final open class past the last
// boundary.
inline int make_labels(int rul, const LabelScheme& scheme) {
    if (rul < 0) throw std::invalid_argument("make_labels: rul must be >= 0");
    if (scheme.mode == LabelScheme::Mode::binary) return rul <= scheme.horizon ? 1 : 0;
    for (std::size_t k = 0; k < scheme.boundaries.size(); ++k)
        if (rul <= scheme.boundaries[k]) return static_cast<int>(k);
    return static_cast<int>(scheme.boundaries.size());
}

struct WindowSample {
    int unit_id = 0;
    int end_cycle = 0;
    std::vector<double> features;  // length*kNumFeatures, time-major
    int label = 0;
    int rul_at_end = 0;
};

// One sample per end cycle e in [length, n] (step = stride). A trajectory
// shorter than the window length yields no samples.
inline std::vector<WindowSample> make_windows(const EngineTrajectory& traj,
                                              const LabelScheme& scheme, int length = 50,
                                              int stride = 1) {
    if (length <= 0 || stride <= 0)
        throw std::invalid_argument("make_windows: length and stride must be positive");
    if (!traj.has_rul()) throw std::invalid_argument("make_windows: trajectory has no RUL attached");
    std::vector<WindowSample> out;
    const int n = static_cast<int>(traj.size());
    for (int end = length; end <= n; end += stride) {
        WindowSample s;
        s.unit_id = traj.unit_id;
        s.end_cycle = traj.cycles[static_cast<std::size_t>(end - 1)];
        s.rul_at_end = traj.rul[static_cast<std::size_t>(end - 1)];
        s.label = make_labels(s.rul_at_end, scheme);
        s.features.resize(static_cast<std::size_t>(length) * kNumFeatures);
        for (int t = 0; t < length; ++t) {
            const std::size_t src = static_cast<std::size_t>(end - length + t);
            for (std::size_t f = 0; f < kNumFeatures; ++f)
                s.features[static_cast<std::size_t>(t) * kNumFeatures + f] = traj.feature(src, f);
        }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<WindowSample> make_windows(const std::vector<EngineTrajectory>& fleet,
                                              const LabelScheme& scheme, int length = 50,
                                              int stride = 1) {
    std::vector<WindowSample> out;
    for (const auto& traj : fleet) {
        auto w = make_windows(traj, scheme, length, stride);
        out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    }
    return out;
}

}  // namespace prognos
