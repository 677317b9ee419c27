// Threshold metrics over forecast sets, the BRNN-vs-baseline comparison,
// and CSV export of the data behind the plots. The decision rule is
// median probability >= threshold (default 0.5); a "crossing" must hold
// for `sustain` consecutive recorded cycles so one noisy sample does not
// count as an alarm.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prognos/mc_dropout.hpp"

namespace prognos {

struct Metrics {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double false_alarm_rate = 0.0;  // fraction of outside-window cycles flagged
    // lead time = window_entry_cycle - first sustained crossing (negative =
    // late); only engines whose record enters the warning window appear,
    // nullopt = never alarmed.
    std::map<int, std::optional<int>> lead_time;

    long total() const { return tp + fp + tn + fn; }
};

namespace detail {

// First cycle from which p50 stays at or above the threshold for `sustain`
// consecutive recorded cycles.
inline std::optional<int> first_sustained_crossing(const EngineForecast& fc, double threshold,
                                                   int sustain) {
    const std::size_t n = fc.dists.size();
    std::size_t run = 0;
    for (std::size_t k = 0; k < n; ++k) {
        run = fc.dists[k].p50 >= threshold ? run + 1 : 0;
        if (run >= static_cast<std::size_t>(sustain))
            return fc.dists[k + 1 - static_cast<std::size_t>(sustain)].cycle;
    }
    return std::nullopt;
}

}  // namespace detail

inline Metrics classify_metrics(const std::vector<EngineForecast>& forecasts,
                                double threshold = 0.5, int sustain = 3) {
    if (sustain < 1) throw std::invalid_argument("classify_metrics: sustain must be >= 1");
    Metrics m;
    for (const auto& fc : forecasts) {
        if (!fc.has_labels())
            throw std::invalid_argument("classify_metrics: forecast for unit " +
                                        std::to_string(fc.unit_id) + " has no labels");
        for (std::size_t k = 0; k < fc.dists.size(); ++k) {
            const bool pred = fc.dists[k].p50 >= threshold;
            const bool truth = fc.labels[k] != 0;
            if (pred && truth) ++m.tp;
            else if (pred && !truth) ++m.fp;
            else if (!pred && !truth) ++m.tn;
            else ++m.fn;
        }
        if (fc.window_entry_cycle) {
            const auto crossing = detail::first_sustained_crossing(fc, threshold, sustain);
            m.lead_time[fc.unit_id] =
                crossing ? std::optional<int>(*fc.window_entry_cycle - *crossing) : std::nullopt;
        }
    }
    const auto ratio = [](long num, long den) {
        return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
    };
    m.accuracy = ratio(m.tp + m.tn, m.total());
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.false_alarm_rate = ratio(m.fp, m.fp + m.tn);
    return m;
}

struct ComparisonReport {
    Metrics brnn;      // median-based decisions
    Metrics baseline;  // single deterministic pass
    std::map<int, std::optional<int>> brnn_crossing;      // earliest sustained crossing cycle
    std::map<int, std::optional<int>> baseline_crossing;
    int brnn_early_count = 0;      // engines alarming before window entry
    int baseline_early_count = 0;
};

inline ComparisonReport compare(const std::vector<EngineForecast>& brnn,
                                const std::vector<EngineForecast>& baseline, double threshold = 0.5,
                                int sustain = 3) {
    if (brnn.size() != baseline.size())
        throw std::invalid_argument("compare: forecast sets differ in engine count");
    ComparisonReport report;
    report.brnn = classify_metrics(brnn, threshold, sustain);
    report.baseline = classify_metrics(baseline, threshold, sustain);
    for (std::size_t i = 0; i < brnn.size(); ++i) {
        const EngineForecast& a = brnn[i];
        const EngineForecast& b = baseline[i];
        if (a.unit_id != b.unit_id || a.dists.size() != b.dists.size())
            throw std::invalid_argument("compare: mismatched engine sets at unit " +
                                        std::to_string(a.unit_id));
        const auto ca = detail::first_sustained_crossing(a, threshold, sustain);
        const auto cb = detail::first_sustained_crossing(b, threshold, sustain);
        report.brnn_crossing[a.unit_id] = ca;
        report.baseline_crossing[b.unit_id] = cb;
        if (a.window_entry_cycle) {
            if (ca && *ca < *a.window_entry_cycle) ++report.brnn_early_count;
            if (cb && *cb < *b.window_entry_cycle) ++report.baseline_early_count;
        }
    }
    return report;
}

namespace detail {

inline void append_csv_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << body;
}

}  // namespace detail

inline constexpr const char* kPlotCsvHeader = "unit,cycle_or_tau,p10,p25,p50,p75,p90,label\n";

inline std::string plot_csv(const std::vector<EngineForecast>& forecasts) {
    std::string out = kPlotCsvHeader;
    for (const auto& fc : forecasts) {
        for (std::size_t k = 0; k < fc.dists.size(); ++k) {
            const auto& d = fc.dists[k];
            out += std::to_string(fc.unit_id);
            out += ',';
            out += std::to_string(d.cycle);
            for (double v : {d.p10, d.p25, d.p50, d.p75, d.p90}) {
                out += ',';
                detail::append_csv_double(out, v);
            }
            out += ',';
            if (fc.has_labels()) out += std::to_string(fc.labels[k]);
            out += '\n';
        }
    }
    return out;
}

inline std::string plot_csv(const AlignedSeries& aligned) {
    std::string out = kPlotCsvHeader;
    for (const auto& row : aligned.rows) {
        out += std::to_string(row.unit);
        out += ',';
        out += std::to_string(row.tau);
        for (double v : {row.p10, row.p25, row.p50, row.p75, row.p90}) {
            out += ',';
            detail::append_csv_double(out, v);
        }
        out += ',';
        if (row.label) out += std::to_string(*row.label);
        out += '\n';
    }
    return out;
}

inline void export_plot_data(const std::vector<EngineForecast>& forecasts,
                             const std::string& path) {
    if (forecasts.empty()) throw std::invalid_argument("export_plot_data: no forecasts");
    detail::write_file(path, plot_csv(forecasts));
}

inline void export_plot_data(const AlignedSeries& aligned, const std::string& path) {
    if (aligned.rows.empty()) throw std::invalid_argument("export_plot_data: no aligned rows");
    detail::write_file(path, plot_csv(aligned));
}

}  // namespace prognos
