#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "prognos/metrics.hpp"

using namespace prognos;

namespace {

// forecast whose five percentiles all equal the given medians
EngineForecast make_forecast(int unit, int first_cycle, const std::vector<double>& p50s,
                             const std::vector<int>& labels,
                             std::optional<int> window_entry = std::nullopt) {
    EngineForecast fc;
    fc.unit_id = unit;
    fc.window_length = 50;
    fc.window_entry_cycle = window_entry;
    for (std::size_t k = 0; k < p50s.size(); ++k)
        fc.dists.push_back(summarize({p50s[k]}, first_cycle + static_cast<int>(k)));
    fc.labels = labels;
    return fc;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "prognos_unit_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("classify_metrics") {
    SECTION("perfect forecast scores accuracy 1 with no false alarms") {
        const auto fc = make_forecast(1, 50, {0.0, 0.0, 0.0, 1.0, 1.0, 1.0},
                                      {0, 0, 0, 1, 1, 1}, 53);
        const Metrics m = classify_metrics({fc});
        REQUIRE(m.accuracy == 1.0);
        REQUIRE(m.false_alarm_rate == 0.0);
        REQUIRE(m.tp == 3);
        REQUIRE(m.tn == 3);
        REQUIRE(m.recall == 1.0);
        REQUIRE(m.precision == 1.0);
    }
    SECTION("a silent model has zero recall") {
        const auto fc = make_forecast(1, 50, {0.0, 0.0, 0.0, 0.0}, {0, 0, 1, 1}, 52);
        const Metrics m = classify_metrics({fc});
        REQUIRE(m.recall == 0.0);
        REQUIRE(m.fn == 2);
    }
    SECTION("hand-built 6-cycle forecast matches an enumerated confusion matrix") {
        // cycle:  50   51   52   53   54   55
        // p50:    0.1  0.9  0.2  0.6  0.3  0.8
        // label:  0    0    0    1    1    1
        const std::vector<double> p50s{0.1, 0.9, 0.2, 0.6, 0.3, 0.8};
        const std::vector<int> labels{0, 0, 0, 1, 1, 1};
        const auto fc = make_forecast(1, 50, p50s, labels, 53);
        const Metrics m = classify_metrics({fc});
        long tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t k = 0; k < p50s.size(); ++k) {
            const bool pred = p50s[k] >= 0.5;
            if (pred && labels[k]) ++tp;
            if (pred && !labels[k]) ++fp;
            if (!pred && !labels[k]) ++tn;
            if (!pred && labels[k]) ++fn;
        }
        REQUIRE(m.tp == tp);
        REQUIRE(m.fp == fp);
        REQUIRE(m.tn == tn);
        REQUIRE(m.fn == fn);
        REQUIRE(m.tp == 2);
        REQUIRE(m.fp == 1);  // the false alarm at cycle 51
        REQUIRE(m.fn == 1);  // the miss at cycle 54
        REQUIRE(m.false_alarm_rate == Catch::Approx(1.0 / 3.0));
    }
    SECTION("lead time uses sustained crossings only") {
        // flicker at cycle 51 must not count as an alarm (sustain = 3)
        const auto fc = make_forecast(
            2, 50, {0.1, 0.9, 0.1, 0.6, 0.7, 0.8, 0.9}, {0, 0, 0, 0, 1, 1, 1}, 54);
        const Metrics m = classify_metrics({fc}, 0.5, 3);
        REQUIRE(m.lead_time.count(2) == 1);
        REQUIRE(m.lead_time.at(2).has_value());
        // first sustained run starts at cycle 53; entry at 54
        REQUIRE(*m.lead_time.at(2) == 1);
    }
    SECTION("engines that never alarm report an empty lead time") {
        const auto fc = make_forecast(3, 50, {0.1, 0.2, 0.1}, {0, 1, 1}, 51);
        const Metrics m = classify_metrics({fc});
        REQUIRE(m.lead_time.count(3) == 1);
        REQUIRE_FALSE(m.lead_time.at(3).has_value());
    }
    SECTION("forecasts without labels are rejected") {
        EngineForecast fc = make_forecast(1, 50, {0.5}, {1});
        fc.labels.clear();
        REQUIRE_THROWS_AS(classify_metrics({fc}), std::invalid_argument);
    }
}

TEST_CASE("compare") {
    SECTION("identical inputs give identical metrics on both sides") {
        const auto fc = make_forecast(1, 50, {0.2, 0.6, 0.7, 0.8}, {0, 1, 1, 1}, 51);
        const ComparisonReport r = compare({fc}, {fc});
        REQUIRE(r.brnn.accuracy == r.baseline.accuracy);
        REQUIRE(r.brnn.tp == r.baseline.tp);
        REQUIRE(r.brnn_early_count == r.baseline_early_count);
    }
    SECTION("baseline crossing early on 3 of 5 engines is counted") {
        std::vector<EngineForecast> brnn, baseline;
        for (int u = 1; u <= 5; ++u) {
            // entry at cycle 60; both models otherwise quiet before it
            std::vector<double> quiet(15, 0.1);
            std::vector<double> early(15, 0.1);
            for (std::size_t k = 10; k < 15; ++k) quiet[k] = 0.9;   // crossing at 60
            const std::size_t from = u <= 3 ? 0 : 10;               // early for units 1..3
            for (std::size_t k = from; k < 15; ++k) early[k] = 0.9;
            std::vector<int> labels(15, 0);
            for (std::size_t k = 10; k < 15; ++k) labels[k] = 1;
            brnn.push_back(make_forecast(u, 50, quiet, labels, 60));
            baseline.push_back(make_forecast(u, 50, early, labels, 60));
        }
        const ComparisonReport r = compare(brnn, baseline);
        REQUIRE(r.baseline_early_count == 3);
        REQUIRE(r.brnn_early_count == 0);
        REQUIRE(r.brnn_crossing.at(1).value() == 60);
        REQUIRE(r.baseline_crossing.at(1).value() == 50);
    }
    SECTION("mismatched engine sets are rejected") {
        const auto a = make_forecast(1, 50, {0.5}, {1}, 50);
        const auto b = make_forecast(2, 50, {0.5}, {1}, 50);
        REQUIRE_THROWS_AS(compare({a}, {b}), std::invalid_argument);
        REQUIRE_THROWS_AS(compare({a}, {}), std::invalid_argument);
    }
}

TEST_CASE("export_plot_data") {
    const auto fc = make_forecast(4, 50, {0.25, 0.5, 0.75}, {0, 1, 1}, 51);

    SECTION("one engine and three cycles give a header plus three rows") {
        const auto path = temp_file("plot_single.csv");
        export_plot_data(std::vector<EngineForecast>{fc}, path.string());
        const std::string text = slurp(path);
        std::istringstream lines(text);
        std::string line;
        std::vector<std::string> rows;
        while (std::getline(lines, line)) rows.push_back(line);
        REQUIRE(rows.size() == 4);
        REQUIRE(rows[0] == "unit,cycle_or_tau,p10,p25,p50,p75,p90,label");
        REQUIRE(rows[1] == "4,50,0.25,0.25,0.25,0.25,0.25,0");
    }
    SECTION("re-export is byte-identical") {
        const auto p1 = temp_file("plot_a.csv");
        const auto p2 = temp_file("plot_b.csv");
        export_plot_data(std::vector<EngineForecast>{fc}, p1.string());
        export_plot_data(std::vector<EngineForecast>{fc}, p2.string());
        REQUIRE(slurp(p1) == slurp(p2));
    }
    SECTION("aligned export carries a tau = 0 row for every included engine") {
        const auto fc2 = make_forecast(9, 50, {0.1, 0.2, 0.3, 0.4}, {0, 0, 1, 1}, 52);
        const AlignedSeries aligned = align_to_warning_window({fc, fc2});
        const auto path = temp_file("plot_aligned.csv");
        export_plot_data(aligned, path.string());
        const std::string text = slurp(path);
        REQUIRE(text.find("4,0,") != std::string::npos);
        REQUIRE(text.find("9,0,") != std::string::npos);
    }
    SECTION("unwritable path is an error") {
        REQUIRE_THROWS_AS(
            export_plot_data(std::vector<EngineForecast>{fc}, "/nonexistent/dir/out.csv"),
            std::runtime_error);
    }
}

TEST_CASE("metrics agree with a brute-force recount over the exported CSV") {
    std::vector<EngineForecast> fcs;
    fcs.push_back(make_forecast(1, 50, {0.1, 0.9, 0.2, 0.6, 0.3, 0.8}, {0, 0, 0, 1, 1, 1}, 53));
    fcs.push_back(make_forecast(2, 50, {0.7, 0.7, 0.1}, {1, 1, 0}, 50));
    const Metrics m = classify_metrics(fcs);

    const auto path = temp_file("plot_recount.csv");
    export_plot_data(fcs, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    long tp = 0, fp = 0, tn = 0, fn = 0;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        int unit, cycle, label;
        double p10, p25, p50, p75, p90;
        fields >> unit >> cycle >> p10 >> p25 >> p50 >> p75 >> p90 >> label;
        const bool pred = p50 >= 0.5;
        if (pred && label) ++tp;
        if (pred && !label) ++fp;
        if (!pred && !label) ++tn;
        if (!pred && label) ++fn;
    }
    REQUIRE(m.tp == tp);
    REQUIRE(m.fp == fp);
    REQUIRE(m.tn == tn);
    REQUIRE(m.fn == fn);
}
