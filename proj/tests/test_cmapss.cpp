#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "prognos/cmapss.hpp"
#include "prognos/rng.hpp"

using namespace prognos;

namespace {

// one telemetry line with deterministic junk values
std::string make_line(int unit, int cycle, double base = 0.0) {
    std::string s = std::to_string(unit) + " " + std::to_string(cycle);
    for (int f = 0; f < 24; ++f) s += " " + std::to_string(base + f * 0.5);
    return s;
}

std::vector<EngineTrajectory> random_fleet(Rng& rng, int units, int min_len, int max_len) {
    std::vector<EngineTrajectory> fleet;
    for (int u = 1; u <= units; ++u) {
        EngineTrajectory traj;
        traj.unit_id = u;
        const int n = min_len + static_cast<int>(rng.next_below(
                                    static_cast<std::uint64_t>(max_len - min_len + 1)));
        for (int t = 1; t <= n; ++t) {
            traj.cycles.push_back(t);
            std::array<double, kNumSettings> st{};
            for (auto& v : st) v = rng.next_uniform(-1.0, 1.0);
            std::array<double, kNumSensors> se{};
            for (auto& v : se) v = rng.next_uniform(-100.0, 100.0);
            traj.settings.push_back(st);
            traj.sensors.push_back(se);
        }
        fleet.push_back(std::move(traj));
    }
    return fleet;
}

}  // namespace

TEST_CASE("parse_trajectories") {
    SECTION("a single valid line makes a one-cycle trajectory") {
        const auto fleet = parse_trajectories(make_line(3, 1, 2.0) + "\n");
        REQUIRE(fleet.size() == 1);
        REQUIRE(fleet[0].unit_id == 3);
        REQUIRE(fleet[0].size() == 1);
        REQUIRE(fleet[0].settings[0].size() == 3);
        REQUIRE(fleet[0].sensors[0].size() == 21);
        REQUIRE(fleet[0].settings[0][0] == 2.0);
        REQUIRE(fleet[0].sensors[0][20] == Catch::Approx(2.0 + 23 * 0.5));
        REQUIRE_FALSE(fleet[0].has_rul());
    }
    SECTION("empty input gives an empty fleet") {
        REQUIRE(parse_trajectories(std::string{}).empty());
        REQUIRE(parse_trajectories(std::string{"\n\n"}).empty());
    }
    SECTION("rows group by unit in order") {
        const std::string text =
            make_line(1, 1) + "\n" + make_line(1, 2) + "\n" + make_line(2, 1) + "\n";
        const auto fleet = parse_trajectories(text);
        REQUIRE(fleet.size() == 2);
        REQUIRE(fleet[0].unit_id == 1);
        REQUIRE(fleet[0].size() == 2);
        REQUIRE(fleet[1].unit_id == 2);
        REQUIRE(fleet[1].size() == 1);
    }
    SECTION("wrong field count names the line") {
        const std::string text = make_line(1, 1) + "\n1 2 3\n";
        REQUIRE_THROWS_WITH(parse_trajectories(text),
                            Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("non-numeric field names the line") {
        std::string bad = make_line(1, 1);
        bad.replace(bad.find(" 0.5"), 4, " abc");
        REQUIRE_THROWS_WITH(parse_trajectories(bad), Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("non-contiguous cycle index names the line") {
        const std::string text = make_line(1, 1) + "\n" + make_line(1, 3) + "\n";
        REQUIRE_THROWS_WITH(parse_trajectories(text),
                            Catch::Matchers::ContainsSubstring("line 2"));
    }
}

TEST_CASE("fleet text round-trip is exact") {
    Rng rng(2024);
    const auto fleet = random_fleet(rng, 5, 1, 12);
    const auto reparsed = parse_trajectories(to_text(fleet));
    REQUIRE(reparsed.size() == fleet.size());
    for (std::size_t i = 0; i < fleet.size(); ++i) {
        REQUIRE(reparsed[i].unit_id == fleet[i].unit_id);
        REQUIRE(reparsed[i].cycles == fleet[i].cycles);
        REQUIRE(reparsed[i].settings == fleet[i].settings);
        REQUIRE(reparsed[i].sensors == fleet[i].sensors);
    }
}

TEST_CASE("parse_rul_file") {
    REQUIRE(parse_rul_file(std::string{"112\n98\n"}) == std::vector<int>{112, 98});
    REQUIRE(parse_rul_file(std::string{}).empty());
    REQUIRE_THROWS_AS(parse_rul_file(std::string{"5\n-3\n"}), std::runtime_error);
    REQUIRE_THROWS_AS(parse_rul_file(std::string{"5.5\n"}), std::runtime_error);
}

TEST_CASE("attach_rul") {
    auto fleet = parse_trajectories(make_line(1, 1) + "\n" + make_line(1, 2) + "\n" +
                                    make_line(1, 3) + "\n");
    SECTION("training trajectory counts down to zero") {
        const auto traj = attach_rul(fleet[0], 0);
        REQUIRE(traj.rul == std::vector<int>{2, 1, 0});
    }
    SECTION("test trajectory offsets by the recorded final RUL") {
        auto two = parse_trajectories(make_line(1, 1) + "\n" + make_line(1, 2) + "\n");
        const auto traj = attach_rul(two[0], 5);
        REQUIRE(traj.rul == std::vector<int>{6, 5});
    }
    SECTION("negative final RUL is rejected") {
        REQUIRE_THROWS_AS(attach_rul(fleet[0], -1), std::invalid_argument);
    }
}

TEST_CASE("normalization statistics") {
    SECTION("two cycles at 0 and 2 give mean 1, population std 1") {
        auto fleet = parse_trajectories(make_line(1, 1, 0.0) + "\n" + make_line(1, 2, 2.0) + "\n");
        const auto stats = fit_normalization(fleet);
        // feature f takes values f*0.5 and 2+f*0.5
        REQUIRE(stats.mean[0] == 1.0);
        REQUIRE(stats.stddev[0] == 1.0);
        REQUIRE(stats.mean[5] == Catch::Approx(1.0 + 5 * 0.5));
        REQUIRE(stats.stddev[5] == Catch::Approx(1.0));
    }
    SECTION("single cycle fleet has zero stddev everywhere") {
        auto fleet = parse_trajectories(make_line(1, 1, 3.0) + "\n");
        const auto stats = fit_normalization(fleet);
        for (double s : stats.stddev) REQUIRE(s == 0.0);
    }
    SECTION("empty fleet is rejected") {
        REQUIRE_THROWS_AS(fit_normalization({}), std::invalid_argument);
    }
}

TEST_CASE("apply_normalization") {
    auto fleet = parse_trajectories(make_line(1, 1, 0.0) + "\n" + make_line(1, 2, 2.0) + "\n");
    const auto stats = fit_normalization(fleet);
    const auto normed = apply_normalization(fleet, stats);
    SECTION("x = mean maps to 0 and x = mean+std maps to 1") {
        // feature 0: values {0,2}, mean 1, std 1
        REQUIRE(normed[0].feature(0, 0) == -1.0);
        REQUIRE(normed[0].feature(1, 0) == 1.0);
    }
    SECTION("constant features map to zero, not NaN") {
        auto constant = parse_trajectories(make_line(1, 1, 4.0) + "\n" + make_line(1, 2, 4.0) +
                                           "\n");
        const auto cstats = fit_normalization(constant);
        const auto cnormed = apply_normalization(constant, cstats);
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            REQUIRE(cnormed[0].feature(0, f) == 0.0);
            REQUIRE(cnormed[0].feature(1, f) == 0.0);
        }
    }
    SECTION("regime lookup miss names the settings tuple") {
        auto train = parse_trajectories(make_line(1, 1, 0.0) + "\n" + make_line(1, 2, 2.0) + "\n");
        const auto rstats = fit_normalization(train, true);
        auto other = parse_trajectories(make_line(2, 1, 40.0) + "\n");
        REQUIRE_THROWS_WITH(apply_normalization(other, rstats),
                            Catch::Matchers::ContainsSubstring("40.0"));
    }
}

TEST_CASE("per-regime stats key on the rounded settings tuple") {
    auto fleet = parse_trajectories(make_line(1, 1, 0.0) + "\n" + make_line(1, 2, 2.0) + "\n");
    const auto stats = fit_normalization(fleet, true);
    REQUIRE(stats.per_regime);
    REQUIRE(stats.regimes.size() == 2);  // settings differ between the two rows
    REQUIRE(stats.regimes.count("0.0|0.5|1.0") == 1);
    REQUIRE(stats.regimes.count("2.0|2.5|3.0") == 1);
}

TEST_CASE("make_labels") {
    LabelScheme binary;
    binary.horizon = 30;
    SECTION("binary thresholding uses rul <= horizon") {
        REQUIRE(make_labels(15, binary) == 1);
        REQUIRE(make_labels(0, binary) == 1);
        REQUIRE(make_labels(30, binary) == 1);
        REQUIRE(make_labels(31, binary) == 0);
        REQUIRE(make_labels(1000, binary) == 0);
    }
    SECTION("multiclass windows are left-open intervals plus a final open class") {
        LabelScheme mc;
        mc.mode = LabelScheme::Mode::multiclass;
        mc.boundaries = {15, 30, 60};
        REQUIRE(mc.num_classes() == 4);
        REQUIRE(make_labels(0, mc) == 0);
        REQUIRE(make_labels(15, mc) == 0);
        REQUIRE(make_labels(16, mc) == 1);
        REQUIRE(make_labels(30, mc) == 1);
        REQUIRE(make_labels(45, mc) == 2);
        REQUIRE(make_labels(61, mc) == 3);
    }
    SECTION("negative rul is rejected") {
        REQUIRE_THROWS_AS(make_labels(-1, binary), std::invalid_argument);
    }
}

TEST_CASE("make_windows") {
    LabelScheme scheme;
    Rng rng(55);
    auto build = [&](int n) {
        auto fleet = random_fleet(rng, 1, n, n);
        return attach_rul(fleet[0], 0);
    };
    SECTION("too-short trajectory yields nothing") {
        REQUIRE(make_windows(build(49), scheme, 50).empty());
    }
    SECTION("length 50 yields one window") {
        const auto w = make_windows(build(50), scheme, 50);
        REQUIRE(w.size() == 1);
        REQUIRE(w[0].end_cycle == 50);
        REQUIRE(w[0].features.size() == 50u * kNumFeatures);
    }
    SECTION("length 52 yields windows ending at 50, 51, 52") {
        const auto w = make_windows(build(52), scheme, 50);
        REQUIRE(w.size() == 3);
        REQUIRE(w[0].end_cycle == 50);
        REQUIRE(w[1].end_cycle == 51);
        REQUIRE(w[2].end_cycle == 52);
    }
    SECTION("window count equals max(0, n-49) across lengths") {
        for (int n : {10, 49, 50, 77, 120}) {
            const auto w = make_windows(build(n), scheme, 50);
            REQUIRE(static_cast<int>(w.size()) == std::max(0, n - 49));
        }
    }
    SECTION("windows carry the label of their end cycle") {
        const auto traj = build(80);
        const auto w = make_windows(traj, scheme, 50);
        // training trajectory: rul at end cycle e is n - e
        for (const auto& s : w) {
            const int rul = 80 - s.end_cycle;
            REQUIRE(s.rul_at_end == rul);
            REQUIRE(s.label == (rul <= 30 ? 1 : 0));
        }
    }
    SECTION("missing RUL is rejected") {
        auto fleet = random_fleet(rng, 1, 60, 60);
        REQUIRE_THROWS_AS(make_windows(fleet[0], scheme, 50), std::invalid_argument);
    }
}

TEST_CASE("labels mark exactly the last horizon+1 cycles of a training trajectory") {
    Rng rng(66);
    auto fleet = random_fleet(rng, 1, 90, 90);
    const auto traj = attach_rul(fleet[0], 0);
    LabelScheme scheme;
    int ones = 0;
    for (std::size_t t = 0; t < traj.size(); ++t) ones += make_labels(traj.rul[t], scheme);
    REQUIRE(ones == scheme.horizon + 1);
    for (std::size_t t = traj.size() - static_cast<std::size_t>(scheme.horizon) - 1;
         t < traj.size(); ++t)
        REQUIRE(make_labels(traj.rul[t], scheme) == 1);
}

TEST_CASE("normalized training fleet has mean 0 and unit variance per feature") {
    Rng rng(77);
    auto fleet = random_fleet(rng, 6, 40, 90);
    const auto stats = fit_normalization(fleet);
    const auto normed = apply_normalization(fleet, stats);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        double sum = 0.0, sumsq = 0.0;
        std::size_t n = 0;
        for (const auto& traj : normed) {
            for (std::size_t t = 0; t < traj.size(); ++t) {
                sum += traj.feature(t, f);
                sumsq += traj.feature(t, f) * traj.feature(t, f);
                ++n;
            }
        }
        const double mean = sum / static_cast<double>(n);
        REQUIRE(std::abs(mean) < 1e-9);
        if (stats.stddev[f] > 0.0)
            REQUIRE(std::sqrt(sumsq / static_cast<double>(n) - mean * mean) ==
                    Catch::Approx(1.0).epsilon(1e-9));
    }
}
