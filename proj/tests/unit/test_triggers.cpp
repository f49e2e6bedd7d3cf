#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "movseq/errors.hpp"
#include "movseq/geo.hpp"
#include "movseq/synthdata.hpp"
#include "movseq/triggers.hpp"

#include <algorithm>
#include <random>

using namespace movseq;
using fixtures::series;

TEST_CASE("falling speed edge between the bracketing samples")
{
    const Channel c = series({2.0, 1.5, 0.8, 0.4}, 100, ChannelKind::speed);
    const auto t = detect_edges(c, {"speed", 1.0, EdgeDirection::falling});
    REQUIRE(t.size() == 1);
    CHECK(t[0].ms > 100);
    CHECK(t[0].ms < 200);
    // (1.0 - 1.5) / (0.8 - 1.5) of the way from 100 to 200 ms.
    CHECK(t[0].ms == 171);
}

TEST_CASE("edge trigger corner cases")
{
    CHECK(detect_edges(series({5, 5, 5}), {"x", 1.0, EdgeDirection::rising}).empty());
    const auto change = detect_edges(series({0.5, 1.2, 0.7, 1.3}), {"x", 1.0, EdgeDirection::change});
    CHECK(change.size() == 3);

    // Exactly at threshold is "on".
    const auto at = detect_edges(series({0.0, 1.0, 1.0, 0.0}), {"x", 1.0, EdgeDirection::rising});
    REQUIRE(at.size() == 1);
    CHECK(at[0].ms == 99);

    // Adjacent samples 1 ms apart: no room inside, the later sample is used.
    const auto tight = detect_edges(fixtures::scalar_channel({{0, 0.0}, {1, 2.0}}), {"x", 1.0, EdgeDirection::rising});
    REQUIRE(tight.size() == 1);
    CHECK(tight[0].ms == 1);

    CHECK_THROWS_AS(detect_edges(series({1.0}), {"x", 1.0, EdgeDirection::rising}), Error);
    const Channel pos = fixtures::track({{0, {47, 15}}, {100, {47.001, 15}}});
    CHECK_THROWS_AS(detect_edges(pos, {"x", 1.0, EdgeDirection::rising}), Error);
}

TEST_CASE("edge trigger against the consecutive-pair oracle")
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> v(-2.0, 2.0);
    std::uniform_int_distribution<std::int64_t> gap(1, 40);
    for (int round = 0; round < 200; ++round) {
        std::vector<std::pair<std::int64_t, double>> pts;
        std::vector<double> vals;
        std::int64_t t = 0;
        const int n = 2 + round % 60;
        for (int i = 0; i < n; ++i) {
            t += gap(rng);
            const double x = (round % 3 == 0) ? std::round(v(rng)) : v(rng);
            pts.emplace_back(t, x);
            vals.push_back(x);
        }
        const Channel c = fixtures::scalar_channel(pts);
        const double thr = (round % 3 == 0) ? 0.0 : v(rng);
        const auto hits = oracle::edge_hits(vals, thr);

        for (auto dir : {EdgeDirection::rising, EdgeDirection::falling, EdgeDirection::change}) {
            std::vector<std::size_t> expected;
            for (const auto& h : hits)
                if (dir == EdgeDirection::change || h.rising == (dir == EdgeDirection::rising)) expected.push_back(h.index);
            const auto got = detect_edges(c, {"x", thr, dir});
            REQUIRE(got.size() == expected.size());
            for (std::size_t k = 0; k < got.size(); ++k) {
                const auto lo = pts[expected[k] - 1].first, hi = pts[expected[k]].first;
                if (hi - lo >= 2) {
                    CHECK(got[k].ms > lo);
                    CHECK(got[k].ms < hi);
                } else {
                    CHECK(got[k].ms == hi);
                }
                if (k) CHECK(got[k - 1] < got[k]);
            }
        }

        // Mirror symmetry: rising on s equals falling on -s at -threshold,
        // except for samples sitting exactly on the threshold.
        if (std::none_of(vals.begin(), vals.end(), [&](double x) { return x == thr; })) {
            std::vector<std::pair<std::int64_t, double>> neg;
            for (auto [tt, x] : pts) neg.emplace_back(tt, -x);
            CHECK(detect_edges(c, {"x", thr, EdgeDirection::rising}) ==
                  detect_edges(fixtures::scalar_channel(neg), {"x", -thr, EdgeDirection::falling}));
        }
    }
}

TEST_CASE("peak trigger examples")
{
    const auto one = detect_peaks(series({0, 1, 0}), {"x", 0.0, 0, PeakPolarity::maxima});
    REQUIRE(one.size() == 1);
    CHECK(one[0].ms == 100);
    CHECK(detect_peaks(series({0, 1, 2, 3}), {"x", 0.0, 0, PeakPolarity::maxima}).empty());

    // Plateau: middle sample.
    const auto flat = detect_peaks(series({0, 2, 2, 2, 0}), {"x", 0.0, 0, PeakPolarity::maxima});
    REQUIRE(flat.size() == 1);
    CHECK(flat[0].ms == 200);

    const auto minima = detect_peaks(series({3, 1, 3, 0, 3}), {"x", 0.0, 0, PeakPolarity::minima});
    CHECK(minima == std::vector<Timestamp>{Timestamp{100}, Timestamp{300}});
}

TEST_CASE("peak prominence and separation")
{
    // Peaks at 1 (h=5, prominence 5), 3 (h=4.5, prominence 0.5), 5 (h=3, prominence 3).
    const Channel c = series({0, 5, 4, 4.5, 0, 3, 0});
    auto peaks = [&](double prom, std::int64_t sep) {
        std::vector<std::int64_t> out;
        for (auto t : detect_peaks(c, {"x", prom, sep, PeakPolarity::maxima})) out.push_back(t.ms);
        return out;
    };
    CHECK(peaks(0.0, 0) == std::vector<std::int64_t>{100, 300, 500});
    CHECK(peaks(1.0, 0) == std::vector<std::int64_t>{100, 500});
    CHECK(peaks(0.0, 250) == std::vector<std::int64_t>{100, 500});
    CHECK(peaks(0.0, 500) == std::vector<std::int64_t>{100});

    // Equal heights: the earlier one survives.
    const auto tie = detect_peaks(series({0, 2, 0, 2, 0}), {"x", 0.0, 300, PeakPolarity::maxima});
    CHECK(tie == std::vector<Timestamp>{Timestamp{100}});
}

TEST_CASE("peak trigger against the neighbor-comparison oracle")
{
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> level(0, 6);
    std::uniform_real_distribution<double> v(-1.0, 1.0);
    for (int round = 0; round < 50; ++round) {
        std::vector<double> vals(200);
        for (auto& x : vals) x = (round % 2) ? double(level(rng)) : v(rng);
        const auto expected = oracle::local_maxima(vals);
        const auto got = detect_peaks(series(vals, 10), {"x", 0.0, 0, PeakPolarity::maxima});
        REQUIRE(got.size() == expected.size());
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k].ms == static_cast<std::int64_t>(expected[k]) * 10);
    }
}

namespace {

// Fixes along a north-south line through a point 47N 15E, one every 100 ms.
Channel north_walk(const std::vector<double>& north_m)
{
    const LocalFrame f({47.0, 15.0});
    std::vector<std::pair<std::int64_t, GeoPoint>> fixes;
    for (std::size_t i = 0; i < north_m.size(); ++i)
        fixes.emplace_back(static_cast<std::int64_t>(i) * 100, f.unproject({0.0, north_m[i]}));
    return fixtures::track(fixes);
}

GateTriggerSpec east_west_gate(GateDirection dir = GateDirection::any)
{
    const LocalFrame f({47.0, 15.0});
    // p1 west, p2 east: moving north crosses from right to left.
    return {"position", f.unproject({-5.0, 0.0}), f.unproject({5.0, 0.0}), dir};
}

} // namespace

TEST_CASE("gate crossing on a straight track")
{
    const auto t = detect_gate_crossings(north_walk({-2.0, -1.0, 0.5, 2.0}), east_west_gate());
    REQUIRE(t.size() == 1);
    // 2/3 of the way from 100 to 200 ms.
    CHECK(t[0].ms == 167);

    CHECK(detect_gate_crossings(north_walk({1.0, 2.0, 3.0}), east_west_gate()).empty());

    // A fix exactly on the gate is reported once.
    CHECK(detect_gate_crossings(north_walk({-1.0, 0.0, 1.0}), east_west_gate()).size() == 1);
    // Touch and return: one hit, but no side change.
    CHECK(detect_gate_crossings(north_walk({-1.0, 0.0, -1.0}), east_west_gate()).size() == 1);
    CHECK(detect_gate_crossings(north_walk({-1.0, 0.0, -1.0}), east_west_gate(GateDirection::right_to_left)).empty());
}

TEST_CASE("penalty-style back and forth crosses the gate three times")
{
    const auto c = north_walk({3, 1, -1, -3, -1, 1, 3, 1, -1, -3});
    CHECK(detect_gate_crossings(c, east_west_gate()).size() == 3);
    // Southbound crossings go left to right.
    CHECK(detect_gate_crossings(c, east_west_gate(GateDirection::left_to_right)).size() == 2);
    CHECK(detect_gate_crossings(c, east_west_gate(GateDirection::right_to_left)).size() == 1);
}

TEST_CASE("gate crossings match the side-change count of the oracle")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> step(-4.0, 4.0);
    const LocalFrame f({47.0, 15.0});
    const auto gate = east_west_gate();
    const PlanarPoint g1{-5.0, 0.0}, g2{5.0, 0.0};
    for (int round = 0; round < 100; ++round) {
        std::vector<std::pair<std::int64_t, GeoPoint>> fixes;
        std::vector<PlanarPoint> local;
        PlanarPoint p{step(rng), step(rng)};
        for (int i = 0; i < 80; ++i) {
            p = {std::clamp(p.x + step(rng), -12.0, 12.0), std::clamp(p.y + step(rng), -12.0, 12.0)};
            local.push_back(p);
            fixes.emplace_back(i * 100, f.unproject(p));
        }
        std::size_t expected = 0;
        for (std::size_t i = 1; i < local.size(); ++i)
            if (oracle::segments_intersect(local[i - 1], local[i], g1, g2)) ++expected;
        const auto got = detect_gate_crossings(fixtures::track(fixes), gate);
        CHECK(got.size() == expected);
        CHECK(std::is_sorted(got.begin(), got.end()));
    }
}

TEST_CASE("gate trigger input checks")
{
    CHECK_THROWS_AS(detect_gate_crossings(series({1, 2}), east_west_gate()), Error);
    CHECK_THROWS_AS(detect_gate_crossings(north_walk({1.0}), east_west_gate()), Error);
    auto bad = east_west_gate();
    bad.p2 = bad.p1;
    CHECK_THROWS_AS(detect_gate_crossings(north_walk({-1.0, 1.0}), bad), Error);
}

TEST_CASE("run_triggers merges, tags and orders")
{
    std::map<std::string, Channel> chans;
    chans.emplace("speed", series({0.0, 2.0, 0.5, 2.0}, 100, ChannelKind::speed));
    chans.emplace("accel", Channel(ChannelKind::accel, 10.0,
                                   {{Timestamp{0}, {0, 0, 0}}, {Timestamp{100}, {0, 0, 3}}, {Timestamp{200}, {0, 0, 0}}}));
    const Recording rec("r", std::move(chans));

    const std::vector<TriggerBinding> b = {
        {"SS", EdgeTriggerSpec{"speed", 1.0, EdgeDirection::falling}},
        {"SF", EdgeTriggerSpec{"speed", 1.0, EdgeDirection::rising}},
        {"HIT", PeakTriggerSpec{"accel.z", 1.0, 0, PeakPolarity::maxima}},
    };
    const auto p = run_triggers(rec, b);
    REQUIRE(p.size() == 4);
    // The recording starts below threshold: the first rise is a spurious SF.
    CHECK(p[0].node == "SF");
    CHECK(p[0].source == "edge:speed");
    CHECK(p[1].node == "HIT");
    CHECK(p[1].t == Timestamp{100});
    CHECK(p[1].source == "peak:accel.z");
    CHECK(p[2].node == "SS");
    CHECK(p[3].node == "SF");
    CHECK(std::is_sorted(p.begin(), p.end(), [](const auto& a, const auto& c) { return a.t < c.t; }));

    CHECK(run_triggers(rec, {}).empty());
    CHECK_THROWS_WITH(run_triggers(rec, std::vector<TriggerBinding>{{"X", EdgeTriggerSpec{"cadence", 1.0, EdgeDirection::rising}}}),
                      doctest::Contains("unknown channel 'cadence'"));
    CHECK(run_triggers(rec, b) == p);
}

TEST_CASE("equal timestamps order by node id")
{
    const Recording rec = fixtures::single("speed", series({0.0, 2.0}, 100, ChannelKind::speed));
    const auto p = run_triggers(rec, std::vector<TriggerBinding>{{"b", EdgeTriggerSpec{"speed", 1.0, EdgeDirection::rising}},
                                      {"a", EdgeTriggerSpec{"speed", 1.0, EdgeDirection::rising}}});
    REQUIRE(p.size() == 2);
    CHECK(p[0].node == "a");
    CHECK(p[1].node == "b");
}

TEST_CASE("synthetic race: POIs match the planted ground truth")
{
    TrackPlan plan;
    plan.noise = NoiseModel::none();
    for (auto [laps, shooting, pens] : {std::tuple{1, std::set<int>{}, std::vector<int>{}},
                                        std::tuple{6, std::set<int>{2, 4}, std::vector<int>{2, 1}}}) {
        plan.lap_count = laps;
        plan.shooting_laps = shooting;
        plan.penalties_per_bout = pens;
        auto [rec, truth] = generate(plan);
        const auto pois = run_triggers(rec, biathlon_grammar(plan).trigger_bindings());
        REQUIRE(pois.size() == truth.pois.size());
        for (std::size_t i = 0; i < pois.size(); ++i) {
            CHECK(pois[i].node == truth.pois[i].node);
            CHECK(std::abs(pois[i].t - truth.pois[i].t) <= 100);
        }
    }
}

TEST_CASE("synthetic race with default noise: same POI multiset")
{
    const TrackPlan plan;
    auto [rec, truth] = generate(plan);
    const auto pois = run_triggers(rec, biathlon_grammar(plan).trigger_bindings());
    REQUIRE(pois.size() == truth.pois.size());
    for (std::size_t i = 0; i < pois.size(); ++i) {
        CHECK(pois[i].node == truth.pois[i].node);
        // Position error shifts gate crossings by well under a second.
        CHECK(std::abs(pois[i].t - truth.pois[i].t) <= 500);
    }
}
