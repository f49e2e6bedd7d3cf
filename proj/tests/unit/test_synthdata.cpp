#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"

#include "movseq/errors.hpp"
#include "movseq/synthdata.hpp"
#include "movseq/triggers.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

using namespace movseq;

namespace {

TrackPlan short_plan()
{
    TrackPlan p;
    p.pre_race_idle_s = 20.0;
    return p;
}

std::string csv_of(const Recording& r)
{
    std::ostringstream out;
    write_recording_csv(out, r);
    return out.str();
}

std::size_t count_node(const std::vector<PlannedEvent>& v, const std::string& node)
{
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const PlannedEvent& e) { return e.node == node; }));
}

std::size_t count_node(const std::vector<PointOfInterest>& v, const std::string& node)
{
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [&](const PointOfInterest& e) { return e.node == node; }));
}

} // namespace

TEST_CASE("same seed, same bytes")
{
    const TrackPlan plan = short_plan();
    const auto a = generate(plan), b = generate(plan);
    CHECK(csv_of(a.first) == csv_of(b.first));
    CHECK(ground_truth_to_json(a.second) == ground_truth_to_json(b.second));

    TrackPlan other = plan;
    other.noise_seed = 2;
    CHECK(csv_of(generate(other).first) != csv_of(a.first));
    CHECK(generate(other).second == a.second);
}

TEST_CASE("ground truth shape of the default plan")
{
    const TrackPlan plan = short_plan();
    const GroundTruth g = plan_ground_truth(plan);
    CHECK(g.path.front().node == "S");
    CHECK(g.path.back().node == "F");
    // The race starts at the idle point, a few seconds before the S gate.
    CHECK(g.race_start == Timestamp{static_cast<std::int64_t>(plan.pre_race_idle_s * 1000)});
    CHECK(g.race_start < g.path.front().t);
    CHECK(std::is_sorted(g.path.begin(), g.path.end(),
                         [](const PathStep& a, const PathStep& b) { return a.t < b.t; }));
    // 5 lap boundaries, 2 bouts with 2 and 1 penalties.
    std::size_t pp = 0, p_entries = 0;
    for (std::size_t i = 1; i < g.path.size(); ++i) {
        pp += g.path[i - 1].node == "P" && g.path[i].node == "P";
        p_entries += g.path[i].node == "P";
    }
    CHECK(pp == 3);
    CHECK(p_entries == 5 + 3);
    REQUIRE(g.bouts.size() == 2);
    CHECK(g.bouts[0].lap == 2);
    CHECK(g.bouts[0].penalties == 2);
    CHECK(g.bouts[0].z_accel_g == plan.prone_z_accel_g);
    CHECK(g.bouts[1].lap == 4);
    CHECK(g.bouts[1].penalties == 1);
    CHECK(g.bouts[1].z_accel_g == plan.standing_z_accel_g);
    CHECK(g.segments.size() == g.path.size() - 1);
    for (const auto& b : g.bouts) CHECK(b.end_t - b.start_t == 30000);
}

TEST_CASE("penalty count drives P crossings")
{
    for (int penalties : {0, 1, 2, 3}) {
        TrackPlan plan = short_plan();
        plan.lap_count = 2;
        plan.shooting_laps = {1};
        plan.penalties_per_bout = {penalties};
        const GroundTruth g = plan_ground_truth(plan);
        CHECK(count_node(g.pois, "P") == static_cast<std::size_t>(penalties + 1));
        std::size_t pp = 0;
        for (std::size_t i = 1; i < g.path.size(); ++i) pp += g.path[i - 1].node == "P" && g.path[i].node == "P";
        CHECK(pp == static_cast<std::size_t>(penalties));
    }
}

TEST_CASE("zero-noise one-lap race: triggers match the plan")
{
    TrackPlan plan = short_plan();
    plan.lap_count = 1;
    plan.shooting_laps = {};
    plan.penalties_per_bout = {};
    plan.noise = NoiseModel::none();
    auto [rec, truth] = generate(plan);
    const auto found = run_triggers(rec, biathlon_grammar(plan).trigger_bindings());
    REQUIRE(found.size() == truth.pois.size());
    for (std::size_t i = 0; i < found.size(); ++i) {
        CHECK(found[i].node == truth.pois[i].node);
        CHECK(std::abs(found[i].t - truth.pois[i].t) <= 100);
    }
}

TEST_CASE("IMU rate scales only the IMU channels")
{
    TrackPlan plan = short_plan();
    auto [base, truth] = generate(plan);
    plan.imu_rate_hz = 200.0;
    auto [fast, truth_fast] = generate(plan);
    CHECK(fast.channel("accel").size() == 4 * base.channel("accel").size());
    CHECK(fast.channel("gyro").size() == 4 * base.channel("gyro").size());
    CHECK(fast.channel("position").size() == base.channel("position").size());
    CHECK(truth_fast == truth);

    plan.include_gyro = false;
    CHECK_FALSE(generate(plan).first.find("gyro"));
}

TEST_CASE("sample grid")
{
    const TrackPlan plan = short_plan();
    auto [rec, truth] = generate(plan);
    CHECK(truth.duration_ms % 1000 == 0);
    const Channel& pos = rec.channel("position");
    CHECK(pos[0].t == Timestamp{0});
    CHECK(pos[1].t == Timestamp{100});
    CHECK(pos.samples().back().t.ms < truth.duration_ms);
    const Channel& acc = rec.channel("accel");
    CHECK(acc[1].t == Timestamp{20});
    for (const auto& s : rec.channel("speed").samples()) CHECK(s.v[0] >= 0.0);
}

TEST_CASE("warm-up injection")
{
    TrackPlan plan;
    plan.pre_race_idle_s = 120.0;
    auto [rec, truth] = generate(plan);
    const auto bindings = biathlon_grammar(plan).trigger_bindings();

    SUBCASE("zero crossings leave the recording unchanged")
    {
        CHECK(csv_of(inject_noise_events(rec, plan, {})) == csv_of(rec));
        CHECK(warmup_events(plan, {}).empty());
    }

    SUBCASE("three crossings add three S firings")
    {
        const WarmupPlan w{3};
        const Recording noisy = inject_noise_events(rec, plan, w);
        const auto clean_pois = run_triggers(rec, bindings);
        const auto noisy_pois = run_triggers(noisy, bindings);
        CHECK(count_node(clean_pois, "S") == 1);
        CHECK(count_node(noisy_pois, "S") == 4);

        const auto planned = warmup_events(plan, w);
        CHECK(count_node(planned, "S") == 3);
        for (const auto& e : planned) {
            CHECK_FALSE(e.on_path);
            const bool seen = std::any_of(noisy_pois.begin(), noisy_pois.end(), [&](const PointOfInterest& p) {
                return p.node == e.node && std::abs(p.t - e.t) <= 500;
            });
            CHECK(seen);
        }
        // Race part untouched.
        CHECK(slice(noisy.channel("position"), truth.race_start, Timestamp{truth.duration_ms}) ==
              slice(rec.channel("position"), truth.race_start, Timestamp{truth.duration_ms}));
        CHECK(noisy.channel("accel") == rec.channel("accel"));
    }

    SUBCASE("warm-up that runs into the race is rejected")
    {
        CHECK_THROWS_WITH_AS(inject_noise_events(rec, plan, {5}), doctest::Contains("before the race start"), Error);
        CHECK_THROWS_AS(inject_noise_events(rec, plan, {-1}), Error);
    }
}

TEST_CASE("plan validation")
{
    auto bad = [](auto mutate) {
        TrackPlan p;
        mutate(p);
        CHECK_THROWS_AS(validate(p), Error);
    };
    CHECK_NOTHROW(validate(TrackPlan{}));
    bad([](TrackPlan& p) { p.lap_count = 0; });
    bad([](TrackPlan& p) { p.shooting_laps = {6}; });
    bad([](TrackPlan& p) { p.penalties_per_bout = {1}; });
    bad([](TrackPlan& p) { p.penalties_per_bout = {-1, 0}; });
    bad([](TrackPlan& p) { p.base_speed_mps = 0.5; });
    bad([](TrackPlan& p) { p.imu_rate_hz = 0; });
    bad([](TrackPlan& p) { p.pre_race_idle_s = 0.5; });
    bad([](TrackPlan& p) { p.noise.position_sigma_m = 50; });
    bad([](TrackPlan& p) { p.origin = {95, 0}; });
}

TEST_CASE("plan JSON")
{
    TrackPlan p;
    p.id = "race7";
    p.penalties_per_bout = {3, 0};
    p.noise_seed = 12345678901234ULL;
    p.warmup_crossings = 2;
    CHECK(parse_plan_text(plan_to_json(p)) == p);

    const TrackPlan partial = parse_plan_text(R"({"penalties_per_bout":[1,1],"noise_seed":9})");
    CHECK(partial.penalties_per_bout == std::vector<int>{1, 1});
    CHECK(partial.noise_seed == 9);
    CHECK(partial.lap_count == 6);

    CHECK_THROWS_WITH(parse_plan_text(R"({"laps":3})"), doctest::Contains("unknown key 'laps'"));
    CHECK_THROWS_WITH(parse_plan_text(R"({"lap_count":"six"})"), doctest::Contains("wrong type"));
    CHECK_THROWS_WITH(parse_plan_text("[1]"), doctest::Contains("object"));
    CHECK_THROWS_WITH(parse_plan_text(R"({"lap_count":1})"), doctest::Contains("shooting lap"));

    fixtures::TempDir dir("plan");
    CHECK_THROWS_WITH(load_plan(dir / "nope.json"), doctest::Contains("nope.json"));
    fixtures::write_file(dir / "p.json", plan_to_json(p));
    CHECK(load_plan(dir / "p.json") == p);
}

TEST_CASE("ground truth JSON")
{
    const GroundTruth g = plan_ground_truth(short_plan());
    const auto doc = nlohmann::json::parse(ground_truth_to_json(g));
    CHECK(doc["path"].size() == g.path.size());
    CHECK(doc["shooting_bouts"].size() == 2);
    CHECK(doc["segments"].size() == g.segments.size());
}

TEST_CASE("race grammar bounds")
{
    const MovementGraph g = biathlon_grammar(TrackPlan{});
    CHECK(g.nodes().size() == 9);
    CHECK(g.edges().size() == 11);
    for (const auto& e : g.edges()) {
        REQUIRE(e.max_ms);
        if (e.from == "S") CHECK(*e.max_ms == 60000);
        CHECK_FALSE(e.min_ms);
    }
    // Every planted segment fits its edge.
    TrackPlan many;
    many.penalties_per_bout = {3, 3};
    many.pre_race_idle_s = 20.0;
    const GroundTruth truth = plan_ground_truth(many);
    for (const auto& s : truth.segments) {
        const auto it = std::find_if(g.edges().begin(), g.edges().end(),
                                     [&](const EdgeSpec& e) { return e.from == s.from && e.to == s.to; });
        REQUIRE(it != g.edges().end());
        CHECK(it->admits(s.duration_ms));
    }
}
