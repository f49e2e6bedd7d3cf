#pragma once

#include "movseq/grammar.hpp"
#include "movseq/recognizer.hpp"
#include "movseq/timeseries.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace movseq {

// Invented defaults; the generator is a test fixture, not a sensor model.
struct NoiseModel {
    double position_sigma_m = 0.5; // first-order Gauss-Markov per axis
    double position_tau_s = 30.0;  // correlation time of the position error
    double speed_sigma_mps = 0.05;
    double accel_sigma_g = 0.02;
    double gyro_sigma_dps = 0.5;

    static NoiseModel none() { return {0.0, 30.0, 0.0, 0.0, 0.0}; }

    bool operator==(const NoiseModel&) const = default;
};

// Synthetic race on a fixed 400 m rounded-rectangle loop (150 m x 50 m, local
// frame east/north in meters around `origin`):
//
//   lead-in (-40,0) -> S gate -> loop start (0,0), east along the bottom
//   bottom:  UE at x=30, UL at x=120          (uphill)
//   top:     RE at x=110, shooting at x=80, RL at x=40 (range, lap boundary)
//   left:    P at y=25; each penalty adds a 100 m loop that re-crosses P
//   finish:  last lap turns south at x=130 through F at y=-20
struct TrackPlan {
    std::string id = "synthetic";
    GeoPoint origin{47.0, 15.0};
    int lap_count = 6;
    std::set<int> shooting_laps{2, 4};
    std::vector<int> penalties_per_bout{2, 1}; // one entry per shooting lap, in lap order
    double base_speed_mps = 5.0;
    double shooting_speed_mps = 0.2;
    double shooting_duration_s = 30.0;
    // Planted accel z while shooting; bouts alternate prone/standing.
    double prone_z_accel_g = 0.33;
    double standing_z_accel_g = -0.03;
    double imu_rate_hz = 50.0;
    double gnss_rate_hz = 10.0;
    double pre_race_idle_s = 60.0;
    double post_race_idle_s = 10.0;
    bool include_gyro = true;
    std::uint64_t noise_seed = 1;
    NoiseModel noise;
    int warmup_crossings = 0; // applied by the CLI through inject_noise_events

    bool operator==(const TrackPlan&) const = default;
};

// Throws Error describing the first invalid parameter.
void validate(const TrackPlan& plan);

struct GateDef {
    std::string node;
    GeoPoint p1;
    GeoPoint p2;
};

// Virtual gates of the track: S, UE, UL, RE, RL, P, F.
std::vector<GateDef> track_gates(const TrackPlan& plan);

struct PlannedEvent {
    std::string node;
    Timestamp t;
    bool on_path = true; // false for trigger firings the grammar should ignore

    bool operator==(const PlannedEvent&) const = default;
};

struct ExpectedSegment {
    int lap = 1;
    std::string from;
    std::string to;
    std::int64_t duration_ms = 0;

    bool operator==(const ExpectedSegment&) const = default;
};

struct ShootingBout {
    int lap = 1;
    Timestamp start_t;
    Timestamp end_t;
    double z_accel_g = 0.0;
    int penalties = 0;

    bool operator==(const ShootingBout&) const = default;
};

struct GroundTruth {
    std::string recording_id;
    Timestamp race_start;
    Timestamp race_end;
    std::int64_t duration_ms = 0; // recording covers [0, duration_ms)
    std::vector<PlannedEvent> pois; // every expected trigger firing, by (t, node)
    std::vector<PathStep> path;     // expected optimal solution, one part
    std::vector<ExpectedSegment> segments;
    std::vector<ShootingBout> bouts;

    bool operator==(const GroundTruth&) const = default;
};

// Event times only, without sampling any channel.
GroundTruth plan_ground_truth(const TrackPlan& plan);

// Channels: position and speed at gnss_rate_hz, accel (and gyro) at
// imu_rate_hz, sampled at round(k * 1000 / rate) ms over [0, duration).
std::pair<Recording, GroundTruth> generate(const TrackPlan& plan);

struct WarmupPlan {
    int crossings = 0;
    double speed_mps = 3.0;
    double start_s = 5.0; // seconds after recording start
};

// Replaces part of the pre-race idle with warm-up loops near the start line;
// each loop crosses gate S once. Throws Error if the loops would not finish
// before the race starts. Zero crossings returns the recording unchanged.
Recording inject_noise_events(const Recording& recording, const TrackPlan& plan, const WarmupPlan& warmup);

// Trigger firings caused by the warm-up (S crossings, speed edges).
std::vector<PlannedEvent> warmup_events(const TrackPlan& plan, const WarmupPlan& warmup);

// Grammar of the race: S->UE bounded to 60 s, every other edge to 1.5x its
// nominal duration on this track plus 5 s. SS/SF are falling/rising speed
// edges at 1 m/s, everything else a gate.
MovementGraph biathlon_grammar(const TrackPlan& plan);

TrackPlan parse_plan_text(std::string_view json_text);
TrackPlan load_plan(const std::filesystem::path& path);
std::string plan_to_json(const TrackPlan& plan);
std::string ground_truth_to_json(const GroundTruth& truth);

} // namespace movseq
