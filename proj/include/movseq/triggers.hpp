#pragma once

#include "movseq/timeseries.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace movseq {

enum class EdgeDirection { rising, falling, change };

// Level function: state is 1 when value >= threshold, 0 otherwise.
struct EdgeTriggerSpec {
    std::string channel;
    double threshold = 0.0;
    EdgeDirection direction = EdgeDirection::rising;

    bool operator==(const EdgeTriggerSpec&) const = default;
};

enum class PeakPolarity { maxima, minima };

struct PeakTriggerSpec {
    std::string channel;
    double min_prominence = 0.0;
    std::int64_t min_separation_ms = 0;
    PeakPolarity polarity = PeakPolarity::maxima;

    bool operator==(const PeakTriggerSpec&) const = default;
};

enum class GateDirection { any, left_to_right, right_to_left };

// Virtual gate from p1 to p2. "Left" is the side on the left when looking from
// p1 towards p2.
struct GateTriggerSpec {
    std::string channel = "position";
    GeoPoint p1;
    GeoPoint p2;
    GateDirection direction = GateDirection::any;

    bool operator==(const GateTriggerSpec&) const = default;
};

using TriggerSpec = std::variant<EdgeTriggerSpec, PeakTriggerSpec, GateTriggerSpec>;

// Throws Error describing the first invalid parameter.
void validate(const TriggerSpec& spec);

const std::string& channel_of(const TriggerSpec& spec);

// Short identifier such as "gate:position" used as the POI source.
std::string trigger_id(const TriggerSpec& spec);

std::string_view to_string(EdgeDirection d);
std::string_view to_string(PeakPolarity p);
std::string_view to_string(GateDirection d);

struct PointOfInterest {
    std::string node;
    Timestamp t;
    std::string source;

    bool operator==(const PointOfInterest&) const = default;
};

struct TriggerBinding {
    std::string node;
    TriggerSpec spec;

    bool operator==(const TriggerBinding&) const = default;
};

// Crossing timestamps, linearly interpolated between the bracketing samples and
// rounded to the millisecond. Output is strictly increasing.
std::vector<Timestamp> detect_edges(const Channel& channel, const EdgeTriggerSpec& spec);

std::vector<Timestamp> detect_peaks(const Channel& channel, const PeakTriggerSpec& spec);

std::vector<Timestamp> detect_gate_crossings(const Channel& channel, const GateTriggerSpec& spec);

// Evaluates every binding and merges the firings, sorted by time then node id.
// A channel reference may select one axis of a 3-axis channel, e.g. "accel.z".
std::vector<PointOfInterest> run_triggers(const Recording& recording, std::span<const TriggerBinding> bindings);

} // namespace movseq
