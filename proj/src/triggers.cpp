#include "movseq/triggers.hpp"

#include "movseq/errors.hpp"
#include "movseq/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace movseq {

std::string_view to_string(EdgeDirection d)
{
    switch (d) {
    case EdgeDirection::rising: return "rising";
    case EdgeDirection::falling: return "falling";
    case EdgeDirection::change: return "change";
    }
    return "?";
}

std::string_view to_string(PeakPolarity p) { return p == PeakPolarity::maxima ? "maxima" : "minima"; }

std::string_view to_string(GateDirection d)
{
    switch (d) {
    case GateDirection::any: return "any";
    case GateDirection::left_to_right: return "left_to_right";
    case GateDirection::right_to_left: return "right_to_left";
    }
    return "?";
}

void validate(const TriggerSpec& spec)
{
    if (channel_of(spec).empty()) throw Error("trigger has an empty channel name");
    if (const auto* e = std::get_if<EdgeTriggerSpec>(&spec)) {
        if (!std::isfinite(e->threshold)) throw Error("edge trigger threshold must be finite");
    } else if (const auto* p = std::get_if<PeakTriggerSpec>(&spec)) {
        if (!(p->min_prominence >= 0.0) || !std::isfinite(p->min_prominence))
            throw Error("peak trigger min_prominence must be finite and >= 0");
        if (p->min_separation_ms < 0) throw Error("peak trigger min_separation_ms must be >= 0");
    } else {
        const auto& g = std::get<GateTriggerSpec>(spec);
        if (!is_valid(g.p1) || !is_valid(g.p2)) throw Error("gate endpoint latitude/longitude out of range");
        if (g.p1 == g.p2) throw Error("gate endpoints must be distinct");
    }
}

const std::string& channel_of(const TriggerSpec& spec)
{
    return std::visit([](const auto& s) -> const std::string& { return s.channel; }, spec);
}

std::string trigger_id(const TriggerSpec& spec)
{
    const char* type = std::holds_alternative<EdgeTriggerSpec>(spec)   ? "edge"
                       : std::holds_alternative<PeakTriggerSpec>(spec) ? "peak"
                                                                       : "gate";
    return std::string(type) + ":" + channel_of(spec);
}

namespace {

// Crossing time for a fraction f in (0, 1] of the way from t0 to t1. Kept
// strictly inside (t0, t1) whenever the interval leaves room for it.
Timestamp interpolate_crossing(Timestamp t0, Timestamp t1, double f)
{
    const std::int64_t span = t1 - t0;
    auto t = t0.ms + static_cast<std::int64_t>(std::llround(f * static_cast<double>(span)));
    if (span >= 2) return Timestamp{std::clamp(t, t0.ms + 1, t1.ms - 1)};
    return t1;
}

void require_scalar(const Channel& channel, std::string_view who)
{
    if (!is_scalar(channel.kind()))
        throw Error(std::string(who) + ": channel of kind '" + std::string(to_string(channel.kind())) +
                    "' is not scalar");
}

} // namespace

std::vector<Timestamp> detect_edges(const Channel& channel, const EdgeTriggerSpec& spec)
{
    require_scalar(channel, "edge trigger");
    if (channel.size() < 2) throw Error("edge trigger: channel needs at least 2 samples");
    validate(spec);

    const bool want_rise = spec.direction != EdgeDirection::falling;
    const bool want_fall = spec.direction != EdgeDirection::rising;

    std::vector<Timestamp> out;
    auto s = channel.samples();
    bool prev_state = s[0].scalar() >= spec.threshold;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const bool state = s[i].scalar() >= spec.threshold;
        if (state != prev_state && ((state && want_rise) || (!state && want_fall))) {
            const double v0 = s[i - 1].scalar();
            const double v1 = s[i].scalar();
            out.push_back(interpolate_crossing(s[i - 1].t, s[i].t, (spec.threshold - v0) / (v1 - v0)));
        }
        prev_state = state;
    }
    return out;
}

std::vector<Timestamp> detect_peaks(const Channel& channel, const PeakTriggerSpec& spec)
{
    require_scalar(channel, "peak trigger");
    validate(spec);

    auto s = channel.samples();
    const double sign = spec.polarity == PeakPolarity::maxima ? 1.0 : -1.0;
    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) x[i] = sign * s[i].scalar();

    // Local maxima; a flat top counts once, at its middle sample.
    std::vector<std::size_t> peaks;
    std::size_t i = 1;
    while (i + 1 < x.size()) {
        if (x[i - 1] < x[i]) {
            std::size_t ahead = i + 1;
            while (ahead + 1 < x.size() && x[ahead] == x[i]) ++ahead;
            if (x[ahead] < x[i]) {
                peaks.push_back((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        ++i;
    }

    // Topographic prominence: height above the higher of the two lowest points
    // reached before climbing to something higher on either side.
    std::vector<std::size_t> kept;
    for (std::size_t p : peaks) {
        double left_min = x[p];
        for (std::size_t j = p; j-- > 0;) {
            if (x[j] > x[p]) break;
            left_min = std::min(left_min, x[j]);
        }
        double right_min = x[p];
        for (std::size_t j = p + 1; j < x.size(); ++j) {
            if (x[j] > x[p]) break;
            right_min = std::min(right_min, x[j]);
        }
        if (x[p] - std::max(left_min, right_min) >= spec.min_prominence) kept.push_back(p);
    }

    if (spec.min_separation_ms > 0 && kept.size() > 1) {
        // Visit highest first; earlier sample wins ties.
        std::vector<std::size_t> order(kept.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return x[kept[a]] > x[kept[b]]; });
        std::vector<bool> removed(kept.size(), false);
        for (std::size_t k : order) {
            if (removed[k]) continue;
            const Timestamp tk = s[kept[k]].t;
            for (std::size_t j = k; j-- > 0 && tk - s[kept[j]].t < spec.min_separation_ms;) removed[j] = true;
            for (std::size_t j = k + 1; j < kept.size() && s[kept[j]].t - tk < spec.min_separation_ms; ++j)
                removed[j] = true;
        }
        std::vector<std::size_t> filtered;
        for (std::size_t k = 0; k < kept.size(); ++k)
            if (!removed[k]) filtered.push_back(kept[k]);
        kept = std::move(filtered);
    }

    std::vector<Timestamp> out;
    out.reserve(kept.size());
    for (std::size_t p : kept) out.push_back(s[p].t);
    return out;
}

std::vector<Timestamp> detect_gate_crossings(const Channel& channel, const GateTriggerSpec& spec)
{
    if (channel.kind() != ChannelKind::position)
        throw Error("gate trigger: channel of kind '" + std::string(to_string(channel.kind())) +
                    "' is not a position channel");
    if (channel.size() < 2) throw Error("gate trigger: channel needs at least 2 fixes");
    validate(spec);

    const GeoPoint mid{(spec.p1.lat + spec.p2.lat) / 2.0, (spec.p1.lon + spec.p2.lon) / 2.0};
    const LocalFrame frame(mid);
    const PlanarPoint g1 = frame.project(spec.p1);
    const PlanarPoint g2 = frame.project(spec.p2);

    auto s = channel.samples();
    std::vector<PlanarPoint> pts(s.size());
    std::vector<int> side(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        // Far-away fixes cannot reach the gate; their distortion is harmless.
        pts[i] = frame.project_unchecked(s[i].geo());
        const double o = orientation(g1, g2, pts[i]);
        side[i] = (o > 0.0) - (o < 0.0);
    }

    auto side_before = [&](std::size_t i) {
        for (std::size_t j = i + 1; j-- > 0;)
            if (side[j] != 0) return side[j];
        return 0;
    };
    auto side_after = [&](std::size_t i) {
        for (std::size_t j = i; j < side.size(); ++j)
            if (side[j] != 0) return side[j];
        return 0;
    };

    std::vector<Timestamp> out;
    for (std::size_t i = 1; i < s.size(); ++i) {
        auto hit = segment_intersection({pts[i - 1], pts[i], g1, g2});
        if (!hit) continue;
        // A hit at the start of a step is a fix lying on the gate, which the
        // previous step already reported.
        if (hit->u == 0.0 && i > 1) continue;

        if (spec.direction != GateDirection::any) {
            const int before = side_before(i - 1);
            const int after = side_after(i);
            const bool ltr = before > 0 && after < 0;
            const bool rtl = before < 0 && after > 0;
            if (spec.direction == GateDirection::left_to_right ? !ltr : !rtl) continue;
        }
        out.push_back(interpolate_crossing(s[i - 1].t, s[i].t, hit->u));
    }
    return out;
}

namespace {

// Resolves "name" or "name.x|y|z" (axis of a 3-axis channel).
std::optional<Channel> resolve_channel(const Recording& recording, const std::string& name)
{
    if (const Channel* c = recording.find(name)) return *c;
    auto dot = name.rfind('.');
    if (dot == std::string::npos || dot + 2 != name.size()) return std::nullopt;
    const char axis = name.back();
    if (axis < 'x' || axis > 'z') return std::nullopt;
    const Channel* base = recording.find(std::string_view(name).substr(0, dot));
    if (!base || (base->kind() != ChannelKind::accel && base->kind() != ChannelKind::gyro)) return std::nullopt;
    return component(*base, axis - 'x');
}

} // namespace

std::vector<PointOfInterest> run_triggers(const Recording& recording, std::span<const TriggerBinding> bindings)
{
    std::vector<PointOfInterest> out;
    for (const auto& b : bindings) {
        try {
            validate(b.spec);
        } catch (const Error& e) {
            throw Error("node '" + b.node + "': " + e.what());
        }
        const std::string& name = channel_of(b.spec);
        // Only materialize a copy for axis selections.
        const Channel* direct = recording.find(name);
        std::optional<Channel> derived;
        if (!direct) {
            derived = resolve_channel(recording, name);
            if (!derived) throw Error("node '" + b.node + "': unknown channel '" + name + "'");
        }
        const Channel& ch = direct ? *direct : *derived;

        std::vector<Timestamp> ts;
        try {
            ts = std::visit(
                [&](const auto& spec) -> std::vector<Timestamp> {
                    using T = std::decay_t<decltype(spec)>;
                    if constexpr (std::is_same_v<T, EdgeTriggerSpec>) return detect_edges(ch, spec);
                    else if constexpr (std::is_same_v<T, PeakTriggerSpec>) return detect_peaks(ch, spec);
                    else return detect_gate_crossings(ch, spec);
                },
                b.spec);
        } catch (const Error& e) {
            throw Error("node '" + b.node + "', channel '" + name + "': " + e.what());
        }
        const std::string source = trigger_id(b.spec);
        for (Timestamp t : ts) out.push_back({b.node, t, source});
    }
    std::stable_sort(out.begin(), out.end(), [](const PointOfInterest& a, const PointOfInterest& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.node < b.node;
    });
    return out;
}

} // namespace movseq
