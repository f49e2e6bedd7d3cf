#include "movseq/synthdata.hpp"

#include "movseq/errors.hpp"
#include "movseq/geo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace movseq {

namespace {

constexpr double kWidth = 150.0;
constexpr double kHeight = 50.0;
constexpr double kFilletRadius = 8.0;
constexpr double kShootingX = 80.0;
constexpr double kFinishTurnX = 130.0;
constexpr double kFinishEndY = -40.0;
constexpr PlanarPoint kIdlePoint{-40.0, 0.0};
constexpr double kStartGateX = -20.0;
constexpr double kPenaltyTurnY = 15.0;
constexpr double kPenaltyTopY = 35.0;
constexpr double kPenaltyWestX = -30.0;
// Posture margin around the shooting bout for the planted z-accel.
constexpr double kPostureMarginS = 0.5;

struct LocalGate {
    const char* node;
    PlanarPoint a;
    PlanarPoint b;
};

constexpr LocalGate kGates[] = {
    {"S", {kStartGateX, -5.0}, {kStartGateX, 5.0}},
    {"UE", {30.0, -5.0}, {30.0, 5.0}},
    {"UL", {120.0, -5.0}, {120.0, 5.0}},
    {"RE", {110.0, kHeight - 5.0}, {110.0, kHeight + 5.0}},
    {"RL", {40.0, kHeight - 5.0}, {40.0, kHeight + 5.0}},
    {"P", {-5.0, 25.0}, {5.0, 25.0}},
    {"F", {kFinishTurnX - 5.0, -20.0}, {kFinishTurnX + 5.0, -20.0}},
};

// tag > 0 marks the point where the shooting bout of that lap begins.
struct Vertex {
    PlanarPoint p;
    int tag = 0;
};

std::vector<Vertex> raw_route(const TrackPlan& plan)
{
    std::vector<Vertex> v{{kIdlePoint}};
    std::size_t bout = 0;
    for (int lap = 1; lap <= plan.lap_count; ++lap) {
        v.push_back({{0.0, 0.0}});
        if (lap == plan.lap_count) {
            v.push_back({{kFinishTurnX, 0.0}});
            v.push_back({{kFinishTurnX, kFinishEndY}});
            break;
        }
        v.push_back({{kWidth, 0.0}});
        v.push_back({{kWidth, kHeight}});
        int penalties = 0;
        if (plan.shooting_laps.count(lap)) {
            v.push_back({{kShootingX, kHeight}, lap});
            penalties = plan.penalties_per_bout[bout++];
        }
        v.push_back({{0.0, kHeight}});
        v.push_back({{0.0, kPenaltyTurnY}});
        for (int k = 0; k < penalties; ++k) {
            v.push_back({{kPenaltyWestX, kPenaltyTurnY}});
            v.push_back({{kPenaltyWestX, kPenaltyTopY}});
            v.push_back({{0.0, kPenaltyTopY}});
            v.push_back({{0.0, kPenaltyTurnY}});
        }
    }
    return v;
}

double dist(PlanarPoint a, PlanarPoint b) { return std::hypot(b.x - a.x, b.y - a.y); }

// Rounds every corner with a circular arc, shrinking the radius where the
// adjacent legs are too short for it.
std::vector<Vertex> fillet(const std::vector<Vertex>& in, double radius)
{
    constexpr int kArcSteps = 8;
    std::vector<Vertex> out{in.front()};
    for (std::size_t i = 1; i + 1 < in.size(); ++i) {
        const PlanarPoint a = in[i - 1].p, b = in[i].p, c = in[i + 1].p;
        const double l1 = dist(a, b), l2 = dist(b, c);
        const PlanarPoint d1{(b.x - a.x) / l1, (b.y - a.y) / l1};
        const PlanarPoint d2{(c.x - b.x) / l2, (c.y - b.y) / l2};
        const double cross = d1.x * d2.y - d1.y * d2.x;
        const double dot = d1.x * d2.x + d1.y * d2.y;
        const double theta = std::atan2(std::abs(cross), dot);
        if (theta < 1e-9 || in[i].tag != 0) {
            out.push_back(in[i]);
            continue;
        }
        const double tan_half = std::tan(theta / 2.0);
        const double tangent = std::min({radius * tan_half, l1 / 2.0, l2 / 2.0});
        const double r = tangent / tan_half;
        const PlanarPoint t1{b.x - d1.x * tangent, b.y - d1.y * tangent};
        const double side = cross > 0.0 ? 1.0 : -1.0;
        const PlanarPoint center{t1.x - d1.y * side * r, t1.y + d1.x * side * r};
        const double a0 = std::atan2(t1.y - center.y, t1.x - center.x);
        for (int k = 0; k <= kArcSteps; ++k) {
            const double ang = a0 + side * theta * k / kArcSteps;
            out.push_back({{center.x + r * std::cos(ang), center.y + r * std::sin(ang)}});
        }
    }
    out.push_back(in.back());
    return out;
}

class Polyline {
public:
    explicit Polyline(std::vector<PlanarPoint> pts) : pts_(std::move(pts)), cum_(pts_.size(), 0.0)
    {
        for (std::size_t i = 1; i < pts_.size(); ++i) cum_[i] = cum_[i - 1] + dist(pts_[i - 1], pts_[i]);
    }

    double length() const { return cum_.back(); }
    const std::vector<PlanarPoint>& points() const { return pts_; }
    double arc_at(std::size_t vertex) const { return cum_[vertex]; }

    PlanarPoint at(double s) const
    {
        if (s <= 0.0) return pts_.front();
        if (s >= length()) return pts_.back();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
        const double seg = cum_[i] - cum_[i - 1];
        const double f = seg > 0.0 ? (s - cum_[i - 1]) / seg : 0.0;
        return {pts_[i - 1].x + f * (pts_[i].x - pts_[i - 1].x), pts_[i - 1].y + f * (pts_[i].y - pts_[i - 1].y)};
    }

private:
    std::vector<PlanarPoint> pts_;
    std::vector<double> cum_;
};

// Motion at constant speed over [t0, t1); speed 0 holds position s0.
struct Leg {
    double t0;
    double t1;
    double s0;
    double speed;
};

struct Shooting {
    int lap;
    double t0;
    double t1;
    double z;
};

struct Course {
    Polyline route{{{0.0, 0.0}}};
    std::vector<Leg> legs;
    std::vector<Shooting> shootings;
    double race_start = 0.0;
    double race_end = 0.0;
    double duration = 0.0; // whole seconds

    const Leg& leg_at(double t) const
    {
        auto it = std::upper_bound(legs.begin(), legs.end(), t, [](double x, const Leg& l) { return x < l.t1; });
        return it == legs.end() ? legs.back() : *it;
    }

    PlanarPoint position(double t) const
    {
        const Leg& l = leg_at(t);
        return route.at(l.s0 + l.speed * (std::clamp(t, l.t0, l.t1) - l.t0));
    }

    double speed(double t) const { return leg_at(t).speed; }

    double time_at_arc(double s) const
    {
        for (const auto& l : legs) {
            if (l.speed <= 0.0) continue;
            const double s1 = l.s0 + l.speed * (l.t1 - l.t0);
            if (s >= l.s0 && s <= s1) return l.t0 + (s - l.s0) / l.speed;
        }
        throw Error("internal: arc position outside the course");
    }
};

Course build_course(const TrackPlan& plan)
{
    const auto route = fillet(raw_route(plan), kFilletRadius);
    std::vector<PlanarPoint> pts;
    std::vector<std::pair<double, int>> markers; // (arc, lap)
    pts.reserve(route.size());
    for (const auto& v : route) pts.push_back(v.p);
    Course c;
    c.route = Polyline(std::move(pts));
    for (std::size_t i = 0; i < route.size(); ++i)
        if (route[i].tag) markers.emplace_back(c.route.arc_at(i), route[i].tag);

    double t = plan.pre_race_idle_s;
    double s = 0.0;
    if (t > 0.0) c.legs.push_back({0.0, t, 0.0, 0.0});
    c.race_start = t;
    std::size_t bout = 0;
    for (const auto& [arc, lap] : markers) {
        const double run = (arc - s) / plan.base_speed_mps;
        c.legs.push_back({t, t + run, s, plan.base_speed_mps});
        t += run;
        s = arc;
        const double z = bout % 2 == 0 ? plan.prone_z_accel_g : plan.standing_z_accel_g;
        c.legs.push_back({t, t + plan.shooting_duration_s, s, plan.shooting_speed_mps});
        c.shootings.push_back({lap, t, t + plan.shooting_duration_s, z});
        t += plan.shooting_duration_s;
        s += plan.shooting_speed_mps * plan.shooting_duration_s;
        ++bout;
    }
    const double run = (c.route.length() - s) / plan.base_speed_mps;
    c.legs.push_back({t, t + run, s, plan.base_speed_mps});
    t += run;
    c.race_end = t;
    c.duration = std::ceil(t + plan.post_race_idle_s);
    c.legs.push_back({t, c.duration, c.route.length(), 0.0});
    return c;
}

Timestamp to_ms(double seconds) { return Timestamp{std::llround(seconds * 1000.0)}; }

// Parameter along p->q where it meets the closed gate segment a-b, if it does.
std::optional<double> crossing_param(PlanarPoint p, PlanarPoint q, PlanarPoint a, PlanarPoint b)
{
    const double rx = q.x - p.x, ry = q.y - p.y;
    const double sx = b.x - a.x, sy = b.y - a.y;
    const double den = rx * sy - ry * sx;
    if (den == 0.0) return std::nullopt;
    const double u = ((a.x - p.x) * sy - (a.y - p.y) * sx) / den;
    const double v = ((a.x - p.x) * ry - (a.y - p.y) * rx) / den;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return std::nullopt;
    return u;
}

GroundTruth truth_for(const TrackPlan& plan, const Course& c)
{
    GroundTruth g;
    g.recording_id = plan.id;
    g.race_start = to_ms(c.race_start);
    g.race_end = to_ms(c.race_end);
    g.duration_ms = std::llround(c.duration * 1000.0);

    const auto& pts = c.route.points();
    for (std::size_t i = 1; i < pts.size(); ++i) {
        for (const auto& gate : kGates) {
            auto u = crossing_param(pts[i - 1], pts[i], gate.a, gate.b);
            if (!u || (*u == 0.0 && i > 1)) continue;
            const double arc = c.route.arc_at(i - 1) + *u * dist(pts[i - 1], pts[i]);
            g.pois.push_back({gate.node, to_ms(c.time_at_arc(arc)), true});
        }
    }
    for (const auto& s : c.shootings) {
        g.pois.push_back({"SS", to_ms(s.t0), true});
        g.pois.push_back({"SF", to_ms(s.t1), true});
    }
    // Speed leaving and returning to standstill fires the shooting triggers too.
    if (plan.pre_race_idle_s > 0.0) g.pois.push_back({"SF", g.race_start, false});
    if (plan.post_race_idle_s > 0.0) g.pois.push_back({"SS", g.race_end, false});
    std::sort(g.pois.begin(), g.pois.end(), [](const PlannedEvent& a, const PlannedEvent& b) {
        return a.t != b.t ? a.t < b.t : a.node < b.node;
    });

    for (const auto& e : g.pois)
        if (e.on_path) g.path.push_back({e.node, e.t});

    int lap = 1;
    for (std::size_t i = 0; i + 1 < g.path.size(); ++i) {
        if (g.path[i].node == "RL") ++lap;
        g.segments.push_back({lap, g.path[i].node, g.path[i + 1].node, g.path[i + 1].t - g.path[i].t});
    }

    std::size_t bout = 0;
    for (const auto& s : c.shootings) {
        g.bouts.push_back({s.lap, to_ms(s.t0), to_ms(s.t1), s.z, plan.penalties_per_bout[bout++]});
    }
    return g;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t channel)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), channel};
    return std::mt19937_64(seq);
}

std::vector<Timestamp> sample_times(double rate_hz, double duration_s)
{
    const auto n = static_cast<std::int64_t>(std::ceil(rate_hz * duration_s - 1e-9));
    std::vector<Timestamp> ts;
    ts.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) ts.push_back(to_ms(static_cast<double>(k) / rate_hz));
    return ts;
}

Polyline warmup_loop()
{
    return Polyline({kIdlePoint, {-10.0, 0.0}, {-10.0, 12.0}, {-40.0, 12.0}, kIdlePoint});
}

void require(bool ok, const std::string& what)
{
    if (!ok) throw Error("track plan: " + what);
}

} // namespace

void validate(const TrackPlan& plan)
{
    require(!plan.id.empty(), "id must not be empty");
    require(is_valid(plan.origin), "origin latitude/longitude out of range");
    require(plan.lap_count >= 1, "lap_count must be >= 1");
    for (int lap : plan.shooting_laps)
        require(lap >= 1 && lap < plan.lap_count, "shooting lap " + std::to_string(lap) +
                                                      " must be between 1 and lap_count - 1");
    require(plan.penalties_per_bout.size() == plan.shooting_laps.size(),
            "penalties_per_bout needs one entry per shooting lap (" + std::to_string(plan.shooting_laps.size()) +
                ")");
    for (int p : plan.penalties_per_bout) require(p >= 0 && p <= 5, "penalties per bout must be in [0, 5]");
    require(std::isfinite(plan.base_speed_mps) && plan.base_speed_mps > 1.0 && plan.base_speed_mps <= 15.0,
            "base_speed_mps must be in (1, 15]");
    require(plan.shooting_speed_mps >= 0.0 && plan.shooting_speed_mps < 1.0,
            "shooting_speed_mps must be in [0, 1)");
    require(std::isfinite(plan.shooting_duration_s) && plan.shooting_duration_s > 0.0,
            "shooting_duration_s must be > 0");
    require(plan.shooting_speed_mps * plan.shooting_duration_s <= 20.0,
            "shooting bout drifts more than 20 m along the range");
    require(std::isfinite(plan.imu_rate_hz) && plan.imu_rate_hz > 0.0 && plan.imu_rate_hz <= 1000.0,
            "imu_rate_hz must be in (0, 1000]");
    require(std::isfinite(plan.gnss_rate_hz) && plan.gnss_rate_hz > 0.0 && plan.gnss_rate_hz <= 100.0,
            "gnss_rate_hz must be in (0, 100]");
    require(std::isfinite(plan.pre_race_idle_s) && plan.pre_race_idle_s >= 1.0, "pre_race_idle_s must be >= 1");
    require(std::isfinite(plan.post_race_idle_s) && plan.post_race_idle_s >= 1.0, "post_race_idle_s must be >= 1");
    require(std::isfinite(plan.prone_z_accel_g) && std::isfinite(plan.standing_z_accel_g),
            "z-accel values must be finite");
    const auto& n = plan.noise;
    require(n.position_sigma_m >= 0.0 && n.speed_sigma_mps >= 0.0 && n.accel_sigma_g >= 0.0 &&
                n.gyro_sigma_dps >= 0.0,
            "noise sigmas must be >= 0");
    require(n.position_sigma_m <= 5.0, "position noise above 5 m would make gate crossings ambiguous");
    require(n.speed_sigma_mps <= 0.2, "speed noise above 0.2 m/s would fire spurious speed edges");
    require(n.position_tau_s > 0.0, "position_tau_s must be > 0");
    require(plan.warmup_crossings >= 0, "warmup_crossings must be >= 0");
}

std::vector<GateDef> track_gates(const TrackPlan& plan)
{
    const LocalFrame frame(plan.origin);
    std::vector<GateDef> out;
    for (const auto& g : kGates) out.push_back({g.node, frame.unproject(g.a), frame.unproject(g.b)});
    return out;
}

GroundTruth plan_ground_truth(const TrackPlan& plan)
{
    validate(plan);
    return truth_for(plan, build_course(plan));
}

std::pair<Recording, GroundTruth> generate(const TrackPlan& plan)
{
    validate(plan);
    const Course course = build_course(plan);
    const LocalFrame frame(plan.origin);
    const NoiseModel& nm = plan.noise;
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto gnss_t = sample_times(plan.gnss_rate_hz, course.duration);
    std::vector<Sample> pos, spd;
    pos.reserve(gnss_t.size());
    spd.reserve(gnss_t.size());
    {
        auto rng_pos = stream(plan.noise_seed, 1);
        auto rng_spd = stream(plan.noise_seed, 2);
        const double rho = std::exp(-1.0 / (plan.gnss_rate_hz * nm.position_tau_s));
        const double innov = nm.position_sigma_m * std::sqrt(1.0 - rho * rho);
        double ex = 0.0, ey = 0.0;
        bool first = true;
        for (Timestamp t : gnss_t) {
            const double ts = static_cast<double>(t.ms) / 1000.0;
            PlanarPoint p = course.position(ts);
            if (nm.position_sigma_m > 0.0) {
                if (first) {
                    ex = nm.position_sigma_m * normal(rng_pos);
                    ey = nm.position_sigma_m * normal(rng_pos);
                } else {
                    ex = rho * ex + innov * normal(rng_pos);
                    ey = rho * ey + innov * normal(rng_pos);
                }
                p.x += ex;
                p.y += ey;
            }
            first = false;
            const GeoPoint g = frame.unproject(p);
            pos.push_back({t, {g.lat, g.lon, 0.0}});

            double v = course.speed(ts);
            if (nm.speed_sigma_mps > 0.0) v = std::max(0.0, v + nm.speed_sigma_mps * normal(rng_spd));
            spd.push_back({t, {v, 0.0, 0.0}});
        }
    }

    const auto imu_t = sample_times(plan.imu_rate_hz, course.duration);
    std::vector<Sample> acc, gyr;
    acc.reserve(imu_t.size());
    {
        auto rng_acc = stream(plan.noise_seed, 3);
        auto rng_gyr = stream(plan.noise_seed, 4);
        std::size_t shot = 0;
        for (Timestamp t : imu_t) {
            const double ts = static_cast<double>(t.ms) / 1000.0;
            while (shot < course.shootings.size() && ts > course.shootings[shot].t1 + kPostureMarginS) ++shot;
            std::array<double, 3> a{0.0, 0.0, 1.0};
            if (shot < course.shootings.size() && ts >= course.shootings[shot].t0 - kPostureMarginS) {
                a[2] = course.shootings[shot].z;
            } else if (course.speed(ts) > 1.0) {
                // Stride rhythm while skiing.
                a[0] = 0.3 * std::sin(2.0 * std::numbers::pi * ts);
            }
            if (nm.accel_sigma_g > 0.0)
                for (auto& x : a) x += nm.accel_sigma_g * normal(rng_acc);
            acc.push_back({t, a});
            if (plan.include_gyro) {
                std::array<double, 3> w{};
                if (nm.gyro_sigma_dps > 0.0)
                    for (auto& x : w) x = nm.gyro_sigma_dps * normal(rng_gyr);
                gyr.push_back({t, w});
            }
        }
    }

    std::map<std::string, Channel> channels;
    channels.emplace("position", Channel(ChannelKind::position, plan.gnss_rate_hz, std::move(pos)));
    channels.emplace("speed", Channel(ChannelKind::speed, plan.gnss_rate_hz, std::move(spd)));
    channels.emplace("accel", Channel(ChannelKind::accel, plan.imu_rate_hz, std::move(acc)));
    if (plan.include_gyro) channels.emplace("gyro", Channel(ChannelKind::gyro, plan.imu_rate_hz, std::move(gyr)));

    return {Recording(plan.id, std::move(channels)), truth_for(plan, course)};
}

namespace {

struct WarmupWindow {
    double t0;
    double t1;
    double loop_s;
};

WarmupWindow warmup_window(const TrackPlan& plan, const WarmupPlan& w)
{
    validate(plan);
    if (w.crossings < 0) throw Error("warm-up: crossings must be >= 0");
    if (!(w.speed_mps > 1.0) || !std::isfinite(w.speed_mps)) throw Error("warm-up: speed must be > 1 m/s");
    if (!(w.start_s > 0.0)) throw Error("warm-up: start must be after the recording start");
    const double loop_s = warmup_loop().length() / w.speed_mps;
    const WarmupWindow win{w.start_s, w.start_s + w.crossings * loop_s, loop_s};
    // Keep the warm-up's own speed edges apart from the race start edge.
    if (win.t1 + 2.0 > plan.pre_race_idle_s) {
        std::ostringstream msg;
        msg << "warm-up: " << w.crossings << " crossing(s) end at " << win.t1
            << " s, which is not at least 2 s before the race start at " << plan.pre_race_idle_s << " s";
        throw Error(msg.str());
    }
    return win;
}

} // namespace

Recording inject_noise_events(const Recording& recording, const TrackPlan& plan, const WarmupPlan& warmup)
{
    const WarmupWindow win = warmup_window(plan, warmup);
    if (warmup.crossings == 0) return recording;

    const Polyline loop = warmup_loop();
    const LocalFrame frame(plan.origin);
    auto in_window = [&](Timestamp t) {
        const double ts = static_cast<double>(t.ms) / 1000.0;
        return ts >= win.t0 && ts < win.t1;
    };

    std::map<std::string, Channel> channels = recording.channels();
    for (auto& [name, ch] : channels) {
        if (ch.kind() != ChannelKind::position && ch.kind() != ChannelKind::speed) continue;
        std::vector<Sample> s(ch.samples().begin(), ch.samples().end());
        for (auto& x : s) {
            if (!in_window(x.t)) continue;
            const double ts = static_cast<double>(x.t.ms) / 1000.0;
            if (ch.kind() == ChannelKind::speed) {
                x.v[0] += warmup.speed_mps;
                continue;
            }
            // Keep the sample's own position error.
            const PlanarPoint orig = frame.project(x.geo());
            const PlanarPoint p = loop.at(std::fmod((ts - win.t0) * warmup.speed_mps, loop.length()));
            const GeoPoint g = frame.unproject({p.x + orig.x - kIdlePoint.x, p.y + orig.y - kIdlePoint.y});
            x.v[0] = g.lat;
            x.v[1] = g.lon;
        }
        ch = Channel(ch.kind(), ch.nominal_rate_hz(), std::move(s));
    }
    return Recording(recording.id(), std::move(channels));
}

std::vector<PlannedEvent> warmup_events(const TrackPlan& plan, const WarmupPlan& warmup)
{
    const WarmupWindow win = warmup_window(plan, warmup);
    std::vector<PlannedEvent> out;
    if (warmup.crossings == 0) return out;
    out.push_back({"SF", to_ms(win.t0), false});
    const double to_gate = (kStartGateX - kIdlePoint.x) / warmup.speed_mps;
    for (int i = 0; i < warmup.crossings; ++i) out.push_back({"S", to_ms(win.t0 + i * win.loop_s + to_gate), false});
    out.push_back({"SS", to_ms(win.t1), false});
    return out;
}

MovementGraph biathlon_grammar(const TrackPlan& plan)
{
    // One lap of every kind: shooting with a penalty, plain, and the finish.
    TrackPlan ref = plan;
    ref.lap_count = 3;
    ref.shooting_laps = {1};
    ref.penalties_per_bout = {1};
    ref.warmup_crossings = 0;
    const GroundTruth g = plan_ground_truth(ref);

    std::map<std::pair<std::string, std::string>, std::int64_t> nominal;
    for (std::size_t i = 1; i < g.path.size(); ++i) {
        auto& d = nominal[{g.path[i - 1].node, g.path[i].node}];
        d = std::max(d, g.path[i].t - g.path[i - 1].t);
    }

    std::vector<NodeSpec> nodes = {
        {"S", "Start", true, false},         {"UE", "Enter uphill", false, false},
        {"UL", "Leave uphill", false, false}, {"RE", "Enter shooting range", false, false},
        {"SS", "Start shooting", false, false}, {"SF", "Finish shooting", false, false},
        {"RL", "Leave shooting range", false, false}, {"P", "Penalty round", false, false},
        {"F", "Finish", false, true},
    };
    const std::pair<const char*, const char*> dependencies[] = {
        {"S", "UE"},  {"UE", "UL"}, {"UL", "RE"}, {"UL", "F"}, {"RE", "RL"}, {"RE", "SS"},
        {"SS", "SF"}, {"SF", "RL"}, {"RL", "P"},  {"P", "P"},  {"P", "UE"},
    };
    std::vector<EdgeSpec> edges;
    for (const auto& [from, to] : dependencies) {
        EdgeSpec e{from, to, std::nullopt, std::nullopt};
        if (e.from == "S") {
            // Only the last start crossing before the uphill counts.
            e.max_ms = 60'000;
        } else {
            const auto it = nominal.find({from, to});
            if (it == nominal.end()) throw Error(std::string("internal: no reference duration for ") + from + "->" + to);
            e.max_ms = std::llround(1.5 * static_cast<double>(it->second)) + 5'000;
        }
        edges.push_back(std::move(e));
    }

    std::map<std::string, TriggerSpec> bindings;
    for (const auto& gate : track_gates(plan))
        bindings.emplace(gate.node, GateTriggerSpec{"position", gate.p1, gate.p2, GateDirection::any});
    bindings.emplace("SS", EdgeTriggerSpec{"speed", 1.0, EdgeDirection::falling});
    bindings.emplace("SF", EdgeTriggerSpec{"speed", 1.0, EdgeDirection::rising});
    return MovementGraph(std::move(nodes), std::move(edges), std::move(bindings));
}

// --- JSON -------------------------------------------------------------------

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& where)
{
    for (const auto& [key, value] : obj.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw Error(where + ": key '" + key + "' has the wrong type");
    }
}

} // namespace

TrackPlan parse_plan_text(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("track plan: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error("track plan: top level must be an object");
    const std::string where = "track plan";
    reject_unknown(doc,
                   {"id", "origin", "lap_count", "shooting_laps", "penalties_per_bout", "base_speed_mps",
                    "shooting_speed_mps", "shooting_duration_s", "prone_z_accel_g", "standing_z_accel_g",
                    "imu_rate_hz", "gnss_rate_hz", "pre_race_idle_s", "post_race_idle_s", "include_gyro",
                    "noise_seed", "noise", "warmup_crossings"},
                   where);
    TrackPlan p;
    read(doc, "id", p.id, where);
    if (auto it = doc.find("origin"); it != doc.end()) {
        if (!it->is_object()) throw Error("track plan: origin must be an object");
        reject_unknown(*it, {"lat", "lon"}, "track plan origin");
        read(*it, "lat", p.origin.lat, where);
        read(*it, "lon", p.origin.lon, where);
    }
    read(doc, "lap_count", p.lap_count, where);
    if (doc.contains("shooting_laps")) {
        std::vector<int> laps;
        read(doc, "shooting_laps", laps, where);
        p.shooting_laps = std::set<int>(laps.begin(), laps.end());
        if (p.shooting_laps.size() != laps.size()) throw Error("track plan: duplicate shooting lap");
    }
    read(doc, "penalties_per_bout", p.penalties_per_bout, where);
    read(doc, "base_speed_mps", p.base_speed_mps, where);
    read(doc, "shooting_speed_mps", p.shooting_speed_mps, where);
    read(doc, "shooting_duration_s", p.shooting_duration_s, where);
    read(doc, "prone_z_accel_g", p.prone_z_accel_g, where);
    read(doc, "standing_z_accel_g", p.standing_z_accel_g, where);
    read(doc, "imu_rate_hz", p.imu_rate_hz, where);
    read(doc, "gnss_rate_hz", p.gnss_rate_hz, where);
    read(doc, "pre_race_idle_s", p.pre_race_idle_s, where);
    read(doc, "post_race_idle_s", p.post_race_idle_s, where);
    read(doc, "include_gyro", p.include_gyro, where);
    read(doc, "noise_seed", p.noise_seed, where);
    read(doc, "warmup_crossings", p.warmup_crossings, where);
    if (auto it = doc.find("noise"); it != doc.end()) {
        if (!it->is_object()) throw Error("track plan: noise must be an object");
        const std::string nw = "track plan noise";
        reject_unknown(*it, {"position_sigma_m", "position_tau_s", "speed_sigma_mps", "accel_sigma_g", "gyro_sigma_dps"},
                       nw);
        read(*it, "position_sigma_m", p.noise.position_sigma_m, nw);
        read(*it, "position_tau_s", p.noise.position_tau_s, nw);
        read(*it, "speed_sigma_mps", p.noise.speed_sigma_mps, nw);
        read(*it, "accel_sigma_g", p.noise.accel_sigma_g, nw);
        read(*it, "gyro_sigma_dps", p.noise.gyro_sigma_dps, nw);
    }
    validate(p);
    return p;
}

TrackPlan load_plan(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open track plan '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_plan_text(buf.str());
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::string plan_to_json(const TrackPlan& p)
{
    json doc = {
        {"id", p.id},
        {"origin", {{"lat", p.origin.lat}, {"lon", p.origin.lon}}},
        {"lap_count", p.lap_count},
        {"shooting_laps", std::vector<int>(p.shooting_laps.begin(), p.shooting_laps.end())},
        {"penalties_per_bout", p.penalties_per_bout},
        {"base_speed_mps", p.base_speed_mps},
        {"shooting_speed_mps", p.shooting_speed_mps},
        {"shooting_duration_s", p.shooting_duration_s},
        {"prone_z_accel_g", p.prone_z_accel_g},
        {"standing_z_accel_g", p.standing_z_accel_g},
        {"imu_rate_hz", p.imu_rate_hz},
        {"gnss_rate_hz", p.gnss_rate_hz},
        {"pre_race_idle_s", p.pre_race_idle_s},
        {"post_race_idle_s", p.post_race_idle_s},
        {"include_gyro", p.include_gyro},
        {"noise_seed", p.noise_seed},
        {"noise",
         {{"position_sigma_m", p.noise.position_sigma_m},
          {"position_tau_s", p.noise.position_tau_s},
          {"speed_sigma_mps", p.noise.speed_sigma_mps},
          {"accel_sigma_g", p.noise.accel_sigma_g},
          {"gyro_sigma_dps", p.noise.gyro_sigma_dps}}},
        {"warmup_crossings", p.warmup_crossings},
    };
    return doc.dump(2) + "\n";
}

std::string ground_truth_to_json(const GroundTruth& g)
{
    json pois = json::array();
    for (const auto& e : g.pois) pois.push_back({{"node", e.node}, {"t_ms", e.t.ms}, {"on_path", e.on_path}});
    json path = json::array();
    for (const auto& s : g.path) path.push_back({{"node", s.node}, {"t_ms", s.t.ms}});
    json segments = json::array();
    for (const auto& s : g.segments)
        segments.push_back({{"lap", s.lap}, {"from", s.from}, {"to", s.to}, {"duration_ms", s.duration_ms}});
    json bouts = json::array();
    for (const auto& b : g.bouts)
        bouts.push_back({{"lap", b.lap},
                         {"start_ms", b.start_t.ms},
                         {"end_ms", b.end_t.ms},
                         {"z_accel_g", b.z_accel_g},
                         {"penalties", b.penalties}});
    json doc = {
        {"recording_id", g.recording_id},
        {"race_start_ms", g.race_start.ms},
        {"race_end_ms", g.race_end.ms},
        {"duration_ms", g.duration_ms},
        {"pois", pois},
        {"path", path},
        {"segments", segments},
        {"shooting_bouts", bouts},
    };
    return doc.dump(2) + "\n";
}

} // namespace movseq
