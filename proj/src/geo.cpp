#include "movseq/geo.hpp"

#include "movseq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace movseq {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double square(double x) { return x * x; }

PlanarPoint operator-(PlanarPoint a, PlanarPoint b) { return {a.x - b.x, a.y - b.y}; }

double cross(PlanarPoint a, PlanarPoint b) { return a.x * b.y - a.y * b.x; }

double dot(PlanarPoint a, PlanarPoint b) { return a.x * b.x + a.y * b.y; }

PlanarPoint along(PlanarPoint a1, PlanarPoint a2, double u)
{
    return {a1.x + u * (a2.x - a1.x), a1.y + u * (a2.y - a1.y)};
}

// Position of p along a (possibly degenerate) segment, if p lies on it.
std::optional<double> locate_on_segment(PlanarPoint a1, PlanarPoint a2, PlanarPoint p)
{
    PlanarPoint r = a2 - a1;
    PlanarPoint d = p - a1;
    if (cross(r, d) != 0.0) return std::nullopt;
    double rr = dot(r, r);
    if (rr == 0.0) return d.x == 0.0 && d.y == 0.0 ? std::optional<double>(0.0) : std::nullopt;
    double t = dot(d, r);
    if (t < 0.0 || t > rr) return std::nullopt;
    return t / rr;
}

} // namespace

double haversine_distance(GeoPoint p, GeoPoint q)
{
    const double phi1 = p.lat * kDegToRad;
    const double phi2 = q.lat * kDegToRad;
    const double dphi = (q.lat - p.lat) * kDegToRad;
    const double dlambda = (q.lon - p.lon) * kDegToRad;

    const double a = square(std::sin(dphi / 2.0)) + std::cos(phi1) * std::cos(phi2) * square(std::sin(dlambda / 2.0));
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

LocalFrame::LocalFrame(GeoPoint origin) : origin_(origin), cos_lat_(std::cos(origin.lat * kDegToRad)) {}

PlanarPoint LocalFrame::project_unchecked(GeoPoint p) const
{
    double dlon = p.lon - origin_.lon;
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    return {kEarthRadiusM * dlon * kDegToRad * cos_lat_, kEarthRadiusM * (p.lat - origin_.lat) * kDegToRad};
}

PlanarPoint LocalFrame::project(GeoPoint p) const
{
    const PlanarPoint out = project_unchecked(p);
    if (std::hypot(out.x, out.y) > kMaxProjectionDistanceM)
        throw Error("local projection: point is more than 50 km from the projection origin");
    return out;
}

GeoPoint LocalFrame::unproject(PlanarPoint p) const
{
    return {origin_.lat + p.y / kEarthRadiusM / kDegToRad,
            origin_.lon + p.x / (kEarthRadiusM * cos_lat_) / kDegToRad};
}

PlanarPoint project_local(GeoPoint origin, GeoPoint p)
{
    if (haversine_distance(origin, p) > kMaxProjectionDistanceM)
        throw Error("project_local: point is more than 50 km from the projection origin");
    return LocalFrame(origin).project(p);
}

double orientation(PlanarPoint a, PlanarPoint b, PlanarPoint c) { return cross(b - a, c - a); }

std::optional<Intersection> segment_intersection(const SegmentPair& sp)
{
    const PlanarPoint r = sp.a2 - sp.a1;
    const PlanarPoint s = sp.b2 - sp.b1;
    const PlanarPoint qp = sp.b1 - sp.a1;

    const bool a_point = r.x == 0.0 && r.y == 0.0;
    const bool b_point = s.x == 0.0 && s.y == 0.0;
    if (a_point) {
        if (locate_on_segment(sp.b1, sp.b2, sp.a1)) return Intersection{sp.a1, 0.0};
        return std::nullopt;
    }
    if (b_point) {
        if (auto u = locate_on_segment(sp.a1, sp.a2, sp.b1)) return Intersection{along(sp.a1, sp.a2, *u), *u};
        return std::nullopt;
    }

    const double denom = cross(r, s);
    if (denom == 0.0) {
        if (cross(qp, r) != 0.0) return std::nullopt; // parallel, disjoint lines
        // Collinear: project gate endpoints onto the trajectory step.
        const double rr = dot(r, r);
        const double t0 = dot(qp, r) / rr;
        const double t1 = t0 + dot(s, r) / rr;
        const double lo = std::max(0.0, std::min(t0, t1));
        const double hi = std::min(1.0, std::max(t0, t1));
        if (lo > hi) return std::nullopt;
        return Intersection{along(sp.a1, sp.a2, lo), lo};
    }

    // Compare numerators against the denominator so boundary hits are exact.
    const double tn = cross(qp, s);
    const double wn = cross(qp, r);
    if (denom > 0.0) {
        if (tn < 0.0 || tn > denom || wn < 0.0 || wn > denom) return std::nullopt;
    } else {
        if (tn > 0.0 || tn < denom || wn > 0.0 || wn < denom) return std::nullopt;
    }
    const double u = std::clamp(tn / denom, 0.0, 1.0);
    return Intersection{along(sp.a1, sp.a2, u), u};
}

} // namespace movseq
