#pragma once

#include "movseq/timeseries.hpp"

#include <optional>

namespace movseq {

// IUGG mean Earth radius.
inline constexpr double kEarthRadiusM = 6371008.8;

// Local projection is refused beyond this distance from its origin.
inline constexpr double kMaxProjectionDistanceM = 50'000.0;

// Meters east (x) and north (y) of a projection origin.
struct PlanarPoint {
    double x = 0.0;
    double y = 0.0;

    constexpr bool operator==(const PlanarPoint&) const = default;
};

// A trajectory step a1->a2 tested against a gate b1-b2.
struct SegmentPair {
    PlanarPoint a1, a2;
    PlanarPoint b1, b2;
};

struct Intersection {
    PlanarPoint point;
    double u = 0.0; // position along a1->a2, in [0, 1]
};

double haversine_distance(GeoPoint p, GeoPoint q);

// Equirectangular projection about a fixed origin. The cosine of the origin
// latitude is computed once so projecting long tracks stays cheap.
class LocalFrame {
public:
    explicit LocalFrame(GeoPoint origin);

    GeoPoint origin() const { return origin_; }

    // Throws Error if the projected point is beyond kMaxProjectionDistanceM.
    PlanarPoint project(GeoPoint p) const;
    // No distance check; for callers that tolerate distortion far from the origin.
    PlanarPoint project_unchecked(GeoPoint p) const;
    GeoPoint unproject(PlanarPoint p) const;

private:
    GeoPoint origin_;
    double cos_lat_;
};

// Throws Error when haversine_distance(origin, p) exceeds kMaxProjectionDistanceM.
PlanarPoint project_local(GeoPoint origin, GeoPoint p);

// Twice the signed area of (a, b, c); positive when c lies left of a->b.
double orientation(PlanarPoint a, PlanarPoint b, PlanarPoint c);

// Intersection of the closed segments a1-a2 and b1-b2. Touching endpoints count.
// For collinear overlaps the point with the smallest u is returned.
std::optional<Intersection> segment_intersection(const SegmentPair& sp);

} // namespace movseq
