#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "loadtrack/csv.hpp"
#include "loadtrack/types.hpp"

namespace loadtrack {

// Piecewise-linear path through (t, x, y) knots, constant before the first
// and after the last knot.
struct CameraPath {
    struct Knot {
        double t, x, y;
    };
    std::vector<Knot> knots;

    Point at(double t) const {
        const Knot* first = &knots.front();
        const Knot* last = &knots.back();
        if (t <= first->t) return {first->x, first->y};
        if (t >= last->t) return {last->x, last->y};
        // first knot with knot.t > t
        auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double v, const Knot& k) { return v < k.t; });
        const Knot& hi = *it;
        const Knot& lo = *(it - 1);
        const double u = (t - lo.t) / (hi.t - lo.t);
        return {lo.x + u * (hi.x - lo.x), lo.y + u * (hi.y - lo.y)};
    }
};

// Simulated broadcast camera: linear interpolation between event locations.
// Duplicate timestamps with equal locations collapse to one knot; with
// different locations they are contradictory and rejected.
inline CameraPath build_camera_path(const std::vector<Event>& events) {
    if (events.empty()) fail(ErrorCode::data_error, "cannot build camera path from zero events");
    std::vector<CameraPath::Knot> knots;
    knots.reserve(events.size());
    for (const Event& e : events) knots.push_back({e.t, e.x, e.y});
    std::stable_sort(knots.begin(), knots.end(),
                     [](const CameraPath::Knot& a, const CameraPath::Knot& b) { return a.t < b.t; });

    CameraPath path;
    path.knots.reserve(knots.size());
    for (const auto& k : knots) {
        if (!path.knots.empty() && path.knots.back().t == k.t) {
            if (path.knots.back().x != k.x || path.knots.back().y != k.y)
                fail(ErrorCode::data_error,
                     "two events at t=" + format_double(k.t) + " with different locations");
            continue;  // exact duplicate
        }
        path.knots.push_back(k);
    }
    return path;
}

// Frame i is observed iff it lies inside the closed window box centered on
// the camera position at t_i.
inline VisibilityMask censor(const PlayerTrack& track, const CameraPath& path,
                             const CameraWindow& window) {
    const double hw = window.width / 2.0;
    const double hh = window.height / 2.0;
    VisibilityMask mask(track.frames.size(), 0);
    for (std::size_t i = 0; i < track.frames.size(); ++i) {
        const Frame& f = track.frames[i];
        const Point c = path.at(f.t);
        mask[i] = (std::abs(f.x - c.x) <= hw && std::abs(f.y - c.y) <= hh) ? 1 : 0;
    }
    return mask;
}

}  // namespace loadtrack
