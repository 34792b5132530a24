#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "loadtrack/types.hpp"

namespace loadtrack {

// Per-frame motion series derived from one track (never crosses halftime).
//
// Alignment: step[i]/speed[i] cover the interval frame i -> i+1 and are
// attributed to frame i; accel_raw[i] = (speed[i+1]-speed[i])/dt sits at the
// shared endpoint of intervals i and i+1, i.e. frame i+1.
struct KinematicSeries {
    std::vector<double> t;          // frame timestamps, size n
    std::vector<double> step;       // meters per 0.1 s interval, size n-1
    std::vector<double> speed;      // m/s, size n-1
    std::vector<double> accel_raw;  // m/s^2 signed, size n-2
    std::vector<double> accel;      // m/s^2 signed, smoothed, size n-2

    std::size_t frame_count() const { return t.size(); }
};

// Nadaraya-Watson kernel smoother with a Gaussian kernel. Weights beyond
// 8 bandwidths are dropped; their total relative mass is below 1e-12 on the
// 0.1 s grid, so truncation is part of the smoother's definition here.
inline std::vector<double> nw_smooth(const std::vector<double>& values,
                                     const std::vector<double>& times, double bandwidth) {
    if (values.empty()) fail(ErrorCode::data_error, "nw_smooth: empty input");
    if (values.size() != times.size())
        fail(ErrorCode::data_error, "nw_smooth: values/times length mismatch");
    if (!(bandwidth > 0.0)) fail(ErrorCode::data_error, "nw_smooth: bandwidth must be positive");
    for (double v : values)
        if (!std::isfinite(v)) fail(ErrorCode::data_error, "nw_smooth: non-finite value");
    for (double t : times)
        if (!std::isfinite(t)) fail(ErrorCode::data_error, "nw_smooth: non-finite time");

    const std::size_t n = values.size();
    const double radius = 8.0 * bandwidth;
    const bool sorted = std::is_sorted(times.begin(), times.end());

    std::vector<double> out(n);
    std::size_t lo = 0;
    for (std::size_t j = 0; j < n; ++j) {
        double wsum = 0.0, vsum = 0.0;
        if (sorted) {
            while (lo < n && times[lo] < times[j] - radius) ++lo;
            for (std::size_t i = lo; i < n && times[i] <= times[j] + radius; ++i) {
                const double u = (times[j] - times[i]) / bandwidth;
                const double w = std::exp(-0.5 * u * u);
                wsum += w;
                vsum += w * values[i];
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (std::abs(times[j] - times[i]) > radius) continue;
                const double u = (times[j] - times[i]) / bandwidth;
                const double w = std::exp(-0.5 * u * u);
                wsum += w;
                vsum += w * values[i];
            }
        }
        out[j] = vsum / wsum;  // self weight is 1, never zero
    }
    return out;
}

// Step distance, scalar speed, and signed first-difference acceleration with
// Nadaraya-Watson smoothing applied to the acceleration series.
inline KinematicSeries derive_kinematics(const PlayerTrack& track, double bandwidth = 0.3) {
    const std::size_t n = track.frames.size();
    if (n < 2)
        fail(ErrorCode::data_error, "derive_kinematics: track " + track.game_id + ":" +
                                        track.player_id + " has fewer than 2 frames");

    KinematicSeries kin;
    kin.t.resize(n);
    for (std::size_t i = 0; i < n; ++i) kin.t[i] = track.frames[i].t;

    kin.step.resize(n - 1);
    kin.speed.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dx = track.frames[i + 1].x - track.frames[i].x;
        const double dy = track.frames[i + 1].y - track.frames[i].y;
        kin.step[i] = std::sqrt(dx * dx + dy * dy);
        kin.speed[i] = kin.step[i] / kFrameDt;
    }

    if (n >= 3) {
        kin.accel_raw.resize(n - 2);
        std::vector<double> accel_times(n - 2);
        for (std::size_t i = 0; i + 2 < n; ++i) {
            kin.accel_raw[i] = (kin.speed[i + 1] - kin.speed[i]) / kFrameDt;
            accel_times[i] = kin.t[i + 1];
        }
        kin.accel = nw_smooth(kin.accel_raw, accel_times, bandwidth);
    }
    return kin;
}

}  // namespace loadtrack
