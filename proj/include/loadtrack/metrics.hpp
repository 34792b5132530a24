#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "loadtrack/kinematics.hpp"
#include "loadtrack/types.hpp"

namespace loadtrack {

enum class BandKind : std::uint8_t { velocity, acceleration };

// Half-open interval [lo, hi); hi may be +inf.
struct Band {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    BandKind kind = BandKind::velocity;

    bool contains(double v) const { return v >= lo && v < hi; }
};

struct BandConfig {
    std::array<Band, 3> velocity{{{0.0, 3.5, BandKind::velocity},
                                  {3.5, 5.7, BandKind::velocity},
                                  {5.7, std::numeric_limits<double>::infinity(), BandKind::velocity}}};
    std::array<Band, 3> acceleration{
        {{0.65, 1.46, BandKind::acceleration},
         {1.46, 2.77, BandKind::acceleration},
         {2.77, std::numeric_limits<double>::infinity(), BandKind::acceleration}}};

    static BandConfig from_edges(double v_lo, double v_hi, double a0, double a1, double a2) {
        BandConfig b;
        const double inf = std::numeric_limits<double>::infinity();
        b.velocity = {{{0.0, v_lo, BandKind::velocity},
                       {v_lo, v_hi, BandKind::velocity},
                       {v_hi, inf, BandKind::velocity}}};
        b.acceleration = {{{a0, a1, BandKind::acceleration},
                           {a1, a2, BandKind::acceleration},
                           {a2, inf, BandKind::acceleration}}};
        return b;
    }
};

inline constexpr std::array<double, 4> kPeakWindowsSeconds = {1.0, 3.0, 5.0, 10.0};

// Full external load suite over one frame subset.
struct LoadMetrics {
    double elapsed = 0.0;  // 0.1 s per selected speed sample
    double total_distance = 0.0;
    double high_speed_distance = 0.0;
    double very_high_speed_distance = 0.0;
    std::array<double, 3> time_v_band{};
    std::array<std::optional<double>, 4> peak_velocity{};  // 1, 3, 5, 10 s windows
    double total_acceleration = 0.0;
    std::optional<double> acceleration_density;
    std::array<double, 3> time_a_band{};
    std::size_t accel_samples = 0;
};

namespace detail {

// Speed sample i belongs to frame i (i <= n-2).
inline bool speed_selected(const VisibilityMask& mask, std::size_t i) { return mask[i] != 0; }

// Acceleration sample i sits at frame i+1.
inline bool accel_selected(const VisibilityMask& mask, std::size_t i) { return mask[i + 1] != 0; }

}  // namespace detail

inline void check_mask(const KinematicSeries& kin, const VisibilityMask& mask) {
    if (mask.size() != kin.frame_count())
        fail(ErrorCode::data_error, "metric mask length does not match frame count");
}

inline double total_distance(const KinematicSeries& kin, const VisibilityMask& mask) {
    check_mask(kin, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < kin.step.size(); ++i)
        if (detail::speed_selected(mask, i)) sum += kin.step[i];
    return sum;
}

inline double band_distance(const KinematicSeries& kin, const Band& band,
                            const VisibilityMask& mask) {
    check_mask(kin, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < kin.step.size(); ++i)
        if (detail::speed_selected(mask, i) && band.contains(kin.speed[i])) sum += kin.step[i];
    return sum;
}

// 0.1 s per selected sample inside the band; `series` is speed for velocity
// bands or |accel| for acceleration bands, with the matching alignment.
inline double band_time(const std::vector<double>& series, const Band& band,
                        const VisibilityMask& mask, bool accel_aligned) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const bool sel = accel_aligned ? detail::accel_selected(mask, i)
                                       : detail::speed_selected(mask, i);
        if (sel && band.contains(series[i])) ++count;
    }
    return kFrameDt * static_cast<double>(count);
}

inline double selected_elapsed(const KinematicSeries& kin, const VisibilityMask& mask) {
    check_mask(kin, mask);
    std::size_t count = 0;
    for (std::size_t i = 0; i < kin.speed.size(); ++i)
        if (detail::speed_selected(mask, i)) ++count;
    return kFrameDt * static_cast<double>(count);
}

// Max over contiguous runs of selected speed samples of the window mean;
// absent when no run is long enough. Windows never straddle a gap.
inline std::optional<double> peak_rolling_velocity(const KinematicSeries& kin, double window_s,
                                                   const VisibilityMask& mask) {
    check_mask(kin, mask);
    if (!(window_s > 0.0)) fail(ErrorCode::data_error, "peak window must be positive");
    const double samples_f = window_s / kFrameDt;
    const std::size_t w = static_cast<std::size_t>(std::llround(samples_f));
    if (w == 0 || std::abs(samples_f - static_cast<double>(w)) > 1e-9)
        fail(ErrorCode::data_error, "peak window must be a multiple of 0.1 s");

    std::optional<double> best;
    const std::size_t ns = kin.speed.size();
    std::size_t run_start = 0;
    while (run_start < ns) {
        if (!detail::speed_selected(mask, run_start)) {
            ++run_start;
            continue;
        }
        std::size_t run_end = run_start;
        while (run_end < ns && detail::speed_selected(mask, run_end)) ++run_end;
        const std::size_t len = run_end - run_start;
        if (len >= w) {
            double sum = 0.0;
            for (std::size_t i = run_start; i < run_start + w; ++i) sum += kin.speed[i];
            double mean = sum / static_cast<double>(w);
            if (!best || mean > *best) best = mean;
            for (std::size_t i = run_start + w; i < run_end; ++i) {
                sum += kin.speed[i] - kin.speed[i - w];
                mean = sum / static_cast<double>(w);
                if (mean > *best) best = mean;
            }
        }
        run_start = run_end;
    }
    return best;
}

inline double total_acceleration(const KinematicSeries& kin, const VisibilityMask& mask) {
    check_mask(kin, mask);
    double sum = 0.0;
    for (std::size_t i = 0; i < kin.accel.size(); ++i)
        if (detail::accel_selected(mask, i)) sum += std::abs(kin.accel[i]);
    return sum;
}

inline std::optional<double> acceleration_density(const KinematicSeries& kin,
                                                  const VisibilityMask& mask) {
    check_mask(kin, mask);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < kin.accel.size(); ++i) {
        if (detail::accel_selected(mask, i)) {
            sum += std::abs(kin.accel[i]);
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

inline LoadMetrics compute_load_metrics(const KinematicSeries& kin, const VisibilityMask& mask,
                                        const BandConfig& bands = {}) {
    check_mask(kin, mask);
    LoadMetrics m;
    m.elapsed = selected_elapsed(kin, mask);
    m.total_distance = total_distance(kin, mask);
    m.high_speed_distance = band_distance(kin, bands.velocity[1], mask);
    m.very_high_speed_distance = band_distance(kin, bands.velocity[2], mask);
    for (int b = 0; b < 3; ++b)
        m.time_v_band[b] = band_time(kin.speed, bands.velocity[b], mask, false);
    for (std::size_t wi = 0; wi < kPeakWindowsSeconds.size(); ++wi)
        m.peak_velocity[wi] = peak_rolling_velocity(kin, kPeakWindowsSeconds[wi], mask);
    m.total_acceleration = total_acceleration(kin, mask);
    m.acceleration_density = acceleration_density(kin, mask);
    std::vector<double> abs_accel(kin.accel.size());
    for (std::size_t i = 0; i < kin.accel.size(); ++i) abs_accel[i] = std::abs(kin.accel[i]);
    for (int b = 0; b < 3; ++b)
        m.time_a_band[b] = band_time(abs_accel, bands.acceleration[b], mask, true);
    for (std::size_t i = 0; i < kin.accel.size(); ++i)
        if (detail::accel_selected(mask, i)) ++m.accel_samples;
    return m;
}

// Sum counterpart metrics; densities and peaks recombine from the parts.
// Used to merge per-half metrics into player-game metrics.
inline LoadMetrics merge_load_metrics(const LoadMetrics& a, const LoadMetrics& b) {
    LoadMetrics m;
    m.elapsed = a.elapsed + b.elapsed;
    m.total_distance = a.total_distance + b.total_distance;
    m.high_speed_distance = a.high_speed_distance + b.high_speed_distance;
    m.very_high_speed_distance = a.very_high_speed_distance + b.very_high_speed_distance;
    for (int i = 0; i < 3; ++i) {
        m.time_v_band[i] = a.time_v_band[i] + b.time_v_band[i];
        m.time_a_band[i] = a.time_a_band[i] + b.time_a_band[i];
    }
    for (std::size_t i = 0; i < m.peak_velocity.size(); ++i) {
        if (a.peak_velocity[i] && b.peak_velocity[i])
            m.peak_velocity[i] = std::max(*a.peak_velocity[i], *b.peak_velocity[i]);
        else
            m.peak_velocity[i] = a.peak_velocity[i] ? a.peak_velocity[i] : b.peak_velocity[i];
    }
    m.total_acceleration = a.total_acceleration + b.total_acceleration;
    m.accel_samples = a.accel_samples + b.accel_samples;
    if (m.accel_samples > 0)
        m.acceleration_density =
            m.total_acceleration / static_cast<double>(m.accel_samples);
    return m;
}

// The eleven censored-load prediction targets (peaks are excluded: they are
// always attained on camera, so there is nothing to predict).
enum class MetricId : int {
    total_distance = 0,
    high_speed_distance,
    very_high_speed_distance,
    time_v_band_0,
    time_v_band_1,
    time_v_band_2,
    total_acceleration,
    acceleration_density,
    time_a_band_0,
    time_a_band_1,
    time_a_band_2,
};

inline constexpr int kTargetMetricCount = 11;

inline const char* metric_name(MetricId id) {
    switch (id) {
        case MetricId::total_distance: return "total_distance";
        case MetricId::high_speed_distance: return "high_speed_distance";
        case MetricId::very_high_speed_distance: return "very_high_speed_distance";
        case MetricId::time_v_band_0: return "time_v_band_0";
        case MetricId::time_v_band_1: return "time_v_band_1";
        case MetricId::time_v_band_2: return "time_v_band_2";
        case MetricId::total_acceleration: return "total_acceleration";
        case MetricId::acceleration_density: return "acceleration_density";
        case MetricId::time_a_band_0: return "time_a_band_0";
        case MetricId::time_a_band_1: return "time_a_band_1";
        case MetricId::time_a_band_2: return "time_a_band_2";
    }
    return "?";
}

inline const char* metric_label(MetricId id) {
    switch (id) {
        case MetricId::total_distance: return "total distance (m)";
        case MetricId::high_speed_distance: return "high speed distance (m)";
        case MetricId::very_high_speed_distance: return "very high speed distance (m)";
        case MetricId::time_v_band_0: return "time in velocity band [0, 3.5) (s)";
        case MetricId::time_v_band_1: return "time in velocity band [3.5, 5.7) (s)";
        case MetricId::time_v_band_2: return "time in velocity band [5.7, inf) (s)";
        case MetricId::total_acceleration: return "total acceleration (m/s^2)";
        case MetricId::acceleration_density: return "acceleration density (m/s^2)";
        case MetricId::time_a_band_0: return "time in acceleration band [0.65, 1.46) (s)";
        case MetricId::time_a_band_1: return "time in acceleration band [1.46, 2.77) (s)";
        case MetricId::time_a_band_2: return "time in acceleration band [2.77, inf) (s)";
    }
    return "?";
}

inline std::array<MetricId, kTargetMetricCount> all_target_metrics() {
    return {MetricId::total_distance,       MetricId::high_speed_distance,
            MetricId::very_high_speed_distance, MetricId::time_v_band_0,
            MetricId::time_v_band_1,        MetricId::time_v_band_2,
            MetricId::total_acceleration,   MetricId::acceleration_density,
            MetricId::time_a_band_0,        MetricId::time_a_band_1,
            MetricId::time_a_band_2};
}

// Target value of one metric from a LoadMetrics block; absent only for the
// density of an empty selection.
inline std::optional<double> metric_value(const LoadMetrics& m, MetricId id) {
    switch (id) {
        case MetricId::total_distance: return m.total_distance;
        case MetricId::high_speed_distance: return m.high_speed_distance;
        case MetricId::very_high_speed_distance: return m.very_high_speed_distance;
        case MetricId::time_v_band_0: return m.time_v_band[0];
        case MetricId::time_v_band_1: return m.time_v_band[1];
        case MetricId::time_v_band_2: return m.time_v_band[2];
        case MetricId::total_acceleration: return m.total_acceleration;
        case MetricId::acceleration_density: return m.acceleration_density;
        case MetricId::time_a_band_0: return m.time_a_band[0];
        case MetricId::time_a_band_1: return m.time_a_band[1];
        case MetricId::time_a_band_2: return m.time_a_band[2];
    }
    return std::nullopt;
}

// A sum metric aggregates across subtracks by addition; densities need a
// sample-time weighted mean.
inline bool metric_is_sum(MetricId id) { return id != MetricId::acceleration_density; }

}  // namespace loadtrack
