// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rainaug/scene.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace rainaug {

using Rng = std::mt19937_64;

// Uniform double in [0,1) built from the top 53 bits of the generator.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace physics {

// Marshall-Palmer intercept, drops per m^3 per mm.
inline constexpr double kMarshallPalmerN0 = 8000.0;
inline constexpr int kOscillationCount = 10;

enum class DropClass { fog_like, streak };

struct Drop {
    double diameter_mm = 0;
    Vec3 start = Vec3::Zero();  // shutter opening, camera frame (m)
    Vec3 end = Vec3::Zero();    // shutter closing
    Vec2 p0 = Vec2::Zero();     // image-space endpoints (px)
    Vec2 p1 = Vec2::Zero();
    double projected_width_px = 0;
    DropClass drop_class = DropClass::fog_like;
    int oscillation = 0;

    Vec3 position() const { return 0.5 * (start + end); }
    double streak_length_px() const { return (p1 - p0).norm(); }
};

struct DropPopulation {
    std::vector<Drop> drops;
    double rate_mm_h = 0;
    double volume_m3 = 0;
    double expected_count = 0;
    std::uint64_t seed = 0;

    std::size_t streak_count() const;
    double streak_fraction() const;
};

// Slope of the Marshall-Palmer size distribution, per mm.
double marshall_palmer_lambda(double rate_mm_h);
// Drops per m^3 with diameter >= d_min_mm.
double drop_concentration(double rate_mm_h, double d_min_mm);
// Inverse-CDF samples of the exponential density truncated to [d_min, d_max].
std::vector<double> sample_diameters(std::size_t n, double lambda, double d_min_mm, double d_max_mm, Rng& rng);
double sample_diameter(double lambda, double d_min_mm, double d_max_mm, Rng& rng);
// Analytic CDF of the truncated exponential.
double truncated_exponential_cdf(double d_mm, double lambda, double d_min_mm, double d_max_mm);
// Atlas terminal fall speed (m/s), clamped at zero.
double terminal_velocity(double diameter_mm);

// Camera frustum between near_clip and max_depth, padded laterally.
struct Frustum {
    double near_m = 0, far_m = 0;
    double x_min_slope = 0, x_max_slope = 0;  // x bounds at depth z: slope*z -/+ pad
    double y_min_slope = 0, y_max_slope = 0;
    double pad_m = 0;

    Frustum(const CameraModel& camera, const RainfallConfig& config);
    double cross_section(double z) const;
    // Volume between near plane and z.
    double volume_to(double z) const;
    double volume() const { return volume_to(far_m); }
    Vec3 sample(Rng& rng) const;
};

// Drop of the given size at `start` when the shutter opens, moved by its fall
// speed relative to the camera over the exposure, projected and classified.
Drop make_drop(double diameter_mm, const Vec3& start, const CameraModel& camera);

DropPopulation simulate(const RainfallConfig& config, const CameraModel& camera, Rng& rng);
// Seeds the generator from config.seed.
DropPopulation simulate(const RainfallConfig& config, const CameraModel& camera);

// Time a streak drop spends over a single pixel.
double pixel_dwell_time(const Drop& drop, double exposure_s);

// One line per drop: a X0 X1 p0 p1 class.
void write_drop_table(std::ostream& out, const DropPopulation& population);

}  // namespace physics
}  // namespace rainaug
