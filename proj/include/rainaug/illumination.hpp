// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rainaug/scene.hpp"

#include <vector>

namespace rainaug::illumination {

inline constexpr double kDropFovDeg = 165.0;
inline constexpr int kConeSamples = 20;
inline constexpr double kRefractedFraction = 0.94;

// Equirectangular radiance map centred on the camera. Column 0 is azimuth -pi
// (backward), column width/2 looks along +z; row 0 is the zenith.
class EnvironmentMap {
  public:
    EnvironmentMap(int width, int height, double radius_m = 10.0);

    int width() const { return width_; }
    int height() const { return height_; }
    double radius() const { return radius_; }

    Rgb& at(int col, int row) { return cells_[static_cast<std::size_t>(row) * width_ + col]; }
    const Rgb& at(int col, int row) const { return cells_[static_cast<std::size_t>(row) * width_ + col]; }

    // Unit direction (camera frame) through the centre of a cell, and back to
    // continuous map coordinates (col, row).
    Vec3 cell_direction(double col, double row) const;
    Vec2 to_map(const Vec3& direction) const;

    // Rebuilds the per-row prefix sums. Call after editing cells.
    void finalize();
    // Sum over columns [begin, end) of one row, 0 <= begin <= end <= width.
    Rgb row_sum(int row, int begin, int end) const;
    // Mean radiance over the whole map.
    const Rgb& mean() const { return mean_; }

    ImageBuffer to_image() const;

  private:
    int width_, height_;
    double radius_;
    std::vector<Rgb> cells_;
    std::vector<Rgb> prefix_;  // (width+1) entries per row
    Rgb mean_{0, 0, 0};
};

struct EnvironmentOptions {
    int width = 256;
    int height = 128;
    double radius_m = 10.0;
};

EnvironmentMap estimate_environment(const ImageBuffer& image, const CameraModel& camera,
                                    const EnvironmentOptions& options = {});

Rgb estimate_sun_irradiance(const ImageBuffer& image, const RainfallConfig& config);

// Directions on the drop's viewing cone, all at fov/2 from X/|X|.
std::vector<Vec3> drop_view_cone(const Vec3& position, double fov_deg = kDropFovDeg, int samples = kConeSamples);

// Exit point of the ray origin + t*direction (t > 0) through a sphere of the
// given radius centred on the camera. The origin must be inside.
Vec3 sphere_intersect(const Vec3& origin, const Vec3& direction, double radius);

struct CellSpan {
    int row;
    int begin;  // [begin, end) in columns, already wrapped into [0, width)
    int end;
};

struct DropFov {
    std::vector<CellSpan> spans;
    std::size_t cell_count = 0;
    Rgb mean{0, 0, 0};

    std::vector<unsigned char> mask(int width, int height) const;
};

DropFov drop_fov(const Vec3& position, const EnvironmentMap& env, double fov_deg = kDropFovDeg,
                 int samples = kConeSamples);

// Per-channel streak weight 0.94 F + 0.06 E.
Rgb streak_photometric_weight(const DropFov& fov, const EnvironmentMap& env);
Rgb streak_photometric_weight(const Rgb& fov_mean, const Rgb& env_mean);

}  // namespace rainaug::illumination
