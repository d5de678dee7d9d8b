// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rainaug/scene.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace rainaug::streak {

// Time a database drop stayed on one pixel: sqrt(1e-3 m) / 50.
inline const double kDatabaseDwellTime = std::sqrt(1e-3) / 50.0;

// Single-channel float raster.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Raster() = default;
    Raster(int w, int h, float fill = 0.f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    double sum() const;
};

enum class SpriteSource { database, procedural };

// A streak imaged by a static camera, axis vertical through the raster centre,
// spanning its full height.
struct StreakSprite {
    Raster radiance;
    Raster alpha;
    double diameter_mm = 0;
    int oscillation = 0;
    SpriteSource source = SpriteSource::procedural;
    double core_width_px = 1;  // width of the drop itself inside the raster
};

// Builds a sprite from a grayscale raster drawn on black: radiance and alpha
// are both the max-normalized luminance.
StreakSprite sprite_from_gray(const Raster& gray, double diameter_mm, int oscillation);

class StreakLibrary {
  public:
    explicit StreakLibrary(std::vector<StreakSprite> sprites);

    std::size_t size() const { return sprites_.size(); }
    const std::vector<double>& diameters() const { return diameters_; }
    // Bucket with the nearest diameter, oscillation taken modulo the bucket size.
    const StreakSprite& select(double diameter_mm, int oscillation) const;
    double nearest_diameter(double diameter_mm) const;

  private:
    std::vector<StreakSprite> sprites_;
    std::vector<double> diameters_;               // sorted, unique
    std::vector<std::vector<std::size_t>> bucket_;  // per diameter, ordered by oscillation
};

// Reads <dir>/<diameter_mm>_<oscillation>.png grayscale sprites.
StreakLibrary load_streak_library(const std::string& dir);

struct Oscillation {
    double amplitude_px = 0;
    double periods = 1;
    double phase = 0;
};

// Amplitude in [0, width/2], 1-3 periods, derived from the seed only.
Oscillation oscillation_from_seed(std::uint64_t seed, double width_px);

StreakSprite procedural_streak(double diameter_mm, double length_px, double width_px, const Oscillation& oscillation);
StreakSprite procedural_streak(double diameter_mm, double length_px, double width_px, std::uint64_t oscillation_seed);

// Sprite resampled into image space.
struct WarpedStreak {
    int x0 = 0;  // image pixel of raster (0, 0)
    int y0 = 0;
    Raster radiance;
    Raster alpha;
    Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();  // sprite -> image, continuous coordinates
};

// Homography taking four source points to four target points.
Eigen::Matrix3d homography_from_points(const std::array<Vec2, 4>& source, const std::array<Vec2, 4>& target);
Vec2 apply_homography(const Eigen::Matrix3d& h, const Vec2& p);

// Source quad corners of a sprite: (0,0), (w,0), (w,h), (0,h).
std::array<Vec2, 4> sprite_quad(const StreakSprite& sprite);
// Target quad for the axis p0 -> p1 (pixel-centre coordinates) and width.
std::array<Vec2, 4> target_quad(const Vec2& p0, const Vec2& p1, double width_px);

// Maps the sprite rectangle onto the quad around p0 -> p1 and resamples bilinearly.
WarpedStreak warp_streak(const StreakSprite& sprite, const Vec2& p0, const Vec2& p1, double width_px);

// Defocus blur radius (pixels) of an object at distance_m.
double circle_of_confusion(double distance_m, const CameraModel& camera);

// Normalized disk kernel, side 2*ceil(r)+1. Radius below 0.5 gives [1].
Raster disk_kernel(double radius_px);
// Convolution with the disk kernel; output grows by ceil(r) on every side.
Raster defocus(const Raster& raster, double radius_px);
void defocus(WarpedStreak& streak, double radius_px);

struct BlendParams {
    Rgb weight{1, 1, 1};  // photometric weight folded into the radiance
    double tau1 = 0;      // dwell time of the simulated drop
    double tau0 = kDatabaseDwellTime;
    double exposure = 0;
    const DepthMap* occlusion_depth = nullptr;  // skip pixels nearer than drop_depth
    double drop_depth = 0;
};

// In place: I = (T - a*tau1)/T * I + S*w*tau1/tau0, clamped to [0,1].
void blend_streak(ImageBuffer& image, const WarpedStreak& streak, const BlendParams& params);

// Global gain restoring the mean of `original`, clamped to [0,1].
ImageBuffer restore_luminosity(const ImageBuffer& rendered, const ImageBuffer& original);

}  // namespace rainaug::streak
