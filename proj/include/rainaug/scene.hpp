// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rainaug {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Rgb = std::array<double, 3>;

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Linear-RGB raster, interleaved, values nominally in [0,1].
class ImageBuffer {
  public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, float fill = 0.f);

    int width() const { return width_; }
    int height() const { return height_; }
    static constexpr int channels() { return 3; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    float& at(int x, int y, int c) { return data_[index(x, y) + c]; }
    float at(int x, int y, int c) const { return data_[index(x, y) + c]; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    // Mean over all pixels and channels.
    double mean() const;
    Rgb channel_mean() const;

    bool operator==(const ImageBuffer& other) const = default;

  private:
    std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

// Metric depth per pixel (meters).
class DepthMap {
  public:
    DepthMap() = default;
    DepthMap(int width, int height, float fill = 0.f);

    int width() const { return width_; }
    int height() const { return height_; }

    float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

// Pinhole camera, camera frame is x right, y down, z forward.
struct CameraModel {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    double focal_m = 0;
    double f_number = 0;
    double focus_plane_m = 6.0;
    double exposure_s = 0;
    Vec3 ego_velocity = Vec3::Zero();  // m/s, camera frame

    double pixel_pitch() const { return focal_m / fx; }

    Vec2 project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }
    Vec3 ray(double px, double py) const { return Vec3((px - cx) / fx, (py - cy) / fy, 1.0).normalized(); }

    // Throws Error on any non-physical field.
    void validate() const;
};

// World frame used for sun direction: x right, y up, z forward (level camera).
inline Vec3 world_to_camera(const Vec3& w) { return {w.x(), -w.y(), w.z()}; }

struct RainfallConfig {
    double rate_mm_h = 0;
    std::uint64_t seed = 0;
    double d_min_mm = 1.0;
    double d_max_mm = 6.0;
    double max_depth_m = 10.0;
    double near_clip_m = 0.1;
    double lateral_pad_m = 0.5;
    double hg_g = 0.9;
    Vec3 sun_direction = Vec3(0, 1, 0);
    double irradiance_scale = 1.0;

    void validate() const;
};

enum class ColorSpace { srgb, linear };
enum class DepthEncoding { png16_scaled, float_raster };

double srgb_to_linear(double v);
double linear_to_srgb(double v);
// Exact inverse of the 8-bit decode table.
std::uint8_t encode_srgb8(float linear);
float decode_srgb8(std::uint8_t v);

ImageBuffer load_image(const std::string& path, ColorSpace color_space = ColorSpace::srgb);
void save_image(const std::string& path, const ImageBuffer& image, bool sixteen_bit = false,
                ColorSpace color_space = ColorSpace::srgb);

struct DepthLoadOptions {
    DepthEncoding encoding = DepthEncoding::png16_scaled;
    double scale = 1.0 / 256.0;  // meters per stored unit
    int expect_width = 0;        // 0: no check
    int expect_height = 0;
    bool resample = false;
};

DepthMap load_depth(const std::string& path, const DepthLoadOptions& options);
void save_depth_raster(const std::string& path, const DepthMap& depth);
void save_depth_png16(const std::string& path, const DepthMap& depth, double scale);

// Replaces non-positive or non-finite samples by their nearest valid neighbour.
void fill_invalid_depth(DepthMap& depth);
DepthMap resample_nearest(const DepthMap& depth, int width, int height);

CameraModel parse_calibration(const std::string& json_text);
CameraModel load_calibration(const std::string& path);

}  // namespace rainaug
