// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/fog.hpp"

#include "rainaug/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rainaug::fog {

FogParams make_fog_params(const RainfallConfig& config, const Rgb& sun_irradiance) {
    FogParams p;
    p.rate_mm_h = config.rate_mm_h;
    p.hg_g = config.hg_g;
    p.sun_irradiance = sun_irradiance;
    p.sun_direction = config.sun_direction;
    return p;
}

double extinction(double rate_mm_h, double depth_m, double depth_unit_km) {
    if (rate_mm_h <= 0 || depth_m <= 0) return 1.0;
    return std::exp(-0.312 * std::pow(rate_mm_h, 0.67) * depth_m * depth_unit_km);
}

double hg_phase(double theta_rad, double g) {
    const double g2 = g * g;
    const double denom = 1 + g2 - 2 * g * std::cos(theta_rad);
    return (1 - g2) / (4 * std::numbers::pi * denom * std::sqrt(denom));
}

ImageBuffer render_fog(const ImageBuffer& image, const DepthMap& depth, const FogParams& params,
                       const CameraModel& camera, int threads) {
    if (image.width() != depth.width() || image.height() != depth.height())
        throw Error("render_fog: image and depth dimensions differ");
    if (!(std::abs(params.hg_g) < 1)) throw Error("render_fog: |g| must be < 1");
    if (params.rate_mm_h <= 0) return image;

    ImageBuffer out(image.width(), image.height());
    const Vec3 sun = world_to_camera(params.sun_direction).normalized();
    const double k = 0.312 * std::pow(params.rate_mm_h, 0.67) * params.depth_unit_km;

    parallel_for(static_cast<std::size_t>(image.height()), threads, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < image.width(); ++x) {
            const double cos_theta = std::clamp(camera.ray(x, y).dot(sun), -1.0, 1.0);
            const double phase = hg_phase(std::acos(cos_theta), params.hg_g);
            const double l_ext = std::exp(-k * std::max(0.f, depth.at(x, y)));
            for (int c = 0; c < 3; ++c) {
                const double airlight = phase * params.sun_irradiance[c] * (1 - l_ext);
                out.at(x, y, c) = static_cast<float>(std::clamp(image.at(x, y, c) * l_ext + airlight, 0.0, 1.0));
            }
        }
    });
    return out;
}

}  // namespace rainaug::fog
