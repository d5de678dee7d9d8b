// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rainaug/scene.hpp"

namespace rainaug::fog {

struct FogParams {
    double rate_mm_h = 0;
    double hg_g = 0.9;
    Rgb sun_irradiance{0, 0, 0};
    Vec3 sun_direction = Vec3(0, 1, 0);  // world frame, y up
    double depth_unit_km = 1e-3;         // meters -> kilometers
};

FogParams make_fog_params(const RainfallConfig& config, const Rgb& sun_irradiance);

// Fraction of radiance transmitted through depth_m of rain.
double extinction(double rate_mm_h, double depth_m, double depth_unit_km = 1e-3);

// Henyey-Greenstein phase function.
double hg_phase(double theta_rad, double g);

// Attenuated image: I * L_ext + phase * E_sun * (1 - L_ext), clamped to [0,1].
// Rows are split over `threads` workers.
ImageBuffer render_fog(const ImageBuffer& image, const DepthMap& depth, const FogParams& params,
                       const CameraModel& camera, int threads = 1);

}  // namespace rainaug::fog
