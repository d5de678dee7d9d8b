// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rainaug/illumination.hpp"
#include "rainaug/rain_physics.hpp"
#include "rainaug/scene.hpp"
#include "rainaug/streak.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rainaug {

struct RenderOptions {
    // Null selects procedural sprites.
    const streak::StreakLibrary* library = nullptr;
    int threads = 1;
    bool depth_occlusion = false;
    bool fog_only = false;
    illumination::EnvironmentOptions environment;
    double drop_fov_deg = illumination::kDropFovDeg;
    int cone_samples = illumination::kConeSamples;
    // Keep the population and environment map in the result.
    bool keep_debug = false;
};

struct RenderReport {
    double simulation_seconds = 0;
    double rendering_seconds = 0;
    std::size_t drop_count = 0;
    std::size_t streak_count = 0;           // drops classified as streaks
    std::size_t rendered_streak_count = 0;  // streaks touching the image
    double fog_like_fraction = 0;
    double mean_luminosity_delta = 0;
};

struct RenderResult {
    ImageBuffer image;
    RenderReport report;
    std::optional<physics::DropPopulation> population;
    std::optional<illumination::EnvironmentMap> environment;
};

// Intrinsics rescaled when the image size differs from the calibration.
CameraModel camera_for_image(const CameraModel& camera, int width, int height);

// Fog layer, per-drop streaks, then luminosity restoration. The simulation is
// seeded from config.seed.
RenderResult render_rain(const ImageBuffer& image, const DepthMap& depth, const CameraModel& camera,
                         const RainfallConfig& config, const RenderOptions& options = {});

// ---------------------------------------------------------------------------
// Batch processing

struct JobConfig {
    std::string image_dir;
    std::string depth_dir;
    std::string calibration_path;
    std::string calibration_override_dir;  // optional <stem>.json partial calibrations
    std::vector<double> rates{0, 5, 25, 50, 100, 200};
    std::uint64_t seed = 0;
    std::string output_dir;
    std::string streak_library = "procedural";
    int workers = 1;
    int threads_per_image = 1;
    bool fog_only = false;
    bool debug_dumps = false;
    bool depth_occlusion = false;
    bool sixteen_bit = false;
    double depth_scale = 1.0 / 256.0;  // png16 depth, meters per unit
    bool resample_depth = false;
    std::string report_path;  // default <out>/report.jsonl
    RainfallConfig rain;      // rate and seed are overridden per job
};

struct BatchRecord {
    std::string image;
    double rate_mm_h = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string output;
    std::string error;
    RenderReport report;
};

struct BatchResult {
    std::vector<BatchRecord> records;
    std::size_t failures = 0;
    int exit_code() const { return failures == 0 ? 0 : 1; }
};

// Order-independent per-image seed.
std::uint64_t derive_seed(std::uint64_t job_seed, const std::string& image_name, double rate_mm_h);
std::string rate_label(double rate_mm_h);
std::string report_line(const BatchRecord& record);

BatchResult run_batch(const JobConfig& job);

}  // namespace rainaug
