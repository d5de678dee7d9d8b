// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
//
// rain-augment: adds physically based rain of given intensities to a folder
// of images with matching depth maps.

#include "rainaug/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_rates(const std::string& text) {
    std::vector<double> rates;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double r = std::stod(item, &used);
        if (used != item.size() || !(r >= 0)) throw CLI::ValidationError("--rates", "bad rate '" + item + "'");
        rates.push_back(r);
    }
    if (rates.empty()) throw CLI::ValidationError("--rates", "no rate given");
    return rates;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physically based rain augmentation"};
    rainaug::JobConfig job;
    std::string rates = "0,5,25,50,100,200";

    app.add_option("--images", job.image_dir, "Directory of input PNG images (sRGB)")->required();
    app.add_option("--depth", job.depth_dir, "Directory of depth maps <stem>.png (16-bit) or <stem>.bin")->required();
    app.add_option("--calib", job.calibration_path, "Calibration JSON")->required();
    app.add_option("--rates", rates, "Comma-separated rainfall rates in mm/hr")->capture_default_str();
    app.add_option("--seed", job.seed, "Job seed")->capture_default_str();
    app.add_option("--out", job.output_dir, "Output directory")->required();
    app.add_option("--streaks", job.streak_library, "Streak sprite directory or 'procedural'")->capture_default_str();
    app.add_option("--workers", job.workers, "Images rendered concurrently")->capture_default_str();
    app.add_option("--threads", job.threads_per_image, "Threads inside one image")->capture_default_str();
    app.add_flag("--fog-only", job.fog_only, "Only write the attenuated fog layer");
    app.add_option("--report", job.report_path, "Report file (default <out>/report.jsonl)");
    app.add_flag("--debug-dumps", job.debug_dumps, "Write drop tables and environment maps");
    app.add_flag("--depth-occlusion", job.depth_occlusion, "Hide streak pixels behind scene depth");
    app.add_flag("--png16", job.sixteen_bit, "Write 16-bit PNG output");
    app.add_option("--depth-scale", job.depth_scale, "Meters per unit of 16-bit depth PNGs")->capture_default_str();
    app.add_flag("--resample-depth", job.resample_depth, "Resample depth maps to the image size");
    app.add_option("--calib-overrides", job.calibration_override_dir, "Directory of per-image <stem>.json overrides");
    app.add_option("--max-depth", job.rain.max_depth_m, "Simulation depth bound in meters")->capture_default_str();
    app.add_option("--hg-g", job.rain.hg_g, "Henyey-Greenstein asymmetry")->capture_default_str();
    app.add_option("--irradiance-scale", job.rain.irradiance_scale, "Sun irradiance scale")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        job.rates = parse_rates(rates);
        const rainaug::BatchResult result = rainaug::run_batch(job);
        std::size_t ok = result.records.size() - result.failures;
        std::cerr << "rendered " << ok << " of " << result.records.size() << " images\n";
        for (const auto& rec : result.records)
            if (!rec.ok) std::cerr << "failed: " << rec.image << " @ " << rec.rate_mm_h << " mm/hr: " << rec.error << '\n';
        return result.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "rain-augment: " << e.what() << '\n';
        return 2;
    }
}
