// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/parallel.hpp"
#include "rainaug/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rainaug {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t job_seed, const std::string& image_name, double rate_mm_h) {
    // FNV-1a over (seed, name, rate bits), then a splitmix64 finalizer.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    for (int i = 0; i < 8; ++i) mix((job_seed >> (8 * i)) & 0xff);
    for (unsigned char c : image_name) mix(c);
    const auto rate_bits = std::bit_cast<std::uint64_t>(rate_mm_h);
    for (int i = 0; i < 8; ++i) mix((rate_bits >> (8 * i)) & 0xff);
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

std::string rate_label(double rate_mm_h) {
    std::ostringstream ss;
    ss << rate_mm_h << "mm";
    return ss.str();
}

std::string report_line(const BatchRecord& r) {
    nlohmann::json j;
    j["image"] = r.image;
    j["rate_mm_h"] = r.rate_mm_h;
    j["seed"] = r.seed;
    j["status"] = r.ok ? "ok" : "error";
    if (r.ok) {
        j["output"] = r.output;
        j["simulation_s"] = r.report.simulation_seconds;
        j["rendering_s"] = r.report.rendering_seconds;
        j["drops"] = r.report.drop_count;
        j["streaks"] = r.report.streak_count;
        j["rendered_streaks"] = r.report.rendered_streak_count;
        j["fog_like_fraction"] = r.report.fog_like_fraction;
        j["mean_luminosity_delta"] = r.report.mean_luminosity_delta;
    } else {
        j["error"] = r.error;
    }
    return j.dump();
}

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CameraModel calibration_for(const JobConfig& job, const std::string& base_text, const std::string& stem) {
    if (job.calibration_override_dir.empty()) return parse_calibration(base_text);
    const fs::path override_path = fs::path(job.calibration_override_dir) / (stem + ".json");
    if (!fs::exists(override_path)) return parse_calibration(base_text);
    nlohmann::json merged = nlohmann::json::parse(base_text, nullptr, false);
    const nlohmann::json patch = nlohmann::json::parse(read_text(override_path), nullptr, false);
    if (merged.is_discarded() || patch.is_discarded() || !patch.is_object())
        throw Error("calibration override '" + override_path.string() + "' is not a JSON object");
    merged.update(patch);
    return parse_calibration(merged.dump());
}

DepthMap depth_for(const JobConfig& job, const std::string& stem, int width, int height) {
    DepthLoadOptions opt;
    opt.expect_width = width;
    opt.expect_height = height;
    opt.resample = job.resample_depth;
    const fs::path png_path = fs::path(job.depth_dir) / (stem + ".png");
    const fs::path raw_path = fs::path(job.depth_dir) / (stem + ".bin");
    if (fs::exists(png_path)) {
        opt.encoding = DepthEncoding::png16_scaled;
        opt.scale = job.depth_scale;
        return load_depth(png_path.string(), opt);
    }
    if (fs::exists(raw_path)) {
        opt.encoding = DepthEncoding::float_raster;
        opt.scale = 1.0;
        return load_depth(raw_path.string(), opt);
    }
    throw Error("no depth for '" + stem + "' (expected " + png_path.string() + " or " + raw_path.string() + ")");
}

}  // namespace

BatchResult run_batch(const JobConfig& job) {
    if (!fs::is_directory(job.image_dir)) throw Error("image directory '" + job.image_dir + "' not found");
    if (job.output_dir.empty()) throw Error("output directory is required");
    for (double r : job.rates)
        if (!(r >= 0) || !std::isfinite(r)) throw Error("rates must be finite and non-negative");
    const std::string base_calibration = read_text(job.calibration_path);
    parse_calibration(base_calibration);  // fail early on a bad base document

    std::optional<streak::StreakLibrary> library;
    if (!job.streak_library.empty() && job.streak_library != "procedural")
        library.emplace(streak::load_streak_library(job.streak_library));

    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(job.image_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png") images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    fs::create_directories(job.output_dir);
    for (double r : job.rates) fs::create_directories(fs::path(job.output_dir) / rate_label(r));

    BatchResult result;
    result.records.resize(images.size() * job.rates.size());
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t k = 0; k < job.rates.size(); ++k) {
            BatchRecord& rec = result.records[i * job.rates.size() + k];
            rec.image = images[i].filename().string();
            rec.rate_mm_h = job.rates[k];
            rec.seed = derive_seed(job.seed, rec.image, rec.rate_mm_h);
        }

    parallel_for(result.records.size(), job.workers, [&](std::size_t n) {
        BatchRecord& rec = result.records[n];
        const fs::path& path = images[n / job.rates.size()];
        const std::string stem = path.stem().string();
        try {
            const ImageBuffer image = load_image(path.string());
            const DepthMap depth = depth_for(job, stem, image.width(), image.height());
            const CameraModel camera = calibration_for(job, base_calibration, stem);

            RainfallConfig rain = job.rain;
            rain.rate_mm_h = rec.rate_mm_h;
            rain.seed = rec.seed;

            RenderOptions options;
            options.library = library ? &*library : nullptr;
            options.threads = job.threads_per_image;
            options.depth_occlusion = job.depth_occlusion;
            options.fog_only = job.fog_only;
            options.keep_debug = job.debug_dumps;
            RenderResult out = render_rain(image, depth, camera, rain, options);

            const fs::path dir = fs::path(job.output_dir) / rate_label(rec.rate_mm_h);
            const fs::path target = dir / (stem + ".png");
            save_image(target.string(), out.image, job.sixteen_bit);
            if (job.debug_dumps) {
                std::ofstream drops(dir / (stem + ".drops.txt"));
                physics::write_drop_table(drops, *out.population);
                save_image((dir / (stem + ".envmap.png")).string(), out.environment->to_image());
            }
            rec.output = target.string();
            rec.report = out.report;
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    });

    const std::string report_path =
        job.report_path.empty() ? (fs::path(job.output_dir) / "report.jsonl").string() : job.report_path;
    std::ofstream report(report_path);
    if (!report) throw Error("cannot write report '" + report_path + "'");
    for (const BatchRecord& rec : result.records) {
        if (!rec.ok) ++result.failures;
        report << report_line(rec) << '\n';
    }
    return result;
}

}  // namespace rainaug
