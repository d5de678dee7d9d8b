// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/pipeline.hpp"

#include "rainaug/fog.hpp"
#include "rainaug/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rainaug {

CameraModel camera_for_image(const CameraModel& camera, int width, int height) {
    if (camera.width == width && camera.height == height) return camera;
    CameraModel c = camera;
    const double sx = static_cast<double>(width) / camera.width;
    const double sy = static_cast<double>(height) / camera.height;
    c.fx *= sx;
    c.cx *= sx;
    c.fy *= sy;
    c.cy *= sy;
    c.width = width;
    c.height = height;
    return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PreparedStreak {
    streak::WarpedStreak warped;
    Rgb weight{};
    double tau1 = 0;
    double depth = 0;
    std::size_t index = 0;
};

bool overlaps(int x0, int y0, int w, int h, int width, int height) {
    return x0 < width && y0 < height && x0 + w > 0 && y0 + h > 0;
}

std::optional<PreparedStreak> prepare_streak(const physics::Drop& drop, std::size_t index, const CameraModel& camera,
                                             const illumination::EnvironmentMap& env, const RenderOptions& options) {
    const double width = drop.projected_width_px;
    const Vec3 position = drop.position();

    // Axis from p0 to p1, extended by half a drop at both ends so the sprite
    // covers the whole drop at shutter opening and closing.
    Vec2 a = drop.p0, b = drop.p1;
    const Vec2 axis = b - a;
    const double len = axis.norm();
    const Vec2 t = len > 1e-9 ? Vec2(axis / len) : Vec2(0, 1);
    a -= t * (width / 2);
    b += t * (width / 2);

    const double coc = streak::circle_of_confusion(position.z(), camera);

    const streak::StreakSprite* sprite = nullptr;
    streak::StreakSprite procedural;
    if (options.library) {
        sprite = &options.library->select(drop.diameter_mm, drop.oscillation);
    } else {
        // Procedural raster is at most 2*(1.5*width + 2) px wide.
        const double margin = 2 * width + coc + 4;
        const int x0 = static_cast<int>(std::floor(std::min(a.x(), b.x()) - margin));
        const int y0 = static_cast<int>(std::floor(std::min(a.y(), b.y()) - margin));
        const int w = static_cast<int>(std::ceil(std::abs(a.x() - b.x()) + 2 * margin)) + 1;
        const int h = static_cast<int>(std::ceil(std::abs(a.y() - b.y()) + 2 * margin)) + 1;
        if (!overlaps(x0, y0, w, h, camera.width, camera.height)) return std::nullopt;
        procedural = streak::procedural_streak(drop.diameter_mm, (b - a).norm(), width,
                                               static_cast<std::uint64_t>(drop.oscillation));
        sprite = &procedural;
    }

    const double target_width = sprite->radiance.width * width / sprite->core_width_px;
    PreparedStreak out;
    out.warped = streak::warp_streak(*sprite, a, b, target_width);
    streak::defocus(out.warped, coc);
    if (!overlaps(out.warped.x0, out.warped.y0, out.warped.radiance.width, out.warped.radiance.height, camera.width,
                  camera.height))
        return std::nullopt;

    const illumination::DropFov fov = illumination::drop_fov(position, env, options.drop_fov_deg, options.cone_samples);
    out.weight = illumination::streak_photometric_weight(fov, env);
    out.tau1 = physics::pixel_dwell_time(drop, camera.exposure_s);
    out.depth = position.z();
    out.index = index;
    return out;
}

}  // namespace

RenderResult render_rain(const ImageBuffer& image, const DepthMap& depth, const CameraModel& calibration,
                         const RainfallConfig& config, const RenderOptions& options) {
    config.validate();
    calibration.validate();
    if (image.empty()) throw Error("render_rain: empty image");
    if (image.width() != depth.width() || image.height() != depth.height())
        throw Error("render_rain: image and depth dimensions differ");
    const CameraModel camera = camera_for_image(calibration, image.width(), image.height());

    RenderResult result;
    RenderReport& report = result.report;

    auto start = Clock::now();
    physics::DropPopulation population = physics::simulate(config, camera);
    report.simulation_seconds = seconds_since(start);
    report.drop_count = population.drops.size();
    report.streak_count = population.streak_count();
    report.fog_like_fraction =
        population.drops.empty() ? 1.0
                                 : 1.0 - static_cast<double>(report.streak_count) / population.drops.size();

    start = Clock::now();
    const Rgb sun = illumination::estimate_sun_irradiance(image, config);
    ImageBuffer rendered = fog::render_fog(image, depth, fog::make_fog_params(config, sun), camera, options.threads);

    if (!options.fog_only && report.streak_count > 0) {
        const illumination::EnvironmentMap env = illumination::estimate_environment(image, camera, options.environment);

        std::vector<std::size_t> streak_ids;
        streak_ids.reserve(report.streak_count);
        for (std::size_t i = 0; i < population.drops.size(); ++i)
            if (population.drops[i].drop_class == physics::DropClass::streak) streak_ids.push_back(i);

        std::vector<std::optional<PreparedStreak>> prepared(streak_ids.size());
        parallel_for(streak_ids.size(), options.threads, [&](std::size_t k) {
            prepared[k] = prepare_streak(population.drops[streak_ids[k]], streak_ids[k], camera, env, options);
        });

        std::vector<PreparedStreak*> order;
        for (auto& p : prepared)
            if (p) order.push_back(&*p);
        // Far to near; drop index breaks ties.
        std::sort(order.begin(), order.end(), [](const PreparedStreak* x, const PreparedStreak* y) {
            return x->depth != y->depth ? x->depth > y->depth : x->index < y->index;
        });
        report.rendered_streak_count = order.size();

        for (const PreparedStreak* p : order) {
            streak::BlendParams blend;
            blend.weight = p->weight;
            blend.tau1 = p->tau1;
            blend.exposure = camera.exposure_s;
            if (options.depth_occlusion) {
                blend.occlusion_depth = &depth;
                blend.drop_depth = p->depth;
            }
            streak::blend_streak(rendered, p->warped, blend);
        }
        if (options.keep_debug) result.environment = env;
    }

    if (!options.fog_only && config.rate_mm_h > 0) rendered = streak::restore_luminosity(rendered, image);
    report.rendering_seconds = seconds_since(start);
    report.mean_luminosity_delta = std::abs(rendered.mean() - image.mean());

    result.image = std::move(rendered);
    if (options.keep_debug) {
        if (!result.environment)
            result.environment = illumination::estimate_environment(image, camera, options.environment);
        result.population = std::move(population);
    }
    return result;
}

}  // namespace rainaug
