// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/rain_physics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rainaug::physics {

std::size_t DropPopulation::streak_count() const {
    return static_cast<std::size_t>(std::count_if(drops.begin(), drops.end(),
                                                  [](const Drop& d) { return d.drop_class == DropClass::streak; }));
}

double DropPopulation::streak_fraction() const {
    return drops.empty() ? 0.0 : static_cast<double>(streak_count()) / static_cast<double>(drops.size());
}

double marshall_palmer_lambda(double rate_mm_h) {
    if (!(rate_mm_h > 0)) throw Error("Marshall-Palmer slope needs a positive rainfall rate");
    return 4.1 * std::pow(rate_mm_h, -0.21);
}

double drop_concentration(double rate_mm_h, double d_min_mm) {
    if (!(d_min_mm > 0)) throw Error("d_min must be positive");
    const double lambda = marshall_palmer_lambda(rate_mm_h);
    return kMarshallPalmerN0 / lambda * std::exp(-lambda * d_min_mm);
}

double truncated_exponential_cdf(double d_mm, double lambda, double d_min_mm, double d_max_mm) {
    if (d_mm <= d_min_mm) return 0.0;
    if (d_mm >= d_max_mm) return 1.0;
    return std::expm1(-lambda * (d_mm - d_min_mm)) / std::expm1(-lambda * (d_max_mm - d_min_mm));
}

double sample_diameter(double lambda, double d_min_mm, double d_max_mm, Rng& rng) {
    const double mass = -std::expm1(-lambda * (d_max_mm - d_min_mm));
    const double d = d_min_mm - std::log1p(-uniform01(rng) * mass) / lambda;
    return std::clamp(d, d_min_mm, d_max_mm);
}

std::vector<double> sample_diameters(std::size_t n, double lambda, double d_min_mm, double d_max_mm, Rng& rng) {
    if (!(d_min_mm < d_max_mm)) throw Error("sample_diameters: d_min must be below d_max");
    std::vector<double> out(n);
    for (auto& d : out) d = sample_diameter(lambda, d_min_mm, d_max_mm, rng);
    return out;
}

double terminal_velocity(double diameter_mm) {
    return std::max(0.0, 9.65 - 10.3 * std::exp(-0.6 * diameter_mm));
}

// ---------------------------------------------------------------------------

Frustum::Frustum(const CameraModel& camera, const RainfallConfig& config)
    : near_m(config.near_clip_m),
      far_m(config.max_depth_m),
      x_min_slope(-camera.cx / camera.fx),
      x_max_slope((camera.width - camera.cx) / camera.fx),
      y_min_slope(-camera.cy / camera.fy),
      y_max_slope((camera.height - camera.cy) / camera.fy),
      pad_m(config.lateral_pad_m) {}

double Frustum::cross_section(double z) const {
    return ((x_max_slope - x_min_slope) * z + 2 * pad_m) * ((y_max_slope - y_min_slope) * z + 2 * pad_m);
}

double Frustum::volume_to(double z) const {
    const double ax = x_max_slope - x_min_slope;
    const double ay = y_max_slope - y_min_slope;
    const double p2 = 2 * pad_m;
    auto antiderivative = [&](double s) { return ax * ay * s * s * s / 3 + p2 * (ax + ay) * s * s / 2 + p2 * p2 * s; };
    return antiderivative(z) - antiderivative(near_m);
}

Vec3 Frustum::sample(Rng& rng) const {
    // Depth by inverting the cumulative volume, safeguarded Newton.
    const double target = uniform01(rng) * volume();
    double lo = near_m, hi = far_m;
    double z = near_m + (far_m - near_m) * std::cbrt(target / volume());
    for (int it = 0; it < 50; ++it) {
        const double f = volume_to(z) - target;
        if (f > 0)
            hi = z;
        else
            lo = z;
        const double a = cross_section(z);
        double next = a > 0 ? z - f / a : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - z) < 1e-12 * far_m) {
            z = next;
            break;
        }
        z = next;
    }
    const double x0 = x_min_slope * z - pad_m, x1 = x_max_slope * z + pad_m;
    const double y0 = y_min_slope * z - pad_m, y1 = y_max_slope * z + pad_m;
    const double x = x0 + (x1 - x0) * uniform01(rng);
    const double y = y0 + (y1 - y0) * uniform01(rng);
    return {x, y, z};
}

// ---------------------------------------------------------------------------

Drop make_drop(double diameter_mm, const Vec3& start, const CameraModel& camera) {
    Drop drop;
    drop.diameter_mm = diameter_mm;
    drop.start = start;
    const Vec3 fall(0.0, terminal_velocity(diameter_mm), 0.0);  // +y is down
    drop.end = start + (fall - camera.ego_velocity) * camera.exposure_s;
    if (drop.end.z() > 0 && start.z() > 0) {
        drop.p0 = camera.project(drop.start);
        drop.p1 = camera.project(drop.end);
        drop.projected_width_px = camera.fx * (diameter_mm * 1e-3) / drop.position().z();
    }
    drop.drop_class = drop.projected_width_px >= 1.0 ? DropClass::streak : DropClass::fog_like;
    return drop;
}

DropPopulation simulate(const RainfallConfig& config, const CameraModel& camera, Rng& rng) {
    config.validate();
    camera.validate();

    DropPopulation pop;
    pop.rate_mm_h = config.rate_mm_h;
    pop.seed = config.seed;
    const Frustum frustum(camera, config);
    pop.volume_m3 = frustum.volume();
    if (!(pop.volume_m3 > 0)) throw Error("simulation frustum has zero volume");
    if (config.rate_mm_h == 0) return pop;

    const double lambda = marshall_palmer_lambda(config.rate_mm_h);
    // Concentration of drops inside [d_min, d_max].
    const double concentration = kMarshallPalmerN0 / lambda *
                                 (std::exp(-lambda * config.d_min_mm) - std::exp(-lambda * config.d_max_mm));
    pop.expected_count = concentration * pop.volume_m3;

    std::poisson_distribution<long long> poisson(pop.expected_count);
    const long long count = poisson(rng);
    pop.drops.reserve(static_cast<std::size_t>(count));

    for (long long i = 0; i < count; ++i) {
        const double diameter = sample_diameter(lambda, config.d_min_mm, config.d_max_mm, rng);
        const Vec3 start = frustum.sample(rng);
        const int oscillation = static_cast<int>(uniform01(rng) * kOscillationCount);
        Drop drop = make_drop(diameter, start, camera);
        // Drops crossing the image plane during the exposure are not imaged.
        if (drop.end.z() <= 1e-3) continue;
        drop.oscillation = oscillation;
        pop.drops.push_back(drop);
    }
    return pop;
}

DropPopulation simulate(const RainfallConfig& config, const CameraModel& camera) {
    Rng rng(config.seed);
    return simulate(config, camera, rng);
}

double pixel_dwell_time(const Drop& drop, double exposure_s) {
    const double length = drop.streak_length_px();
    if (!(length > 1.0)) return exposure_s;
    return exposure_s / length;
}

void write_drop_table(std::ostream& out, const DropPopulation& population) {
    out << "# diameter_mm X0.x X0.y X0.z X1.x X1.y X1.z p0.x p0.y p1.x p1.y class\n";
    for (const Drop& d : population.drops) {
        out << d.diameter_mm << ' ' << d.start.x() << ' ' << d.start.y() << ' ' << d.start.z() << ' ' << d.end.x()
            << ' ' << d.end.y() << ' ' << d.end.z() << ' ' << d.p0.x() << ' ' << d.p0.y() << ' ' << d.p1.x() << ' '
            << d.p1.y() << ' ' << (d.drop_class == DropClass::streak ? "streak" : "fog_like") << '\n';
    }
}

}  // namespace rainaug::physics
