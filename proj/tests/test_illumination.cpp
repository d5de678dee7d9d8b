// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/illumination.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

using namespace rainaug;
using namespace rainaug::illumination;
using std::numbers::pi;

namespace {

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

// Explicit Rodrigues rotation matrix, written out element by element.
Eigen::Matrix3d rotation_matrix(const Vec3& axis, double angle) {
    const Vec3 k = axis.normalized();
    const double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
    Eigen::Matrix3d r;
    r << t * k.x() * k.x() + c, t * k.x() * k.y() - s * k.z(), t * k.x() * k.z() + s * k.y(),
        t * k.x() * k.y() + s * k.z(), t * k.y() * k.y() + c, t * k.y() * k.z() - s * k.x(),
        t * k.x() * k.z() - s * k.y(), t * k.y() * k.z() + s * k.x(), t * k.z() * k.z() + c;
    return r;
}

// Marches along the ray and bisects the sign change of |p| - radius.
Vec3 ray_march_sphere(const Vec3& origin, const Vec3& dir, double radius) {
    const Vec3 d = dir.normalized();
    double lo = 0, hi = 0;
    const double step = radius / 64;
    while ((origin + hi * d).norm() < radius) {
        lo = hi;
        hi += step;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((origin + mid * d).norm() < radius ? lo : hi) = mid;
    }
    return origin + 0.5 * (lo + hi) * d;
}

EnvironmentMap uniform_map(double v, int w = 256, int h = 128) {
    EnvironmentMap env(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) env.at(c, r) = {v, v, v};
    env.finalize();
    return env;
}

EnvironmentMap two_band_map(int w = 256, int h = 128) {
    EnvironmentMap env(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double v = r < h / 2 ? 1.0 : 0.0;
            env.at(c, r) = {v, v, v};
        }
    env.finalize();
    return env;
}

// Fraction of map-area inside the drop cone that lies in the upper hemisphere,
// by uniform sampling of map coordinates.
double monte_carlo_upper_fraction(const EnvironmentMap& env, const Vec3& x, double fov_deg, int samples) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> col(0, env.width()), row(0, env.height());
    const Vec3 axis = x.normalized();
    const double cos_half = std::cos(fov_deg * pi / 360);
    long inside = 0, upper = 0;
    for (int i = 0; i < samples; ++i) {
        const double c = col(rng), r = row(rng);
        const Vec3 p = env.radius() * env.cell_direction(c, r);
        if ((p - x).normalized().dot(axis) < cos_half) continue;
        ++inside;
        if (r < env.height() / 2.0) ++upper;
    }
    return static_cast<double>(upper) / inside;
}

}  // namespace

TEST_CASE("environment map of a uniform image is uniform") {
    const CameraModel cam = rainaug::testing::small_camera();
    const ImageBuffer img(cam.width, cam.height, 0.5f);
    const EnvironmentMap env = estimate_environment(img, cam);
    CHECK(env.width() == 256);
    CHECK(env.height() == 128);
    CHECK(env.radius() == 10.0);
    for (int r = 0; r < env.height(); ++r)
        for (int c = 0; c < env.width(); ++c)
            for (int k = 0; k < 3; ++k) REQUIRE(env.at(c, r)[k] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(env.mean()[0] == doctest::Approx(0.5));
}

TEST_CASE("environment altitude profile follows a bright sky over dark ground") {
    const CameraModel cam = rainaug::testing::small_camera();
    ImageBuffer img(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
            for (int k = 0; k < 3; ++k) img.at(x, y, k) = y < cam.cy ? 0.9f : 0.1f;
    const EnvironmentMap env = estimate_environment(img, cam);

    double previous = 2.0;
    for (int r = 0; r < env.height(); ++r) {
        double row_mean = 0;
        for (int c = 0; c < env.width(); ++c) row_mean += env.at(c, r)[0];
        row_mean /= env.width();
        CHECK(row_mean <= previous + 1e-9);
        previous = row_mean;
        // No holes: every cell finite and non-negative.
        for (int c = 0; c < env.width(); ++c) CHECK(env.at(c, r)[0] >= 0);
    }
    CHECK(env.at(0, 0)[0] == doctest::Approx(0.9));
    CHECK(env.at(0, env.height() - 1)[0] == doctest::Approx(0.1));
}

TEST_CASE("sun irradiance proxy") {
    const ImageBuffer black(8, 8, 0.f);
    const ImageBuffer gray(8, 8, 0.5f);
    RainfallConfig cfg;
    CHECK(estimate_sun_irradiance(black, cfg)[0] == 0.0);
    CHECK(estimate_sun_irradiance(gray, cfg)[1] == doctest::Approx(0.5));
    cfg.irradiance_scale = 2.0;
    CHECK(estimate_sun_irradiance(gray, cfg)[2] == doctest::Approx(1.0));
}

TEST_CASE("drop view cone") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 x(n(rng), n(rng), n(rng));
        const auto cone = drop_view_cone(x, 165.0, 20);
        REQUIRE(cone.size() == 20);
        for (const Vec3& v : cone) {
            CHECK(v.norm() == doctest::Approx(1.0));
            CHECK(std::abs(angle_between(v, x) - 82.5 * pi / 180) < 1e-9);
        }
        // Radially equidistant around the axis.
        const Vec3 d = x.normalized();
        for (std::size_t k = 0; k < cone.size(); ++k) {
            const Vec3 a = cone[k] - cone[k].dot(d) * d;
            const Vec3 b = cone[(k + 1) % cone.size()] - cone[(k + 1) % cone.size()].dot(d) * d;
            CHECK(angle_between(a, b) == doctest::Approx(2 * pi / 20));
        }
    }

    for (const Vec3& v : drop_view_cone(Vec3(1, 2, 3), 0.0, 8)) CHECK((v - Vec3(1, 2, 3).normalized()).norm() < 1e-12);

    // Forward drop, 90 degree cone, against explicit rotation matrices.
    const auto cone = drop_view_cone(Vec3(0, 0, 5), 90.0, 12);
    const Vec3 d = Vec3::UnitZ();
    const Vec3 u = d.cross(Vec3::UnitX()).normalized();
    const Vec3 v = rotation_matrix(u, pi / 4) * d;
    for (int k = 0; k < 12; ++k) {
        CHECK(cone[k].z() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
        CHECK((cone[k] - rotation_matrix(d, 2 * pi * k / 12) * v).norm() < 1e-12);
    }

    CHECK_THROWS_AS(drop_view_cone(Vec3::Zero()), Error);
}

TEST_CASE("sphere intersection") {
    CHECK((sphere_intersect(Vec3::Zero(), Vec3(0, 0, 1), 10) - Vec3(0, 0, 10)).norm() < 1e-12);
    CHECK((sphere_intersect(Vec3::Zero(), Vec3(1, 0, 0), 10) - Vec3(10, 0, 0)).norm() < 1e-12);
    const Vec3 p = sphere_intersect(Vec3(3, 0, 0), Vec3(0, 0, 1), 10);
    CHECK(p.x() == doctest::Approx(3));
    CHECK(p.z() == doctest::Approx(9.5393920142).epsilon(1e-10));
    CHECK((p - ray_march_sphere(Vec3(3, 0, 0), Vec3(0, 0, 1), 10)).norm() < 1e-9);

    CHECK_THROWS_AS(sphere_intersect(Vec3(11, 0, 0), Vec3(1, 0, 0), 10), Error);
    CHECK_THROWS_AS(sphere_intersect(Vec3(10, 0, 0), Vec3(1, 0, 0), 10), Error);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
        const Vec3 origin = Vec3(n(rng), n(rng), n(rng)).normalized() * (9.99 * std::cbrt(u(rng)));
        const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
        const Vec3 q = sphere_intersect(origin, dir, 10);
        CHECK(std::abs(q.norm() - 10) <= 1e-9 * 10);
        CHECK((q - origin).dot(dir) >= 0);
        CHECK(((q - origin) - (q - origin).dot(dir) * dir).norm() < 1e-9);
    }
}

TEST_CASE("drop field of view") {
    SUBCASE("uniform map") {
        const EnvironmentMap env = uniform_map(0.3);
        for (const Vec3& x : {Vec3(0, 0, 2), Vec3(1, -0.5, 3), Vec3(-2, 1, 0.5), Vec3(0, 0, -3)}) {
            const DropFov fov = drop_fov(x, env);
            CHECK(fov.cell_count > 0);
            CHECK(fov.mean[0] == doctest::Approx(0.3));
        }
    }

    SUBCASE("on-axis drop is symmetric about the forward column") {
        const EnvironmentMap env = uniform_map(1.0);
        const DropFov fov = drop_fov(Vec3(0, 0, 2), env);
        const auto mask = fov.mask(env.width(), env.height());
        const int w = env.width();
        for (int r = 0; r < env.height(); ++r) {
            int left = 0, right = 0;
            for (int c = 0; c < w / 2; ++c) left += mask[static_cast<std::size_t>(r) * w + c];
            for (int c = w / 2; c < w; ++c) right += mask[static_cast<std::size_t>(r) * w + c];
            CHECK(std::abs(left - right) <= 1);
        }
    }

    SUBCASE("two-band map against Monte-Carlo area fraction") {
        const EnvironmentMap env = two_band_map();
        for (const Vec3& x : {Vec3(0, 0, 2), Vec3(0.5, -0.3, 2.5), Vec3(-1, 0.4, 1.5)}) {
            const DropFov fov = drop_fov(x, env, 165.0, 20);
            const double oracle = monte_carlo_upper_fraction(env, x, 165.0, 1000000);
            CHECK(fov.mean[0] == doctest::Approx(oracle).epsilon(0.03));
            // The polygon converges to the exact cone with more contour samples.
            const DropFov fine = drop_fov(x, env, 165.0, 720);
            CHECK(fine.mean[0] == doctest::Approx(oracle).epsilon(0.01));
        }
    }

    SUBCASE("cone containing the zenith wraps all azimuths") {
        const EnvironmentMap env = two_band_map();
        const DropFov fov = drop_fov(Vec3(0.2, -3, 0.5), env, 165.0, 20);
        // Top row fully inside.
        const auto mask = fov.mask(env.width(), env.height());
        int top = 0;
        for (int c = 0; c < env.width(); ++c) top += mask[c];
        CHECK(top == env.width());
        const double oracle = monte_carlo_upper_fraction(env, Vec3(0.2, -3, 0.5), 165.0, 1000000);
        CHECK(fov.mean[0] == doctest::Approx(oracle).epsilon(0.03));
    }

    SUBCASE("area invariant under rotation about the vertical axis") {
        const EnvironmentMap env = uniform_map(1.0);
        const std::size_t reference = drop_fov(Vec3(0, -0.4, 2), env).cell_count;
        for (double a = 0; a < 2 * pi; a += pi / 7) {
            const Vec3 x(2 * std::sin(a), -0.4, 2 * std::cos(a));
            const std::size_t count = drop_fov(x, env).cell_count;
            CHECK(std::abs(static_cast<double>(count) - static_cast<double>(reference)) <= env.width());
        }
    }

    SUBCASE("mean bounded by the map range") {
        EnvironmentMap env(64, 32);
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0.2, 0.7);
        for (int r = 0; r < 32; ++r)
            for (int c = 0; c < 64; ++c) env.at(c, r) = {u(rng), u(rng), u(rng)};
        env.finalize();
        for (const Vec3& x : {Vec3(0, 0, 1), Vec3(3, 1, 2), Vec3(0, 0, 20)}) {
            const DropFov fov = drop_fov(x, env);
            for (int k = 0; k < 3; ++k) {
                CHECK(fov.mean[k] >= 0.2);
                CHECK(fov.mean[k] <= 0.7);
            }
        }
    }
}

TEST_CASE("streak photometric weight") {
    CHECK(streak_photometric_weight(Rgb{1, 1, 1}, Rgb{1, 1, 1})[0] == doctest::Approx(1.0));
    CHECK(streak_photometric_weight(Rgb{1, 1, 1}, Rgb{0, 0, 0})[1] == doctest::Approx(0.94));
    CHECK(streak_photometric_weight(Rgb{0, 0, 0}, Rgb{1, 1, 1})[2] == doctest::Approx(0.06));
}
