// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/png_io.hpp"
#include "rainaug/streak.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace rainaug;
using namespace rainaug::streak;
using rainaug::testing::TempDir;

namespace {

void write_sprite(const std::string& path, int w, int h, std::uint16_t peak) {
    png::Raster r{w, h, 1, 8, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, 0)};
    for (int y = 0; y < h; ++y) r.samples[static_cast<std::size_t>(y) * w + w / 2] = peak;
    r.samples[w / 2 - 1] = peak / 2;
    png::write(path, r);
}

}  // namespace

TEST_CASE("database dwell time constant") {
    CHECK(kDatabaseDwellTime == doctest::Approx(6.32455532e-4).epsilon(1e-8));
}

TEST_CASE("streak library") {
    TempDir dir("lib");
    write_sprite(dir.file("1_0.png"), 5, 20, 200);
    write_sprite(dir.file("2_0.png"), 5, 30, 180);
    write_sprite(dir.file("2_1.png"), 5, 30, 90);
    write_sprite(dir.file("3_0.png"), 7, 40, 255);
    std::ofstream(dir.file("README.txt")) << "ignored";

    const StreakLibrary lib = load_streak_library(dir.path().string());
    CHECK(lib.size() == 4);
    CHECK(lib.diameters() == std::vector<double>{1, 2, 3});
    CHECK(lib.nearest_diameter(2.4) == 2.0);
    CHECK(lib.select(2.4, 1).oscillation == 1);
    CHECK(lib.select(2.4, 3).oscillation == 1);  // wraps within the bucket
    CHECK(lib.select(9.0, 0).diameter_mm == 3.0);

    const StreakSprite& s = lib.select(1.0, 0);
    CHECK(s.source == SpriteSource::database);
    CHECK(s.alpha.at(0, 5) == 0.f);
    CHECK(s.alpha.at(2, 5) == 1.f);
    CHECK(s.alpha.at(1, 0) == doctest::Approx(0.5));

    TempDir empty("lib_empty");
    CHECK_THROWS_AS(load_streak_library(empty.path().string()), Error);
    CHECK_THROWS_AS(load_streak_library(empty.file("nope")), Error);

    std::ofstream(dir.file("4_0.png")) << "corrupt";
    CHECK_THROWS_AS(load_streak_library(dir.path().string()), Error);
}

TEST_CASE("procedural streak") {
    SUBCASE("no oscillation is column symmetric") {
        const StreakSprite s = procedural_streak(2.0, 30, 3, Oscillation{0, 1, 0});
        for (int y = 0; y < s.radiance.height; ++y)
            for (int x = 0; x < s.radiance.width / 2; ++x)
                CHECK(s.radiance.at(x, y) == doctest::Approx(s.radiance.at(s.radiance.width - 1 - x, y)).epsilon(1e-5));
    }

    SUBCASE("row mass is nearly constant along the streak") {
        for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
            const StreakSprite s = procedural_streak(3.0, 60, 3, seed);
            std::vector<double> rows;
            for (int y = 0; y < s.alpha.height; ++y) {
                double r = 0;
                for (int x = 0; x < s.alpha.width; ++x) r += s.alpha.at(x, y);
                rows.push_back(r);
            }
            double mean = 0;
            for (double r : rows) mean += r;
            mean /= static_cast<double>(rows.size());
            for (double r : rows) CHECK(std::abs(r - mean) <= 0.1 * mean);
        }
    }

    SUBCASE("deterministic, bounded oscillation, alpha zero where radiance zero") {
        const StreakSprite a = procedural_streak(3.0, 40, 4, std::uint64_t{7});
        const StreakSprite b = procedural_streak(3.0, 40, 4, std::uint64_t{7});
        CHECK(a.radiance.data == b.radiance.data);
        CHECK(a.alpha.data == b.alpha.data);
        const Oscillation o = oscillation_from_seed(7, 4);
        CHECK(o.amplitude_px <= 2.0);
        CHECK(o.periods >= 1.0);
        CHECK(o.periods <= 3.0);
        for (std::size_t i = 0; i < a.alpha.data.size(); ++i)
            if (a.radiance.data[i] == 0.f) CHECK(a.alpha.data[i] == 0.f);
    }

    CHECK_THROWS_AS(procedural_streak(1.0, 0.5, 2, std::uint64_t{1}), Error);
}

TEST_CASE("homography warp") {
    const StreakSprite sprite = procedural_streak(2.0, 24, 3, Oscillation{1.0, 2, 0.3});
    const int w = sprite.radiance.width, h = sprite.radiance.height;

    SUBCASE("identity") {
        // Axis endpoints, in pixel-centre coordinates, of the sprite's own quad.
        const Vec2 p0(w / 2.0 - 0.5, -0.5), p1(w / 2.0 - 0.5, h - 0.5);
        const WarpedStreak out = warp_streak(sprite, p0, p1, w);
        CHECK((out.homography - Eigen::Matrix3d::Identity()).norm() < 1e-9);
        REQUIRE(out.radiance.width == w);
        REQUIRE(out.radiance.height == h);
        CHECK(out.x0 == 0);
        CHECK(out.y0 == 0);
        for (std::size_t i = 0; i < out.radiance.data.size(); ++i)
            CHECK(std::abs(out.radiance.data[i] - sprite.radiance.data[i]) < 1e-6);
    }

    SUBCASE("corner correspondence on random configurations") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> pos(-50, 500), len(1, 200), width(1, 30), ang(0, 2 * M_PI);
        for (int i = 0; i < 100; ++i) {
            const Vec2 p0(pos(rng), pos(rng));
            const double a = ang(rng);
            const Vec2 p1 = p0 + len(rng) * Vec2(std::cos(a), std::sin(a));
            const double wpx = width(rng);
            const WarpedStreak out = warp_streak(sprite, p0, p1, wpx);
            const auto src = sprite_quad(sprite);
            const auto dst = target_quad(p0, p1, wpx);
            for (int k = 0; k < 4; ++k) CHECK((apply_homography(out.homography, src[k]) - dst[k]).norm() < 1e-3);
        }
    }

    SUBCASE("rotated target lays the streak horizontally") {
        const WarpedStreak out = warp_streak(sprite, Vec2(100, 50), Vec2(100 + h, 50), w);
        CHECK(out.radiance.width > out.radiance.height);
        // Mass per column roughly constant, per row concentrated.
        double centre_row = 0, edge_row = 0;
        const int cy = 50 - out.y0;
        for (int x = 0; x < out.radiance.width; ++x) {
            centre_row += out.alpha.at(x, cy);
            edge_row += out.alpha.at(x, 0);
        }
        CHECK(centre_row > 4 * edge_row);
    }

    SUBCASE("degenerate targets") {
        CHECK_THROWS_AS(warp_streak(sprite, Vec2(3, 3), Vec2(3, 3), 4), Error);
        CHECK_THROWS_AS(warp_streak(sprite, Vec2(3, 3), Vec2(3, 9), 0), Error);
        const std::array<Vec2, 4> collinear{Vec2(0, 0), Vec2(1, 0), Vec2(2, 0), Vec2(3, 0)};
        CHECK_THROWS_AS(homography_from_points(sprite_quad(sprite), collinear), Error);
    }
}

TEST_CASE("circle of confusion") {
    CameraModel cam = rainaug::testing::kitti_camera();
    cam.fx = cam.fy = 700;
    CHECK(circle_of_confusion(6.0, cam) == doctest::Approx(0.0));
    CHECK(circle_of_confusion(2.0, cam) == doctest::Approx(0.7007007).epsilon(1e-6));
    const double limit = cam.focal_m * cam.focal_m / ((cam.focus_plane_m - cam.focal_m) * cam.f_number);
    CHECK(circle_of_confusion(1e12, cam) == doctest::Approx(limit / cam.pixel_pitch()).epsilon(1e-6));
    CHECK_THROWS_AS(circle_of_confusion(0.0, cam), Error);
}

TEST_CASE("defocus") {
    Raster impulse(1, 1, 1.f);
    CHECK(defocus(impulse, 0.0).data == impulse.data);
    CHECK(defocus(impulse, 0.4).data == impulse.data);

    const Raster disk = defocus(impulse, 2.0);
    CHECK(disk.width == 5);
    int nonzero = 0;
    for (float v : disk.data)
        if (v > 0) {
            ++nonzero;
            CHECK(v == doctest::Approx(1.0 / 13));
        }
    // Lattice points within radius 2: 13, close to pi * 2^2.
    CHECK(nonzero == 13);
    CHECK(std::abs(nonzero - M_PI * 4) < 1.0);

    const StreakSprite s = procedural_streak(3.0, 50, 4, std::uint64_t{5});
    for (double r : {0.6, 1.5, 3.7, 8.0}) CHECK(defocus(s.alpha, r).sum() == doctest::Approx(s.alpha.sum()).epsilon(1e-6));
    CHECK_THROWS_AS(defocus(impulse, -1.0), Error);
}

TEST_CASE("blend_streak") {
    WarpedStreak st;
    st.x0 = 1;
    st.y0 = 1;
    st.radiance = Raster(2, 2, 0.f);
    st.alpha = Raster(2, 2, 0.f);
    ImageBuffer img(4, 4, 0.4f);

    BlendParams p;
    p.exposure = 0.002;
    p.tau1 = kDatabaseDwellTime;

    SUBCASE("empty sprite leaves the image") {
        ImageBuffer out = img;
        blend_streak(out, st, p);
        CHECK(out == img);
    }

    SUBCASE("single pixel reference value") {
        st.radiance.at(0, 0) = 0.2f;
        st.alpha.at(0, 0) = 1.f;
        ImageBuffer out = img;
        blend_streak(out, st, p);
        CHECK(out.at(1, 1, 0) == doctest::Approx(0.4735088936).epsilon(1e-6));
        CHECK(out.at(2, 2, 0) == 0.4f);
        CHECK(out.at(0, 0, 0) == 0.4f);
    }

    SUBCASE("weight, clipping to the image and occlusion") {
        st.x0 = -1;
        st.y0 = 3;
        st.radiance = Raster(3, 3, 1.f);
        st.alpha = Raster(3, 3, 1.f);
        p.weight = {0.5, 0.0, 1.0};
        p.tau1 = p.exposure;
        ImageBuffer out = img;
        blend_streak(out, st, p);
        CHECK(out.at(0, 3, 1) == 0.0f);  // background removed, no green added
        CHECK(out.at(0, 3, 2) == 1.0f);  // clamped
        CHECK(out.at(2, 2, 0) == 0.4f);

        DepthMap depth(4, 4, 1.f);
        p.occlusion_depth = &depth;
        p.drop_depth = 2.0;
        ImageBuffer hidden = img;
        blend_streak(hidden, st, p);
        CHECK(hidden == img);
    }

    SUBCASE("background coefficient stays in [0,1]") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 200; ++i) {
            st.radiance = Raster(2, 2, static_cast<float>(u(rng)));
            st.alpha = Raster(2, 2, static_cast<float>(u(rng)));
            p.tau1 = u(rng) * p.exposure;
            ImageBuffer out(4, 4, static_cast<float>(u(rng)));
            blend_streak(out, st, p);
            for (float v : out.data()) CHECK((v >= 0.f && v <= 1.f));
        }
    }

    SUBCASE("dwell time longer than the exposure") {
        p.tau1 = 0.003;
        CHECK_THROWS_AS(blend_streak(img, st, p), Error);
    }
}

TEST_CASE("restore_luminosity") {
    ImageBuffer original(8, 8, 0.5f);
    ImageBuffer same = original;
    CHECK(restore_luminosity(same, original) == original);

    ImageBuffer darker(8, 8, 0.25f);
    const ImageBuffer restored = restore_luminosity(darker, original);
    CHECK(restored.at(3, 3, 1) == doctest::Approx(0.5));

    // Clipping pixels: the gain is raised until the mean matches again.
    ImageBuffer mixed(8, 8, 0.2f);
    for (int x = 0; x < 8; ++x) mixed.at(x, 0, 0) = 0.9f;
    ImageBuffer target(8, 8, 0.45f);
    const ImageBuffer out = restore_luminosity(mixed, target);
    CHECK(std::abs(out.mean() - target.mean()) <= 1e-3);

    CHECK_THROWS_AS(restore_luminosity(ImageBuffer(8, 8, 0.f), original), Error);
    CHECK_THROWS_AS(restore_luminosity(ImageBuffer(4, 8, 0.1f), original), Error);
}
