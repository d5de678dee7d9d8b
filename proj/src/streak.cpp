// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/streak.hpp"

#include "rainaug/png_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>

namespace rainaug::streak {

double Raster::sum() const {
    double s = 0;
    for (float v : data) s += v;
    return s;
}

StreakSprite sprite_from_gray(const Raster& gray, double diameter_mm, int oscillation) {
    if (gray.width <= 0 || gray.height <= 0) throw Error("streak sprite is empty");
    const float peak = *std::max_element(gray.data.begin(), gray.data.end());
    if (!(peak > 0)) throw Error("streak sprite is all black");

    StreakSprite s;
    s.radiance = gray;
    for (float& v : s.radiance.data) v = std::max(0.f, v) / peak;
    s.alpha = s.radiance;
    s.diameter_mm = diameter_mm;
    s.oscillation = oscillation;
    s.source = SpriteSource::database;
    // Effective drop width: mean alpha mass per non-empty row.
    double mass = 0;
    int rows = 0;
    for (int y = 0; y < s.alpha.height; ++y) {
        double r = 0;
        for (int x = 0; x < s.alpha.width; ++x) r += s.alpha.at(x, y);
        if (r > 0) {
            mass += r;
            ++rows;
        }
    }
    s.core_width_px = std::max(1.0, rows > 0 ? mass / rows : 1.0);
    return s;
}

StreakLibrary::StreakLibrary(std::vector<StreakSprite> sprites) : sprites_(std::move(sprites)) {
    if (sprites_.empty()) throw Error("streak library is empty");
    std::map<double, std::vector<std::size_t>> by_diameter;
    for (std::size_t i = 0; i < sprites_.size(); ++i) by_diameter[sprites_[i].diameter_mm].push_back(i);
    for (auto& [d, idx] : by_diameter) {
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return sprites_[a].oscillation < sprites_[b].oscillation; });
        diameters_.push_back(d);
        bucket_.push_back(idx);
    }
}

double StreakLibrary::nearest_diameter(double diameter_mm) const {
    return diameters_[static_cast<std::size_t>(
        std::min_element(diameters_.begin(), diameters_.end(),
                         [&](double a, double b) { return std::abs(a - diameter_mm) < std::abs(b - diameter_mm); }) -
        diameters_.begin())];
}

const StreakSprite& StreakLibrary::select(double diameter_mm, int oscillation) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < diameters_.size(); ++i)
        if (std::abs(diameters_[i] - diameter_mm) < std::abs(diameters_[best] - diameter_mm)) best = i;
    const auto& idx = bucket_[best];
    const std::size_t k = static_cast<std::size_t>(std::abs(oscillation)) % idx.size();
    return sprites_[idx[k]];
}

StreakLibrary load_streak_library(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error("streak library '" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<StreakSprite> sprites;
    for (const auto& path : files) {
        const std::string stem = path.stem().string();
        const auto sep = stem.rfind('_');
        if (sep == std::string::npos) continue;
        double diameter = 0;
        int osc = 0;
        try {
            std::size_t used = 0;
            diameter = std::stod(stem.substr(0, sep), &used);
            if (used != sep) continue;
            osc = std::stoi(stem.substr(sep + 1), &used);
            if (used != stem.size() - sep - 1) continue;
        } catch (const std::exception&) {
            continue;
        }
        const png::Raster png = png::read(path.string());
        if (png.channels > 2) throw Error("'" + path.string() + "': streak sprites must be grayscale");
        Raster gray(png.width, png.height);
        for (int y = 0; y < png.height; ++y)
            for (int x = 0; x < png.width; ++x) gray.at(x, y) = static_cast<float>(png.at(x, y, 0)) / png.max_value();
        sprites.push_back(sprite_from_gray(gray, diameter, osc));
    }
    if (sprites.empty()) throw Error("streak library '" + dir + "' contains no <diameter>_<osc>.png sprite");
    return StreakLibrary(std::move(sprites));
}

// ---------------------------------------------------------------------------

Oscillation oscillation_from_seed(std::uint64_t seed, double width_px) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    Oscillation o;
    o.amplitude_px = u() * width_px / 2;
    o.periods = 1 + 2 * u();
    o.phase = 2 * std::numbers::pi * u();
    return o;
}

StreakSprite procedural_streak(double diameter_mm, double length_px, double width_px, const Oscillation& osc) {
    if (!(length_px >= 1) || !(width_px >= 1)) throw Error("procedural streak needs length and width >= 1 px");
    const double sigma = width_px / 3;
    const double amplitude = std::clamp(osc.amplitude_px, 0.0, width_px / 2);
    const int half = static_cast<int>(std::ceil(amplitude + 3 * sigma)) + 1;
    const int w = 2 * half;
    const int h = static_cast<int>(std::ceil(length_px));

    // Each pixel integrates the Gaussian profile over its extent, so the row
    // mass does not depend on the sub-pixel centre.
    Raster gray(w, h);
    const double inv = 1.0 / (std::numbers::sqrt2 * sigma);
    for (int y = 0; y < h; ++y) {
        const double centre =
            half + amplitude * std::sin(2 * std::numbers::pi * osc.periods * (y + 0.5) / h + osc.phase);
        for (int x = 0; x < w; ++x)
            gray.at(x, y) = static_cast<float>(0.5 * (std::erf((x + 1 - centre) * inv) - std::erf((x - centre) * inv)));
    }
    StreakSprite s = sprite_from_gray(gray, diameter_mm, 0);
    s.source = SpriteSource::procedural;
    s.core_width_px = width_px;
    return s;
}

StreakSprite procedural_streak(double diameter_mm, double length_px, double width_px, std::uint64_t oscillation_seed) {
    StreakSprite s =
        procedural_streak(diameter_mm, length_px, width_px, oscillation_from_seed(oscillation_seed, width_px));
    s.oscillation = static_cast<int>(oscillation_seed % 1000);
    return s;
}

// ---------------------------------------------------------------------------

Eigen::Matrix3d homography_from_points(const std::array<Vec2, 4>& source, const std::array<Vec2, 4>& target) {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        const double x = source[i].x(), y = source[i].y();
        const double u = target[i].x(), v = target[i].y();
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    const Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
    if (!lu.isInvertible()) throw Error("homography: degenerate point configuration");
    const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
    Eigen::Matrix3d m;
    m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    return m;
}

Vec2 apply_homography(const Eigen::Matrix3d& h, const Vec2& p) {
    const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
    return q.head<2>() / q.z();
}

std::array<Vec2, 4> sprite_quad(const StreakSprite& sprite) {
    const double w = sprite.radiance.width, h = sprite.radiance.height;
    return {Vec2(0, 0), Vec2(w, 0), Vec2(w, h), Vec2(0, h)};
}

std::array<Vec2, 4> target_quad(const Vec2& p0, const Vec2& p1, double width_px) {
    // Pixel-centre coordinates -> continuous coordinates (pixel x spans [x, x+1)).
    const Vec2 a = p0 + Vec2(0.5, 0.5), b = p1 + Vec2(0.5, 0.5);
    const Vec2 axis = b - a;
    const double len = axis.norm();
    if (!(len > 0)) throw Error("warp_streak: streak endpoints coincide");
    const Vec2 t = axis / len;
    const Vec2 n(t.y(), -t.x());  // sprite +x for a downward streak maps to image +x
    const double hw = width_px / 2;
    return {a - n * hw, a + n * hw, b + n * hw, b - n * hw};
}

namespace {

bool quad_is_degenerate(const std::array<Vec2, 4>& q) {
    double area = 0;
    for (int i = 0; i < 4; ++i) {
        const Vec2& a = q[i];
        const Vec2& b = q[(i + 1) % 4];
        area += a.x() * b.y() - b.x() * a.y();
    }
    if (std::abs(area) < 1e-9) return true;
    for (int i = 0; i < 4; ++i) {
        const Vec2 e0 = q[(i + 1) % 4] - q[i];
        const Vec2 e1 = q[(i + 2) % 4] - q[(i + 1) % 4];
        if (std::abs(e0.x() * e1.y() - e0.y() * e1.x()) < 1e-12) return true;
    }
    return false;
}

// Bilinear sample at continuous coordinates, zero outside the raster.
float sample(const Raster& r, double sx, double sy) {
    const double x = sx - 0.5, y = sy - 0.5;
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto px = [&](int xi, int yi) -> double {
        return (xi < 0 || yi < 0 || xi >= r.width || yi >= r.height) ? 0.0 : r.at(xi, yi);
    };
    const double top = px(x0, y0) * (1 - fx) + px(x0 + 1, y0) * fx;
    const double bottom = px(x0, y0 + 1) * (1 - fx) + px(x0 + 1, y0 + 1) * fx;
    return static_cast<float>(top * (1 - fy) + bottom * fy);
}

}  // namespace

WarpedStreak warp_streak(const StreakSprite& sprite, const Vec2& p0, const Vec2& p1, double width_px) {
    if (!(width_px > 0)) throw Error("warp_streak: width must be positive");
    const auto source = sprite_quad(sprite);
    const auto target = target_quad(p0, p1, width_px);
    if (quad_is_degenerate(target)) throw Error("warp_streak: degenerate target quad");

    WarpedStreak out;
    out.homography = homography_from_points(source, target);
    const Eigen::Matrix3d inverse = out.homography.inverse();

    double xmin = target[0].x(), xmax = xmin, ymin = target[0].y(), ymax = ymin;
    for (const auto& p : target) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    out.x0 = static_cast<int>(std::floor(xmin));
    out.y0 = static_cast<int>(std::floor(ymin));
    const int w = std::max(1, static_cast<int>(std::ceil(xmax)) - out.x0);
    const int h = std::max(1, static_cast<int>(std::ceil(ymax)) - out.y0);
    out.radiance = Raster(w, h);
    out.alpha = Raster(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Eigen::Vector3d s = inverse * Eigen::Vector3d(out.x0 + x + 0.5, out.y0 + y + 0.5, 1.0);
            if (s.z() <= 0) continue;
            const double sx = s.x() / s.z(), sy = s.y() / s.z();
            out.radiance.at(x, y) = sample(sprite.radiance, sx, sy);
            out.alpha.at(x, y) = std::clamp(sample(sprite.alpha, sx, sy), 0.f, 1.f);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

double circle_of_confusion(double distance_m, const CameraModel& camera) {
    if (!(distance_m > 0)) throw Error("circle_of_confusion: distance must be positive");
    const double f = camera.focal_m, fp = camera.focus_plane_m;
    const double c = (distance_m - fp) * f * f / (distance_m * (fp - f) * camera.f_number);
    return std::abs(c) / camera.pixel_pitch();
}

Raster disk_kernel(double radius_px) {
    if (!(radius_px >= 0.5)) return Raster(1, 1, 1.f);
    const int r = static_cast<int>(std::ceil(radius_px));
    Raster k(2 * r + 1, 2 * r + 1);
    int count = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= radius_px * radius_px) {
                k.at(dx + r, dy + r) = 1.f;
                ++count;
            }
    for (float& v : k.data) v /= static_cast<float>(count);
    return k;
}

Raster defocus(const Raster& raster, double radius_px) {
    if (!(radius_px >= 0)) throw Error("defocus: radius must be >= 0");
    if (radius_px < 0.5) return raster;
    const Raster kernel = disk_kernel(radius_px);
    const int r = kernel.width / 2;

    // Scatter each source pixel over its disk; taps are collected once.
    std::vector<std::pair<int, int>> taps;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (kernel.at(dx + r, dy + r) > 0) taps.emplace_back(dx, dy);
    const float weight = kernel.at(r, r);

    Raster out(raster.width + 2 * r, raster.height + 2 * r);
    for (int y = 0; y < raster.height; ++y)
        for (int x = 0; x < raster.width; ++x) {
            const float v = raster.at(x, y);
            if (v == 0.f) continue;
            const float wv = v * weight;
            for (const auto& [dx, dy] : taps) out.at(x + r + dx, y + r + dy) += wv;
        }
    return out;
}

void defocus(WarpedStreak& streak, double radius_px) {
    if (radius_px < 0.5) return;
    const int r = static_cast<int>(std::ceil(radius_px));
    streak.radiance = defocus(streak.radiance, radius_px);
    streak.alpha = defocus(streak.alpha, radius_px);
    for (float& a : streak.alpha.data) a = std::min(a, 1.f);
    streak.x0 -= r;
    streak.y0 -= r;
}

// ---------------------------------------------------------------------------

void blend_streak(ImageBuffer& image, const WarpedStreak& streak, const BlendParams& p) {
    if (!(p.exposure > 0)) throw Error("blend_streak: exposure must be positive");
    if (!(p.tau1 >= 0) || p.tau1 > p.exposure) throw Error("blend_streak: dwell time must lie in [0, T]");
    if (!(p.tau0 > 0)) throw Error("blend_streak: reference dwell time must be positive");
    const double gain = p.tau1 / p.tau0;
    const Rgb add{p.weight[0] * gain, p.weight[1] * gain, p.weight[2] * gain};

    const int xs = std::max(0, -streak.x0), ys = std::max(0, -streak.y0);
    const int xe = std::min(streak.radiance.width, image.width() - streak.x0);
    const int ye = std::min(streak.radiance.height, image.height() - streak.y0);
    for (int y = ys; y < ye; ++y) {
        const int iy = streak.y0 + y;
        for (int x = xs; x < xe; ++x) {
            const float a = streak.alpha.at(x, y);
            const float s = streak.radiance.at(x, y);
            if (a == 0.f && s == 0.f) continue;
            const int ix = streak.x0 + x;
            if (p.occlusion_depth && p.occlusion_depth->at(ix, iy) < p.drop_depth) continue;
            const double background = (p.exposure - std::clamp<double>(a, 0, 1) * p.tau1) / p.exposure;
            for (int c = 0; c < 3; ++c) {
                const double v = background * image.at(ix, iy, c) + s * add[c];
                image.at(ix, iy, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
}

ImageBuffer restore_luminosity(const ImageBuffer& rendered, const ImageBuffer& original) {
    if (rendered.width() != original.width() || rendered.height() != original.height())
        throw Error("restore_luminosity: image dimensions differ");
    const double target = original.mean();
    const double current = rendered.mean();
    if (!(current > 0)) throw Error("restore_luminosity: rendered image has zero mean");

    auto apply = [&](double k) {
        ImageBuffer out = rendered;
        for (float& v : out.data()) v = static_cast<float>(std::clamp(v * k, 0.0, 1.0));
        return out;
    };
    const double k = target / current;
    ImageBuffer out = apply(k);
    if (std::abs(out.mean() - target) <= 1e-5) return out;

    // Clipping at 1 ate part of the gain: the clamped mean is monotone in k,
    // so bisect for the gain that restores it.
    auto clamped_mean = [&](double g) {
        double s = 0;
        for (float v : rendered.data()) s += std::clamp(v * g, 0.0, 1.0);
        return s / static_cast<double>(rendered.data().size());
    };
    double lo = k, hi = k;
    if (clamped_mean(k) < target) {
        for (int i = 0; i < 64 && clamped_mean(hi) < target; ++i) hi *= 2;
    } else {
        for (int i = 0; i < 64 && clamped_mean(lo) > target; ++i) lo /= 2;
    }
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (clamped_mean(mid) < target ? lo : hi) = mid;
    }
    return apply(0.5 * (lo + hi));
}

}  // namespace rainaug::streak
