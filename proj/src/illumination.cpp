// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/illumination.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rainaug::illumination {

using std::numbers::pi;

EnvironmentMap::EnvironmentMap(int width, int height, double radius_m)
    : width_(width), height_(height), radius_(radius_m) {
    if (width < 4 || height < 2) throw Error("environment map is too small");
    if (!(radius_m > 0)) throw Error("environment sphere radius must be positive");
    cells_.assign(static_cast<std::size_t>(width) * height, Rgb{0, 0, 0});
    finalize();
}

Vec3 EnvironmentMap::cell_direction(double col, double row) const {
    const double azimuth = col / width_ * 2 * pi - pi;
    const double altitude = pi / 2 - row / height_ * pi;
    const double c = std::cos(altitude);
    return {c * std::sin(azimuth), -std::sin(altitude), c * std::cos(azimuth)};
}

Vec2 EnvironmentMap::to_map(const Vec3& direction) const {
    const Vec3 d = direction.normalized();
    const double azimuth = std::atan2(d.x(), d.z());
    const double altitude = std::asin(std::clamp(-d.y(), -1.0, 1.0));
    return {(azimuth + pi) / (2 * pi) * width_, (pi / 2 - altitude) / pi * height_};
}

void EnvironmentMap::finalize() {
    prefix_.assign(static_cast<std::size_t>(width_ + 1) * height_, Rgb{0, 0, 0});
    Rgb total{0, 0, 0};
    for (int r = 0; r < height_; ++r) {
        Rgb* row = &prefix_[static_cast<std::size_t>(r) * (width_ + 1)];
        for (int c = 0; c < width_; ++c)
            for (int k = 0; k < 3; ++k) row[c + 1][k] = row[c][k] + at(c, r)[k];
        for (int k = 0; k < 3; ++k) total[k] += row[width_][k];
    }
    const double n = static_cast<double>(cells_.size());
    for (int k = 0; k < 3; ++k) mean_[k] = total[k] / n;
}

Rgb EnvironmentMap::row_sum(int row, int begin, int end) const {
    const Rgb* p = &prefix_[static_cast<std::size_t>(row) * (width_ + 1)];
    return {p[end][0] - p[begin][0], p[end][1] - p[begin][1], p[end][2] - p[begin][2]};
}

ImageBuffer EnvironmentMap::to_image() const {
    ImageBuffer img(width_, height_);
    for (int r = 0; r < height_; ++r)
        for (int c = 0; c < width_; ++c)
            for (int k = 0; k < 3; ++k) img.at(c, r, k) = static_cast<float>(at(c, r)[k]);
    return img;
}

// ---------------------------------------------------------------------------

namespace {

Rgb bilinear(const ImageBuffer& image, double u, double v) {
    const double x = std::clamp(u, 0.0, image.width() - 1.0);
    const double y = std::clamp(v, 0.0, image.height() - 1.0);
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, image.width() - 1), y1 = std::min(y0 + 1, image.height() - 1);
    const double fx = x - x0, fy = y - y0;
    Rgb out{};
    for (int k = 0; k < 3; ++k) {
        const double top = image.at(x0, y0, k) * (1 - fx) + image.at(x1, y0, k) * fx;
        const double bottom = image.at(x0, y1, k) * (1 - fx) + image.at(x1, y1, k) * fx;
        out[k] = top * (1 - fy) + bottom * fy;
    }
    return out;
}

Rgb region_mean(const ImageBuffer& image, int y_begin, int y_end) {
    Rgb sum{0, 0, 0};
    for (int y = y_begin; y < y_end; ++y)
        for (int x = 0; x < image.width(); ++x)
            for (int k = 0; k < 3; ++k) sum[k] += image.at(x, y, k);
    const double n = static_cast<double>(y_end - y_begin) * image.width();
    for (auto& s : sum) s /= n;
    return sum;
}

}  // namespace

EnvironmentMap estimate_environment(const ImageBuffer& image, const CameraModel& camera,
                                    const EnvironmentOptions& options) {
    EnvironmentMap env(options.width, options.height, options.radius_m);
    const int W = env.width(), H = env.height();
    std::vector<char> covered(static_cast<std::size_t>(W) * H, 0);

    // Inside the camera view: radiance seen along the cell direction.
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const Vec3 d = env.cell_direction(c + 0.5, r + 0.5);
            if (d.z() <= 1e-9) continue;
            const double u = camera.fx * d.x() / d.z() + camera.cx;
            const double v = camera.fy * d.y() / d.z() + camera.cy;
            if (u < -0.5 || v < -0.5 || u >= image.width() - 0.5 || v >= image.height() - 0.5) continue;
            env.at(c, r) = bilinear(image, u, v);
            covered[static_cast<std::size_t>(r) * W + c] = 1;
        }
    }

    // Rows crossing the view wrap their covered mean around the sphere; rows
    // above/below the view take the mean of the upper/lower image third.
    const int third = std::max(1, image.height() / 3);
    const Rgb upper = region_mean(image, 0, third);
    const Rgb lower = region_mean(image, image.height() - third, image.height());
    int first_row = -1;
    for (int r = 0; r < H; ++r) {
        Rgb sum{0, 0, 0};
        int n = 0;
        for (int c = 0; c < W; ++c)
            if (covered[static_cast<std::size_t>(r) * W + c]) {
                for (int k = 0; k < 3; ++k) sum[k] += env.at(c, r)[k];
                ++n;
            }
        Rgb fill;
        if (n > 0) {
            if (first_row < 0) first_row = r;
            for (int k = 0; k < 3; ++k) fill[k] = sum[k] / n;
        } else {
            fill = first_row < 0 ? upper : lower;
        }
        for (int c = 0; c < W; ++c)
            if (!covered[static_cast<std::size_t>(r) * W + c]) env.at(c, r) = fill;
    }
    env.finalize();
    return env;
}

Rgb estimate_sun_irradiance(const ImageBuffer& image, const RainfallConfig& config) {
    Rgb m = image.channel_mean();
    for (auto& v : m) v *= config.irradiance_scale;
    return m;
}

// ---------------------------------------------------------------------------

std::vector<Vec3> drop_view_cone(const Vec3& position, double fov_deg, int samples) {
    const double norm = position.norm();
    if (!(norm > 0)) throw Error("drop view cone: position at the camera centre");
    if (samples <= 0) return {};
    const Vec3 d = position / norm;

    // Any unit vector on the plane orthogonal to d works; the cone does not
    // depend on it.
    Vec3 u = d.cross(Vec3::UnitZ());
    if (u.norm() < 1e-6) u = d.cross(Vec3::UnitX());
    u.normalize();

    const double half = fov_deg * pi / 360.0;
    const Vec3 v = Eigen::AngleAxisd(half, u) * d;
    std::vector<Vec3> cone;
    cone.reserve(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        const double alpha = 2 * pi * k / samples;
        cone.push_back((Eigen::AngleAxisd(alpha, d) * v).normalized());
    }
    return cone;
}

Vec3 sphere_intersect(const Vec3& origin, const Vec3& direction, double radius) {
    const double a = direction.squaredNorm();
    const double b = 2 * direction.dot(origin);
    const double c = origin.squaredNorm() - radius * radius;
    if (!(c < 0)) throw Error("sphere_intersect: origin is not inside the sphere");
    if (!(a > 0)) throw Error("sphere_intersect: zero direction");
    // c < 0 keeps the discriminant positive; this form avoids cancellation
    // when b is large and positive.
    const double disc = std::sqrt(b * b - 4 * a * c);
    const double t = b >= 0 ? (-2 * c) / (b + disc) : (-b + disc) / (2 * a);
    return origin + t * direction;
}

// ---------------------------------------------------------------------------

std::vector<unsigned char> DropFov::mask(int width, int height) const {
    std::vector<unsigned char> m(static_cast<std::size_t>(width) * height, 0);
    for (const auto& s : spans)
        for (int c = s.begin; c < s.end; ++c) m[static_cast<std::size_t>(s.row) * width + c] = 1;
    return m;
}

namespace {

// Splits an unwrapped column range into pieces inside [0, W).
void add_wrapped(std::vector<std::pair<int, int>>& out, int begin, int end, int W) {
    if (end - begin >= W) {
        out.emplace_back(0, W);
        return;
    }
    const int shift = ((begin % W) + W) % W - begin;
    begin += shift;
    end += shift;
    if (end <= W) {
        out.emplace_back(begin, end);
    } else {
        out.emplace_back(begin, W);
        out.emplace_back(0, end - W);
    }
}

}  // namespace

DropFov drop_fov(const Vec3& position, const EnvironmentMap& env, double fov_deg, int samples) {
    const int W = env.width(), H = env.height();
    const double radius = env.radius();

    // The shared map is only exact at the camera centre; drops at or beyond
    // the sphere are pulled just inside it.
    Vec3 origin = position;
    if (origin.norm() >= 0.99 * radius) origin *= 0.99 * radius / origin.norm();

    const std::vector<Vec3> cone = drop_view_cone(position, fov_deg, samples);
    const Vec3 axis = position.normalized();

    // Contour on the map, unwrapped in azimuth so consecutive vertices are
    // less than half a turn apart.
    std::vector<Vec2> poly;
    poly.reserve(cone.size() + 3);
    for (const Vec3& v : cone) {
        Vec2 m = env.to_map(sphere_intersect(origin, v, radius));
        if (!poly.empty()) {
            const double prev = poly.back().x();
            while (m.x() - prev > W / 2.0) m.x() -= W;
            while (m.x() - prev < -W / 2.0) m.x() += W;
        }
        poly.push_back(m);
    }

    if (poly.size() >= 3) {
        // A contour that winds once around the sphere encloses a pole; close it
        // along that pole's row.
        double closing = poly.front().x();
        const double last = poly.back().x();
        while (closing - last > W / 2.0) closing -= W;
        while (closing - last < -W / 2.0) closing += W;
        const double winding = closing - poly.front().x();
        if (std::abs(winding) > W / 2.0) {
            const Vec3 north = Vec3(0, -radius, 0) - origin;
            const double half = fov_deg * pi / 360.0;
            const bool north_inside = north.normalized().dot(axis) >= std::cos(half);
            const double pole_row = north_inside ? 0.0 : static_cast<double>(H);
            poly.emplace_back(closing, poly.front().y());
            poly.emplace_back(closing, pole_row);
            poly.emplace_back(poly.front().x(), pole_row);
        }
    }

    DropFov fov;
    std::vector<double> xs;
    std::vector<std::pair<int, int>> pieces;
    Rgb sum{0, 0, 0};
    if (poly.size() >= 3) {
        for (int r = 0; r < H; ++r) {
            const double y = r + 0.5;
            xs.clear();
            for (std::size_t i = 0; i < poly.size(); ++i) {
                const Vec2& a = poly[i];
                const Vec2& b = poly[(i + 1) % poly.size()];
                if ((a.y() <= y && y < b.y()) || (b.y() <= y && y < a.y()))
                    xs.push_back(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
            }
            std::sort(xs.begin(), xs.end());
            pieces.clear();
            for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
                // Cells whose centre lies in [x0, x1).
                const int begin = static_cast<int>(std::ceil(xs[i] - 0.5));
                const int end = static_cast<int>(std::ceil(xs[i + 1] - 0.5));
                if (end > begin) add_wrapped(pieces, begin, end, W);
            }
            if (pieces.empty()) continue;
            std::sort(pieces.begin(), pieces.end());
            int cur_b = pieces[0].first, cur_e = pieces[0].second;
            auto flush = [&] {
                fov.spans.push_back({r, cur_b, cur_e});
                fov.cell_count += static_cast<std::size_t>(cur_e - cur_b);
                const Rgb s = env.row_sum(r, cur_b, cur_e);
                for (int k = 0; k < 3; ++k) sum[k] += s[k];
            };
            for (std::size_t i = 1; i < pieces.size(); ++i) {
                if (pieces[i].first <= cur_e) {
                    cur_e = std::max(cur_e, pieces[i].second);
                } else {
                    flush();
                    cur_b = pieces[i].first;
                    cur_e = pieces[i].second;
                }
            }
            flush();
        }
    }

    if (fov.cell_count == 0) {
        // Degenerate (very narrow) cone: the cell hit by the axis itself.
        const Vec2 m = env.to_map(sphere_intersect(origin, axis, radius));
        const int c = std::clamp(static_cast<int>(m.x()), 0, W - 1);
        const int r = std::clamp(static_cast<int>(m.y()), 0, H - 1);
        fov.spans.push_back({r, c, c + 1});
        fov.cell_count = 1;
        sum = env.at(c, r);
    }
    for (int k = 0; k < 3; ++k) fov.mean[k] = sum[k] / static_cast<double>(fov.cell_count);
    return fov;
}

Rgb streak_photometric_weight(const Rgb& fov_mean, const Rgb& env_mean) {
    Rgb w{};
    for (int k = 0; k < 3; ++k) w[k] = kRefractedFraction * fov_mean[k] + (1 - kRefractedFraction) * env_mean[k];
    return w;
}

Rgb streak_photometric_weight(const DropFov& fov, const EnvironmentMap& env) {
    return streak_photometric_weight(fov.mean, env.mean());
}

}  // namespace rainaug::illumination
