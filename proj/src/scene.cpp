// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/scene.hpp"

#include "rainaug/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace rainaug {

ImageBuffer::ImageBuffer(int width, int height, float fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

double ImageBuffer::mean() const {
    if (data_.empty()) return 0.0;
    double sum = 0.0;
    for (float v : data_) sum += v;
    return sum / static_cast<double>(data_.size());
}

Rgb ImageBuffer::channel_mean() const {
    Rgb sum{0, 0, 0};
    for (std::size_t i = 0; i < data_.size(); i += 3)
        for (int c = 0; c < 3; ++c) sum[c] += data_[i + c];
    const double n = static_cast<double>(pixel_count());
    for (auto& s : sum) s = n > 0 ? s / n : 0.0;
    return sum;
}

DepthMap::DepthMap(int width, int height, float fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error("depth dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

void CameraModel::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw Error("calibration: fx and fy must be positive");
    if (width <= 0 || height <= 0) throw Error("calibration: image size must be positive");
    if (!(focal_m > 0)) throw Error("calibration: focal length must be positive");
    if (!(f_number > 0)) throw Error("calibration: f-number must be positive");
    if (!(exposure_s > 0)) throw Error("calibration: exposure time must be positive");
    if (!(focus_plane_m > focal_m)) throw Error("calibration: focus plane must lie beyond the focal length");
    if (!ego_velocity.allFinite()) throw Error("calibration: ego velocity must be finite");
}

void RainfallConfig::validate() const {
    if (!(rate_mm_h >= 0) || !std::isfinite(rate_mm_h)) throw Error("rainfall rate must be finite and >= 0");
    if (!(d_min_mm > 0) || !(d_min_mm < d_max_mm)) throw Error("drop size bounds require 0 < d_min < d_max");
    if (!(std::abs(hg_g) < 1)) throw Error("Henyey-Greenstein asymmetry must satisfy |g| < 1");
    if (!(max_depth_m > near_clip_m) || !(near_clip_m > 0)) throw Error("simulation depth range is empty");
    if (!(lateral_pad_m >= 0)) throw Error("lateral padding must be >= 0");
    if (!(sun_direction.norm() > 0)) throw Error("sun direction must be non-zero");
}

// ---------------------------------------------------------------------------
// Color space

double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

namespace {

const std::array<float, 256>& srgb8_table() {
    static const std::array<float, 256> table = [] {
        std::array<float, 256> t{};
        for (int i = 0; i < 256; ++i) t[i] = static_cast<float>(srgb_to_linear(i / 255.0));
        return t;
    }();
    return table;
}

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

}  // namespace

float decode_srgb8(std::uint8_t v) { return srgb8_table()[v]; }

std::uint8_t encode_srgb8(float linear) {
    return static_cast<std::uint8_t>(std::lround(linear_to_srgb(clamp01(linear)) * 255.0));
}

ImageBuffer load_image(const std::string& path, ColorSpace color_space) {
    const png::Raster raster = png::read(path);
    if (raster.channels != 3)
        throw Error("'" + path + "': expected 3 channels, got " + std::to_string(raster.channels));
    ImageBuffer image(raster.width, raster.height);
    auto& out = image.data();
    const double maxv = raster.max_value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint16_t s = raster.samples[i];
        if (color_space == ColorSpace::linear)
            out[i] = static_cast<float>(s / maxv);
        else if (raster.bit_depth == 8)
            out[i] = decode_srgb8(static_cast<std::uint8_t>(s));
        else
            out[i] = static_cast<float>(srgb_to_linear(s / maxv));
    }
    return image;
}

void save_image(const std::string& path, const ImageBuffer& image, bool sixteen_bit, ColorSpace color_space) {
    png::Raster raster;
    raster.width = image.width();
    raster.height = image.height();
    raster.channels = 3;
    raster.bit_depth = sixteen_bit ? 16 : 8;
    raster.samples.resize(image.data().size());
    const double maxv = raster.max_value();
    for (std::size_t i = 0; i < raster.samples.size(); ++i) {
        const float v = image.data()[i];
        if (!sixteen_bit && color_space == ColorSpace::srgb) {
            raster.samples[i] = encode_srgb8(v);
            continue;
        }
        const double enc = color_space == ColorSpace::srgb ? linear_to_srgb(clamp01(v)) : clamp01(v);
        raster.samples[i] = static_cast<std::uint16_t>(std::lround(enc * maxv));
    }
    png::write(path, raster);
}

// ---------------------------------------------------------------------------
// Depth

void fill_invalid_depth(DepthMap& depth) {
    const int w = depth.width(), h = depth.height();
    auto valid = [](float v) { return std::isfinite(v) && v > 0.f; };

    // Multi-source BFS from valid pixels; each hole takes the value of the
    // valid pixel that reached it first (4-connected distance).
    std::vector<char> done(depth.data().size(), 0);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (valid(depth.at(x, y))) {
                done[static_cast<std::size_t>(y) * w + x] = 1;
                queue.emplace_back(x, y);
            }
    if (queue.empty()) throw Error("depth map has no valid pixel");
    if (queue.size() == depth.data().size()) return;

    constexpr int dx[4] = {1, -1, 0, 0};
    constexpr int dy[4] = {0, 0, 1, -1};
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t idx = static_cast<std::size_t>(ny) * w + nx;
            if (done[idx]) continue;
            done[idx] = 1;
            depth.at(nx, ny) = depth.at(x, y);
            queue.emplace_back(nx, ny);
        }
    }
}

DepthMap resample_nearest(const DepthMap& depth, int width, int height) {
    DepthMap out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(depth.height() - 1, static_cast<int>((y + 0.5) * depth.height() / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(depth.width() - 1, static_cast<int>((x + 0.5) * depth.width() / width));
            out.at(x, y) = depth.at(sx, sy);
        }
    }
    return out;
}

namespace {

DepthMap read_png16_depth(const std::string& path, double scale) {
    const png::Raster raster = png::read(path);
    if (raster.channels != 1) throw Error("'" + path + "': depth PNG must be single-channel");
    DepthMap depth(raster.width, raster.height);
    for (std::size_t i = 0; i < depth.data().size(); ++i)
        depth.data()[i] = static_cast<float>(raster.samples[i] * scale);
    return depth;
}

// Layout: uint32 width, uint32 height (little-endian), then width*height float32.
DepthMap read_float_raster(const std::string& path, double scale) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::uint32_t header[2] = {0, 0};
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] == 0 || header[1] == 0 || header[0] > 1u << 16 || header[1] > 1u << 16)
        throw Error("'" + path + "': bad float raster header");
    DepthMap depth(static_cast<int>(header[0]), static_cast<int>(header[1]));
    in.read(reinterpret_cast<char*>(depth.data().data()),
            static_cast<std::streamsize>(depth.data().size() * sizeof(float)));
    if (!in) throw Error("'" + path + "': truncated float raster");
    if (scale != 1.0)
        for (float& v : depth.data()) v = static_cast<float>(v * scale);
    return depth;
}

}  // namespace

DepthMap load_depth(const std::string& path, const DepthLoadOptions& options) {
    DepthMap depth = options.encoding == DepthEncoding::png16_scaled ? read_png16_depth(path, options.scale)
                                                                     : read_float_raster(path, options.scale);
    fill_invalid_depth(depth);
    if (options.expect_width > 0 &&
        (depth.width() != options.expect_width || depth.height() != options.expect_height)) {
        if (!options.resample)
            throw Error("'" + path + "': depth is " + std::to_string(depth.width()) + "x" +
                        std::to_string(depth.height()) + ", image is " + std::to_string(options.expect_width) + "x" +
                        std::to_string(options.expect_height));
        depth = resample_nearest(depth, options.expect_width, options.expect_height);
    }
    return depth;
}

void save_depth_raster(const std::string& path, const DepthMap& depth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot create '" + path + "'");
    const std::uint32_t header[2] = {static_cast<std::uint32_t>(depth.width()),
                                     static_cast<std::uint32_t>(depth.height())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(depth.data().data()),
              static_cast<std::streamsize>(depth.data().size() * sizeof(float)));
}

void save_depth_png16(const std::string& path, const DepthMap& depth, double scale) {
    png::Raster raster;
    raster.width = depth.width();
    raster.height = depth.height();
    raster.channels = 1;
    raster.bit_depth = 16;
    raster.samples.resize(depth.data().size());
    for (std::size_t i = 0; i < raster.samples.size(); ++i)
        raster.samples[i] =
            static_cast<std::uint16_t>(std::clamp<long>(std::lround(depth.data()[i] / scale), 0, 65535));
    png::write(path, raster);
}

// ---------------------------------------------------------------------------
// Calibration

CameraModel parse_calibration(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("calibration: ") + e.what());
    }
    if (!doc.is_object()) throw Error("calibration: document must be an object");

    // Numbers may also be given as numeric strings ("0.002").
    auto number = [](const nlohmann::json& v, const char* key) -> double {
        if (v.is_number()) return v.get<double>();
        if (v.is_string()) {
            const std::string& s = v.get_ref<const std::string&>();
            std::size_t used = 0;
            try {
                const double d = std::stod(s, &used);
                if (used == s.size()) return d;
            } catch (const std::exception&) {
            }
        }
        throw Error(std::string("calibration: field '") + key + "' must be a number");
    };
    auto required = [&](const char* key) -> double {
        if (!doc.contains(key)) throw Error(std::string("calibration: missing field '") + key + "'");
        return number(doc.at(key), key);
    };
    auto optional = [&](const char* key, double fallback) -> double {
        return doc.contains(key) ? number(doc.at(key), key) : fallback;
    };

    CameraModel cam;
    cam.fx = required("fx");
    cam.fy = required("fy");
    cam.cx = required("cx");
    cam.cy = required("cy");
    cam.width = static_cast<int>(required("width"));
    cam.height = static_cast<int>(required("height"));
    cam.focal_m = required("focal_m");
    cam.f_number = required("f_number");
    cam.exposure_s = required("exposure_s");
    cam.focus_plane_m = optional("focus_plane_m", 6.0);
    cam.ego_velocity = Vec3(0, 0, optional("ego_speed_mps", 0.0));
    cam.validate();
    return cam;
}

CameraModel load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open calibration '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_calibration(ss.str());
}

}  // namespace rainaug
