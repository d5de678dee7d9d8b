// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#include "rainaug/png_io.hpp"

#include "rainaug/scene.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace rainaug::png {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void on_png_error(png_structp, png_const_charp msg) { throw Error(std::string("png: ") + msg); }
void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

Raster read(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error("cannot open '" + path + "'");

    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error("'" + path + "' is not a PNG file");

    png_structp png_ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
    if (!png_ptr) throw Error("png: out of memory");
    png_infop info = png_create_info_struct(png_ptr);
    if (!info) {
        png_destroy_read_struct(&png_ptr, nullptr, nullptr);
        throw Error("png: out of memory");
    }

    Raster out;
    try {
        png_init_io(png_ptr, file.get());
        png_set_sig_bytes(png_ptr, 8);
        png_read_info(png_ptr, info);

        const int color_type = png_get_color_type(png_ptr, info);
        const int bit_depth = png_get_bit_depth(png_ptr, info);
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_ptr);
        if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png_ptr);
        if (png_get_valid(png_ptr, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png_ptr);
        if (bit_depth == 16) png_set_swap(png_ptr);  // native little-endian uint16 rows
        png_read_update_info(png_ptr, info);

        out.width = static_cast<int>(png_get_image_width(png_ptr, info));
        out.height = static_cast<int>(png_get_image_height(png_ptr, info));
        out.channels = png_get_channels(png_ptr, info);
        out.bit_depth = png_get_bit_depth(png_ptr, info);

        const std::size_t rowbytes = png_get_rowbytes(png_ptr, info);
        std::vector<png_byte> buffer(rowbytes * out.height);
        std::vector<png_bytep> rows(out.height);
        for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
        png_read_image(png_ptr, rows.data());
        png_read_end(png_ptr, nullptr);

        const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
        out.samples.resize(n);
        if (out.bit_depth == 16) {
            for (int y = 0; y < out.height; ++y) {
                const auto* row = reinterpret_cast<const std::uint16_t*>(rows[y]);
                std::copy(row, row + static_cast<std::size_t>(out.width) * out.channels,
                          out.samples.begin() + static_cast<std::ptrdiff_t>(y) * out.width * out.channels);
            }
        } else {
            for (int y = 0; y < out.height; ++y)
                std::copy(rows[y], rows[y] + static_cast<std::size_t>(out.width) * out.channels,
                          out.samples.begin() + static_cast<std::ptrdiff_t>(y) * out.width * out.channels);
        }
    } catch (...) {
        png_destroy_read_struct(&png_ptr, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png_ptr, &info, nullptr);
    return out;
}

void write(const std::string& path, const Raster& raster) {
    int color_type = 0;
    switch (raster.channels) {
        case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
        case 2: color_type = PNG_COLOR_TYPE_GRAY_ALPHA; break;
        case 3: color_type = PNG_COLOR_TYPE_RGB; break;
        case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
        default: throw Error("png: unsupported channel count");
    }
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error("cannot create '" + path + "'");

    png_structp png_ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
    if (!png_ptr) throw Error("png: out of memory");
    png_infop info = png_create_info_struct(png_ptr);
    if (!info) {
        png_destroy_write_struct(&png_ptr, nullptr);
        throw Error("png: out of memory");
    }

    try {
        png_init_io(png_ptr, file.get());
        png_set_IHDR(png_ptr, info, raster.width, raster.height, raster.bit_depth, color_type, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png_ptr, info);

        const std::size_t row_samples = static_cast<std::size_t>(raster.width) * raster.channels;
        const int bytes = raster.bit_depth == 16 ? 2 : 1;
        std::vector<png_byte> row(row_samples * bytes);
        for (int y = 0; y < raster.height; ++y) {
            const std::uint16_t* src = raster.samples.data() + row_samples * y;
            for (std::size_t i = 0; i < row_samples; ++i) {
                if (bytes == 2) {
                    row[2 * i] = static_cast<png_byte>(src[i] >> 8);  // PNG is big-endian
                    row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
                } else {
                    row[i] = static_cast<png_byte>(src[i]);
                }
            }
            png_write_row(png_ptr, row.data());
        }
        png_write_end(png_ptr, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png_ptr, &info);
        throw;
    }
    png_destroy_write_struct(&png_ptr, &info);
}

}  // namespace rainaug::png
