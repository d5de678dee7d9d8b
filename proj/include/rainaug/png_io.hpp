// Copyright The rain-augment Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rainaug::png {

// Raw decoded PNG samples, row-major and interleaved.
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 0;   // 1 (gray), 2 (gray+alpha), 3 (rgb) or 4 (rgba)
    int bit_depth = 8;  // 8 or 16
    std::vector<std::uint16_t> samples;

    std::uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
    std::uint16_t at(int x, int y, int c) const {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Palette and sub-byte images are expanded to 8 bits.
Raster read(const std::string& path);
void write(const std::string& path, const Raster& raster);

}  // namespace rainaug::png
