// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scatterfield {

// Linear-light RGB image with float32 channels, row 0 at the top.
struct ImageF {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;  // width * height * 3, row-major

    ImageF() = default;
    ImageF(int w, int h) : width(w), height(h), rgb(size_t(w) * h * 3, 0.0f) {}

    float* pixel(int x, int y) { return rgb.data() + 3 * (size_t(y) * width + x); }
    const float* pixel(int x, int y) const {
        return rgb.data() + 3 * (size_t(y) * width + x);
    }
};

// Portable FloatMap, little-endian ("PF\n<w> <h>\n-1.0\n" + bottom-up rows).
void write_pfm(const ImageF& img, const std::string& path);
ImageF read_pfm(const std::string& path);

// Binary P6 preview with gamma-2.2 encoding; values clamp to [0, 1].
void write_ppm(const ImageF& img, const std::string& path);

// Root-mean-square error over all channels; images must share dimensions.
double rmse(const ImageF& a, const ImageF& b);

}  // namespace scatterfield
