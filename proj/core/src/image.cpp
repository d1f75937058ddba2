// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/image.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scatterfield/error.h"

namespace scatterfield {

void write_pfm(const ImageF& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "write_pfm: cannot open '" + path + "'");
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    // PFM stores rows bottom-up; scale -1.0 marks little-endian floats.
    for (int y = img.height - 1; y >= 0; --y) {
        out.write(reinterpret_cast<const char*>(img.pixel(0, y)),
                  std::streamsize(sizeof(float)) * 3 * img.width);
    }
    if (!out) fail(Errc::io, "write_pfm: write error on '" + path + "'");
}

ImageF read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "read_pfm: cannot open '" + path + "'");
    std::string magic;
    in >> magic;
    if (magic != "PF")
        fail(Errc::malformed_header, "read_pfm: '" + path + "' is not a color PFM");
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in || w <= 0 || h <= 0)
        fail(Errc::bad_dims, "read_pfm: bad dimensions in '" + path + "'");
    if (scale >= 0.0)
        fail(Errc::malformed_header, "read_pfm: big-endian PFM unsupported");
    in.get();  // single whitespace byte after the scale line
    ImageF img(w, h);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(img.pixel(0, y)),
                std::streamsize(sizeof(float)) * 3 * w);
    }
    if (!in) fail(Errc::truncated, "read_pfm: truncated pixel data in '" + path + "'");
    return img;
}

void write_ppm(const ImageF& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "write_ppm: cannot open '" + path + "'");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> row(size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        const float* src = img.pixel(0, y);
        for (int i = 0; i < img.width * 3; ++i) {
            float v = std::clamp(src[i], 0.0f, 1.0f);
            float enc = std::pow(v, 1.0f / 2.2f);
            row[i] = uint8_t(std::min(255.0f, std::floor(enc * 255.0f + 0.5f)));
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) fail(Errc::io, "write_ppm: write error on '" + path + "'");
}

double rmse(const ImageF& a, const ImageF& b) {
    if (a.width != b.width || a.height != b.height)
        fail(Errc::shape_mismatch, "rmse: image dimensions differ");
    double sum = 0.0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        double d = double(a.rgb[i]) - double(b.rgb[i]);
        sum += d * d;
    }
    return std::sqrt(sum / double(a.rgb.size()));
}

}  // namespace scatterfield
