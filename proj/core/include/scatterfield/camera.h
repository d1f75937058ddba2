// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "scatterfield/math.h"

namespace scatterfield {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

// Pinhole camera. Pixel (0, 0) is the top-left corner of the image;
// primary_ray samples the pixel center unless jittered offsets are given.
class Camera {
  public:
    Camera(const Vec3& position, const Vec3& look_at, const Vec3& up,
           double vfov_degrees, int width, int height);

    // (dx, dy) in [0, 1)^2 selects a point within the pixel footprint.
    Ray primary_ray(int px, int py, double dx = 0.5, double dy = 0.5) const;

    int width() const { return width_; }
    int height() const { return height_; }
    const Vec3& position() const { return position_; }

  private:
    Vec3 position_;
    Vec3 right_, up_, forward_;
    double tan_half_vfov_ = 1.0;
    double aspect_ = 1.0;
    int width_ = 0, height_ = 0;
};

}  // namespace scatterfield
