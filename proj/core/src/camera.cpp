// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/camera.h"

#include <cmath>

#include "scatterfield/error.h"

namespace scatterfield {

Camera::Camera(const Vec3& position, const Vec3& look_at, const Vec3& up,
               double vfov_degrees, int width, int height)
    : position_(position), width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        fail(Errc::invalid_argument, "camera: resolution must be positive");
    if (vfov_degrees <= 0.0 || vfov_degrees >= 180.0)
        fail(Errc::invalid_argument, "camera: vfov out of range");
    forward_ = normalize(look_at - position);
    right_ = normalize(cross(forward_, up));
    up_ = cross(right_, forward_);
    tan_half_vfov_ = std::tan(0.5 * vfov_degrees * kPi / 180.0);
    aspect_ = double(width) / double(height);
}

Ray Camera::primary_ray(int px, int py, double dx, double dy) const {
    // NDC in [-1, 1], +y up on the image plane.
    double sx = (2.0 * ((px + dx) / width_) - 1.0) * aspect_ * tan_half_vfov_;
    double sy = (1.0 - 2.0 * ((py + dy) / height_)) * tan_half_vfov_;
    return Ray{position_, normalize(forward_ + sx * right_ + sy * up_)};
}

}  // namespace scatterfield
