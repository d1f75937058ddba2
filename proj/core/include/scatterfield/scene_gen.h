// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "scatterfield/volume_grid.h"

namespace scatterfield {

enum class MediumKind { Cube, Slab, ProceduralCloud };

const char* medium_kind_name(MediumKind kind);
MediumKind medium_kind_from_name(const std::string& name);

// Deterministic test media on a dims^3 grid spanning [-1,1]^3: a
// centered unit cube, an axis-aligned slab, or a fractal-noise cloud
// with densities in [0,1]. Cube and slab are analytic and ignore the
// seed; the cloud is a seeded value-noise fBm under a radial falloff.
DensityGrid generate_medium(MediumKind kind, int dims, uint64_t seed);

}  // namespace scatterfield
