// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace scatterfield {

struct GaussLegendre {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;  // sum to 2
};

// Nodes and weights of the n-point Gauss-Legendre rule (Newton iteration on
// the Legendre recurrence; accurate to ~1e-15 for the n used here).
const GaussLegendre& gauss_legendre(int n);

}  // namespace scatterfield
