// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace scatterfield {

enum class Errc {
    io,                   // file missing / unreadable / short write
    malformed_header,     // bad magic or version in a binary container
    bad_dims,             // non-power-of-two or zero grid dimensions
    bad_value,            // negative / NaN density, albedo out of range, ...
    truncated,            // payload shorter than the header promises
    invalid_argument,     // bad parameter to an operation
    shape_mismatch,       // tensor / feature-count disagreement
    provenance_mismatch,  // digest chain broken between pipeline stages
    numeric,              // NaN or divergence detected at runtime
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace scatterfield
