// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace scatterfield {

// SHA-256 of a byte range, returned as 64 lowercase hex characters.
std::string sha256_hex(const void* data, size_t size);
std::string sha256_hex(const std::vector<uint8_t>& data);
std::string sha256_hex(const std::string& data);

// SHA-256 of a file's contents. Throws Error(Errc::io) when the file
// cannot be opened or read.
std::string sha256_file_hex(const std::string& path);

}  // namespace scatterfield
