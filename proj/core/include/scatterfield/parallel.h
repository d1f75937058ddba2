// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace scatterfield {

// Global worker cap. Initialized from SCATTERFIELD_THREADS (falling back to
// hardware concurrency); the CLI overrides it with --threads.
int thread_cap();
void set_thread_cap(int n);

// Runs fn(i) for i in [0, n). Work items must be independent and write only
// to their own slots; results are then identical for any thread count.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace scatterfield
