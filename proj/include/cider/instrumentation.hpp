// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

// Process-wide call counters for the microscopy-only code paths, so tests can
// assert that general restoration never reaches them.
namespace cider::instrumentation {

enum class Probe { BackgroundRemoval, SparsityPrior };

void count(Probe probe);
std::uint64_t calls(Probe probe);
void reset();

}  // namespace cider::instrumentation
