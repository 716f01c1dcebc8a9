// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/instrumentation.hpp"

#include <array>
#include <atomic>

namespace cider::instrumentation {

namespace {
std::array<std::atomic<std::uint64_t>, 2> counters{};
}

void count(Probe probe) { counters[static_cast<std::size_t>(probe)].fetch_add(1, std::memory_order_relaxed); }

std::uint64_t calls(Probe probe) {
  return counters[static_cast<std::size_t>(probe)].load(std::memory_order_relaxed);
}

void reset() {
  for (auto& c : counters) c.store(0, std::memory_order_relaxed);
}

}  // namespace cider::instrumentation
