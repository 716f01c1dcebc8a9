// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gradient_cases.hpp"

TEST_CASE("loss terms match finite differences, 10 seeds") {
  for (const auto& c : gradcases::loss_cases()) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto r = gradcases::run_case(c, seed);
      INFO(c.name << " seed " << seed << " err " << r.max_rel_error << " skipped " << r.kink_skipped);
      CHECK(r.max_rel_error <= 1e-3);
      CHECK(r.kink_skipped == 0);
    }
  }
}

TEST_CASE("default generator on 32x32, sampled elements") {
  gradcases::GeneratorCase g(cider::GeneratorConfig{}, 32, 8);
  const auto r = cider::ad::grad_check(g.builder(), g.net.params(), 8, 1e-3, 2);
  INFO("err " << r.max_rel_error() << " skipped " << r.kink_skipped());
  CHECK(r.max_rel_error() <= 1e-3);
}
