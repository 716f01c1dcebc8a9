// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "cider/autodiff.hpp"

namespace cider {

/// Step decay: base * factor^(number of milestones <= t).
struct LrSchedule {
  double base = 0.01;
  double factor = 0.5;
  std::vector<int> milestones{2000, 2300, 2700};
};

double lr_at(const LrSchedule& s, int t);

/// NAdam with the momentum-decay schedule
///   mu_t = beta1 * (1 - 0.5 * 0.96^(t * momentum_decay))
/// and bias-corrected second moment. Moments are stored in double.
struct NAdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum_decay = 0.004;

  int t = 0;
  double mu_product = 1.0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

/// Applies one update to every parameter from its accumulated gradient.
void nadam_step(NAdamState& state, ad::ParamSet& params, double lr);

}  // namespace cider
