// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace cider {

double lr_at(const LrSchedule& s, int t) {
  const auto passed = std::count_if(s.milestones.begin(), s.milestones.end(), [t](int m) { return m <= t; });
  return s.base * std::pow(s.factor, static_cast<double>(passed));
}

void nadam_step(NAdamState& state, ad::ParamSet& params, double lr) {
  for (auto& [name, p] : params) {
    if (p.grad.shape() != p.value.shape()) {
      throw Error(ErrorKind::Contract, "nadam: gradient of '" + name + "' is " + p.grad.shape().str() +
                                           ", parameter is " + p.value.shape().str());
    }
    auto it = state.m.find(name);
    if (it != state.m.end() && it->second.size() != p.value.size()) {
      throw Error(ErrorKind::Contract, "nadam: state for '" + name + "' has the wrong size");
    }
  }

  state.t += 1;
  const double t = state.t;
  const double mu = state.beta1 * (1.0 - 0.5 * std::pow(0.96, t * state.momentum_decay));
  const double mu_next = state.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * state.momentum_decay));
  state.mu_product *= mu;
  const double mu_product_next = state.mu_product * mu_next;
  const double bias2 = 1.0 - std::pow(state.beta2, t);

  for (auto& [name, p] : params) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(p.value.size(), 0.0);
      v.assign(p.value.size(), 0.0);
    }
    auto w = p.value.data();
    auto g = p.grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      if (gi == 0.0 && m[i] == 0.0) continue;
      const double m_hat = mu_next * m[i] / (1.0 - mu_product_next) + (1.0 - mu) * gi / (1.0 - state.mu_product);
      const double denom = std::sqrt(v[i] / bias2) + state.eps;
      w[i] = static_cast<real>(w[i] - lr * m_hat / denom);
    }
  }
}

}  // namespace cider
