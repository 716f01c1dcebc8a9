// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cider/io.hpp"
#include "cider/tensor.hpp"

namespace cider::ad {

/// A learnable tensor and its accumulated gradient. `dims` is the logical
/// shape used when serializing (conv weights are stored as [out, in, k*k]
/// but declared as [out, in, k, k]).
struct Parameter {
  Tensor value;
  Tensor grad;
  std::vector<std::uint32_t> dims;
};

/// Named parameters, iterated in sorted-name order.
class ParamSet {
 public:
  Parameter& add(const std::string& name, Tensor value, std::vector<std::uint32_t> dims = {});
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }

  std::size_t param_count() const;
  std::size_t size() const { return params_.size(); }
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<io::NamedArray> to_arrays() const;
  /// Replaces values from arrays; every name and dim list must match exactly.
  void load_arrays(const std::vector<io::NamedArray>& arrays);

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

/// Handle to a node recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  /// Value of a 1x1x1 node; reductions keep a double-precision copy.
  double item() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

struct Node;
using BackwardRule = std::function<void(Tape&, const Node&)>;

struct Node {
  std::string op;
  Tensor value;
  Tensor grad;
  std::vector<std::size_t> parents;
  BackwardRule backward;
  Parameter* param = nullptr;
  bool requires_grad = false;
  double scalar = 0.0;
  bool has_scalar = false;
};

/// Records one forward pass. Nodes are appended in execution order, so the
/// vector is already topologically sorted; backward walks it in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& p);
  Var record(std::string op, Tensor value, std::vector<Var> parents, BackwardRule rule);
  /// Records a 1x1x1 result with its double-precision value.
  Var record_scalar(std::string op, double value, std::vector<Var> parents, BackwardRule rule);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node, then
  /// adds each parameter node's gradient into its Parameter::grad.
  void backward(Var loss);
  /// Zeroes node gradients (parameter gradients live in the ParamSet).
  void reset();

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  /// Adds g into the gradient of node `id`; no-op for constants.
  void accumulate(std::size_t id, const Tensor& g);
  /// Mutable gradient buffer for node `id` (zero-filled on first use).
  Tensor& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// When enabled, primitives with a derivative jump (leaky_relu, |x|) append
  /// the side of the kink each argument falls on. grad_check uses this to
  /// detect perturbations that straddle a kink.
  void track_kinks(bool on) { track_kinks_ = on; }
  void note_kinks(std::span<const real> args);
  const std::vector<std::uint8_t>& kink_signature() const { return kinks_; }

 private:
  std::vector<Node> nodes_;
  bool track_kinks_ = false;
  std::vector<std::uint8_t> kinks_;
};

// Network primitives. Shape errors name the primitive and both shapes.

/// Stride-1 convolution, weight [out, in, k*k], bias [out,1,1] or invalid Var.
/// Borders replicate edge pixels.
Var learnable_conv2d(Var x, Var weight, Var bias, int ksize);
/// Stride-2 convolution halving H and W (both must be even).
Var strided_conv_down2(Var x, Var weight, Var bias, int ksize);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scalar_mul(Var a, double s);
Var leaky_relu(Var a, real slope);
Var sigmoid(Var a);
/// Nearest-neighbour x2.
Var upsample2(Var a);
Var concat_channels(const std::vector<Var>& parts);
/// Per-channel (x - mean) / sqrt(var + eps) * gamma + beta; gamma/beta [C,1,1].
Var instance_norm(Var x, Var gamma, Var beta, real eps = 1e-5f);
/// Top-left height x width window of every channel.
Var crop(Var a, int height, int width);
/// Sum of all elements, as a scalar node.
Var sum(Var a);
/// Fixed (non-learnable) filtering with conv2d_same; backward is its exact adjoint.
Var filter_conv(Var a, const Kernel& k, BoundaryMode mode = BoundaryMode::Replicate);

// Gradient checking against central finite differences.

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double ad = 0.0;
  double fd = 0.0;
  std::size_t checked = 0;
  /// Elements whose +h and -h evaluations landed on different sides of a
  /// kink are retried with h/10, h/100, h/1000. `refined` counts those that
  /// became smooth; the rest are excluded from max_rel_error and counted.
  std::size_t refined = 0;
  std::size_t kink_skipped = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const;
  std::size_t checked() const;
  std::size_t kink_skipped() const;
};

/// Builds the loss graph on a fresh tape from the current parameter values.
using GraphBuilder = std::function<Var(Tape&, ParamSet&)>;

/// Compares autodiff gradients with central differences (step h) for every
/// element of every parameter (or up to `max_elements` per parameter, chosen
/// with the seeded generator). Relative error is
/// |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-6).
GradCheckReport grad_check(const GraphBuilder& build, ParamSet& params, std::uint64_t seed,
                           double h = 1e-3, std::size_t max_elements = 0);

}  // namespace cider::ad
