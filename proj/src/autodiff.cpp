// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "cider/kernels.hpp"
#include "cider/rng.hpp"
#include "conv_gemm.hpp"

namespace cider::ad {

// ---------------------------------------------------------------- ParamSet

Parameter& ParamSet::add(const std::string& name, Tensor value, std::vector<std::uint32_t> dims) {
  if (params_.contains(name)) throw Error(ErrorKind::Contract, "duplicate parameter '" + name + "'");
  if (dims.empty()) {
    dims = {static_cast<std::uint32_t>(value.channels()), static_cast<std::uint32_t>(value.height()),
            static_cast<std::uint32_t>(value.width())};
  }
  Parameter p;
  p.grad = Tensor(value.shape());
  p.value = std::move(value);
  p.dims = std::move(dims);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorKind::Contract, "unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorKind::Contract, "unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamSet::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0f);
}

std::vector<io::NamedArray> ParamSet::to_arrays() const {
  std::vector<io::NamedArray> out;
  for (const auto& [name, p] : params_) {
    out.push_back({name, p.dims, io::to_f32(p.value.data())});
  }
  return out;
}

void ParamSet::load_arrays(const std::vector<io::NamedArray>& arrays) {
  if (arrays.size() != params_.size()) {
    throw Error(ErrorKind::Architecture, "expected " + std::to_string(params_.size()) +
                                             " parameter arrays, file has " +
                                             std::to_string(arrays.size()));
  }
  for (const auto& a : arrays) {
    auto it = params_.find(a.name);
    if (it == params_.end()) {
      throw Error(ErrorKind::Architecture, "unexpected parameter '" + a.name + "'");
    }
    if (it->second.dims != a.dims) {
      throw Error(ErrorKind::Architecture, "parameter '" + a.name + "' has mismatched dims");
    }
  }
  for (const auto& a : arrays) {
    auto& p = params_.at(a.name);
    std::copy(a.values.begin(), a.values.end(), p.value.data().begin());
  }
}

// -------------------------------------------------------------------- Tape

const Tensor& Var::value() const { return tape_->node(id_).value; }
const Tensor& Var::grad() const { return tape_->node(id_).grad; }

double Var::item() const {
  const Node& n = tape_->node(id_);
  if (n.value.size() != 1) {
    throw Error(ErrorKind::Contract, "item() on non-scalar node '" + n.op + "' " + n.value.shape().str());
  }
  return n.has_scalar ? n.scalar : n.value[0];
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.op = "parameter";
  n.value = p.value;
  n.grad = Tensor(p.value.shape());
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string op, Tensor value, std::vector<Var> parents, BackwardRule rule) {
  Node n;
  n.op = std::move(op);
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  for (const Var& p : parents) {
    if (&p.tape() != this) throw Error(ErrorKind::Contract, "'" + n.op + "' mixes tapes");
    n.parents.push_back(p.id());
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(rule);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record_scalar(std::string op, double value, std::vector<Var> parents, BackwardRule rule) {
  Var v = record(std::move(op), Tensor::scalar(static_cast<real>(value)), std::move(parents),
                 std::move(rule));
  nodes_[v.id()].scalar = value;
  nodes_[v.id()].has_scalar = true;
  return v;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error(ErrorKind::Contract, "backward: loss is on another tape");
  const Node& root = nodes_[loss.id()];
  if (root.value.shape() != Shape{1, 1, 1}) {
    throw Error(ErrorKind::Contract, "backward needs a scalar loss, got " + root.value.shape().str());
  }
  nodes_[loss.id()].grad[0] += 1.0f;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, n);
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr) continue;
    auto dst = n.param->grad.data();
    auto src = n.grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

void Tape::reset() {
  for (auto& n : nodes_) n.grad.fill(0.0f);
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (g.shape() != n.value.shape()) {
    throw Error(ErrorKind::Shape, "gradient " + g.shape().str() + " for '" + n.op + "' " +
                                      n.value.shape().str());
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

Tensor& Tape::grad_buffer(std::size_t id) { return nodes_[id].grad; }

void Tape::note_kinks(std::span<const real> args) {
  if (!track_kinks_) return;
  for (real v : args) kinks_.push_back(v > 0 ? 1 : (v < 0 ? 2 : 0));
}

// -------------------------------------------------------------- primitives

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorKind::Shape, std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

Var conv_impl(const char* op, Var x, Var weight, Var bias, int ksize, int stride) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  detail::ConvGeometry g{xv.channels(), wv.channels(), ksize, stride, xv.height(), xv.width()};
  if (wv.height() != xv.channels() || wv.width() != ksize * ksize) shape_error(op, xv.shape(), wv.shape());
  if (stride == 2 && (xv.height() % 2 != 0 || xv.width() % 2 != 0)) {
    throw Error(ErrorKind::Shape, std::string(op) + ": input " + xv.shape().str() + " must have even H and W");
  }
  if (bias.valid() && bias.value().size() != static_cast<std::size_t>(g.out_channels)) {
    shape_error(op, wv.shape(), bias.value().shape());
  }

  auto cols = std::make_shared<std::vector<real>>();
  if (!g.is_pointwise()) detail::im2col(xv, g, *cols);
  const real* col_ptr = g.is_pointwise() ? xv.data().data() : cols->data();

  Tensor out(g.out_channels, g.out_height(), g.out_width());
  std::span<const real> b;
  if (bias.valid()) b = bias.value().data();
  detail::gemm_forward(wv.data().data(), col_ptr, b, g, out.data().data());

  std::vector<Var> parents{x, weight};
  if (bias.valid()) parents.push_back(bias);
  const bool has_bias = bias.valid();
  return x.tape().record(op, std::move(out), parents, [g, cols, has_bias](Tape& t, const Node& n) {
    const std::size_t xid = n.parents[0];
    const std::size_t wid = n.parents[1];
    const real* gout = n.grad.data().data();
    const real* col_ptr = g.is_pointwise() ? t.node(xid).value.data().data() : cols->data();
    if (t.requires_grad(wid)) {
      detail::gemm_weight_grad(gout, col_ptr, g, t.grad_buffer(wid).data().data());
    }
    if (has_bias && t.requires_grad(n.parents[2])) {
      auto db = t.grad_buffer(n.parents[2]).data();
      const std::size_t p = g.pixels();
      for (int o = 0; o < g.out_channels; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < p; ++i) s += gout[o * p + i];
        db[o] += static_cast<real>(s);
      }
    }
    if (t.requires_grad(xid)) {
      const real* wptr = t.node(wid).value.data().data();
      Tensor& dx = t.grad_buffer(xid);
      if (g.is_pointwise()) {
        std::vector<real> dcols(static_cast<std::size_t>(g.depth()) * g.pixels());
        detail::gemm_input_grad(wptr, gout, g, dcols.data());
        auto d = dx.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += dcols[i];
      } else {
        std::vector<real> dcols(static_cast<std::size_t>(g.depth()) * g.pixels());
        detail::gemm_input_grad(wptr, gout, g, dcols.data());
        detail::col2im(dcols, g, dx);
      }
    }
  });
}

}  // namespace

Var learnable_conv2d(Var x, Var weight, Var bias, int ksize) {
  return conv_impl("learnable_conv2d", x, weight, bias, ksize, 1);
}

Var strided_conv_down2(Var x, Var weight, Var bias, int ksize) {
  return conv_impl("strided_conv_down2", x, weight, bias, ksize, 2);
}

Var add(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor out(a.shape());
  auto av = a.value().data();
  auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  BackwardRule rule = [](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], n.grad);
    t.accumulate(n.parents[1], n.grad);
  };
  const Node& na = a.tape().node(a.id());
  const Node& nb = b.tape().node(b.id());
  if (out.size() == 1) {
    const double s = (na.has_scalar ? na.scalar : na.value[0]) + (nb.has_scalar ? nb.scalar : nb.value[0]);
    return a.tape().record_scalar("add", s, {a, b}, rule);
  }
  return a.tape().record("add", std::move(out), {a, b}, rule);
}

Var mul(Var a, Var b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor out(a.shape());
  auto av = a.value().data();
  auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  return a.tape().record("mul", std::move(out), {a, b}, [](Tape& t, const Node& n) {
    const Tensor& va = t.node(n.parents[0]).value;
    const Tensor& vb = t.node(n.parents[1]).value;
    if (t.requires_grad(n.parents[0])) {
      Tensor g(n.grad.shape());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * vb[i];
      t.accumulate(n.parents[0], g);
    }
    if (t.requires_grad(n.parents[1])) {
      Tensor g(n.grad.shape());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * va[i];
      t.accumulate(n.parents[1], g);
    }
  });
}

Var scalar_mul(Var a, double s) {
  Tensor out(a.shape());
  auto av = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<real>(av[i] * s);
  BackwardRule rule = [s](Tape& t, const Node& n) {
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<real>(n.grad[i] * s);
    t.accumulate(n.parents[0], g);
  };
  if (out.size() == 1) return a.tape().record_scalar("scalar_mul", a.item() * s, {a}, rule);
  return a.tape().record("scalar_mul", std::move(out), {a}, rule);
}

Var leaky_relu(Var a, real slope) {
  Tensor out(a.shape());
  auto av = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] > 0.0f ? av[i] : slope * av[i];
  a.tape().note_kinks(av);
  return a.tape().record("leaky_relu", std::move(out), {a}, [slope](Tape& t, const Node& n) {
    const Tensor& x = t.node(n.parents[0]).value;
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0f ? n.grad[i] : slope * n.grad[i];
    t.accumulate(n.parents[0], g);
  });
}

Var sigmoid(Var a) {
  Tensor out(a.shape());
  auto av = a.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double x = av[i];
    o[i] = static_cast<real>(x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
  }
  return a.tape().record("sigmoid", std::move(out), {a}, [](Tape& t, const Node& n) {
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const real y = n.value[i];
      g[i] = n.grad[i] * y * (1.0f - y);
    }
    t.accumulate(n.parents[0], g);
  });
}

Var upsample2(Var a) {
  Tensor out = resample(a.value(), ResampleFactor::Up2, ResampleMethod::Nearest);
  return a.tape().record("upsample2", std::move(out), {a}, [](Tape& t, const Node& n) {
    const Shape s = t.node(n.parents[0]).value.shape();
    Tensor g(s);
    for (int c = 0; c < s.channels; ++c)
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x)
          g.at(c, y, x) = n.grad.at(c, 2 * y, 2 * x) + n.grad.at(c, 2 * y, 2 * x + 1) +
                          n.grad.at(c, 2 * y + 1, 2 * x) + n.grad.at(c, 2 * y + 1, 2 * x + 1);
    t.accumulate(n.parents[0], g);
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::Shape, "concat_channels: no inputs");
  std::vector<Tensor> values;
  for (const Var& p : parts) {
    if (p.shape().height != parts[0].shape().height || p.shape().width != parts[0].shape().width) {
      shape_error("concat_channels", parts[0].shape(), p.shape());
    }
    values.push_back(p.value());
  }
  Tensor out = stack_channels(values);
  return parts[0].tape().record("concat_channels", std::move(out), parts, [](Tape& t, const Node& n) {
    std::size_t offset = 0;
    for (std::size_t id : n.parents) {
      const Shape s = t.node(id).value.shape();
      if (t.requires_grad(id)) {
        auto dst = t.grad_buffer(id).data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[offset + i];
      }
      offset += s.size();
    }
  });
}

Var instance_norm(Var x, Var gamma, Var beta, real eps) {
  const Shape s = x.shape();
  const auto c = static_cast<std::size_t>(s.channels);
  if (gamma.value().size() != c || beta.value().size() != c) {
    shape_error("instance_norm", s, gamma.shape());
  }
  const std::size_t plane = s.plane();
  auto xhat = std::make_shared<Tensor>(s);
  auto inv_std = std::make_shared<std::vector<double>>(c);
  Tensor out(s);
  for (std::size_t ch = 0; ch < c; ++ch) {
    auto src = x.value().channel(static_cast<int>(ch));
    double mean = 0.0;
    for (real v : src) mean += v;
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (real v : src) var += (v - mean) * (v - mean);
    var /= static_cast<double>(plane);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[ch] = inv;
    auto xh = xhat->channel(static_cast<int>(ch));
    auto dst = out.channel(static_cast<int>(ch));
    const double ga = gamma.value()[ch];
    const double be = beta.value()[ch];
    for (std::size_t i = 0; i < plane; ++i) {
      const double n = (src[i] - mean) * inv;
      xh[i] = static_cast<real>(n);
      dst[i] = static_cast<real>(ga * n + be);
    }
  }
  return x.tape().record("instance_norm", std::move(out), {x, gamma, beta},
                         [xhat, inv_std, plane](Tape& t, const Node& n) {
    const auto cnt = static_cast<int>(inv_std->size());
    const Tensor& ga = t.node(n.parents[1]).value;
    Tensor dx(n.grad.shape());
    Tensor dgamma(ga.shape());
    Tensor dbeta(ga.shape());
    for (int ch = 0; ch < cnt; ++ch) {
      auto g = n.grad.channel(ch);
      auto xh = xhat->channel(ch);
      double sum_g = 0.0;
      double sum_gx = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xh[i];
      }
      dgamma[ch] = static_cast<real>(sum_gx);
      dbeta[ch] = static_cast<real>(sum_g);
      const double scale = ga[ch] * (*inv_std)[ch];
      const double mean_g = sum_g / static_cast<double>(plane);
      const double mean_gx = sum_gx / static_cast<double>(plane);
      auto d = dx.channel(ch);
      for (std::size_t i = 0; i < plane; ++i) {
        d[i] = static_cast<real>(scale * (g[i] - mean_g - xh[i] * mean_gx));
      }
    }
    t.accumulate(n.parents[0], dx);
    t.accumulate(n.parents[1], dgamma);
    t.accumulate(n.parents[2], dbeta);
  });
}

Var crop(Var a, int height, int width) {
  const Shape s = a.shape();
  if (height < 1 || width < 1 || height > s.height || width > s.width) {
    throw Error(ErrorKind::Shape, "crop: " + std::to_string(height) + "x" + std::to_string(width) +
                                      " window does not fit " + s.str());
  }
  Tensor out(s.channels, height, width);
  for (int c = 0; c < s.channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out.at(c, y, x) = a.value().at(c, y, x);
  return a.tape().record("crop", std::move(out), {a}, [](Tape& t, const Node& n) {
    Tensor& g = t.grad_buffer(n.parents[0]);
    const Shape cs = n.grad.shape();
    for (int c = 0; c < cs.channels; ++c)
      for (int y = 0; y < cs.height; ++y)
        for (int x = 0; x < cs.width; ++x) g.at(c, y, x) += n.grad.at(c, y, x);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (real v : a.value().data()) s += v;
  return a.tape().record_scalar("sum", s, {a}, [](Tape& t, const Node& n) {
    Tensor g(t.node(n.parents[0]).value.shape(), n.grad[0]);
    t.accumulate(n.parents[0], g);
  });
}

Var filter_conv(Var a, const Kernel& k, BoundaryMode mode) {
  Tensor out = conv2d_same(a.value(), k, mode);
  return a.tape().record("filter_conv", std::move(out), {a}, [k, mode](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], conv2d_same_adjoint(n.grad, k.filter(), mode));
  });
}

// -------------------------------------------------------------- grad check

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::size_t GradCheckReport::checked() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.checked;
  return n;
}

std::size_t GradCheckReport::kink_skipped() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.kink_skipped;
  return n;
}

GradCheckReport grad_check(const GraphBuilder& build, ParamSet& params, std::uint64_t seed, double h,
                           std::size_t max_elements) {
  params.zero_grad();
  {
    Tape tape;
    Var loss = build(tape, params);
    tape.backward(loss);
  }
  auto rng = make_stream(seed, "grad_check");
  GradCheckReport report;
  for (auto& [name, p] : params) {
    std::vector<std::size_t> indices(p.value.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (max_elements > 0 && indices.size() > max_elements) {
      for (std::size_t i = 0; i < max_elements; ++i) {
        const auto j = i + static_cast<std::size_t>(rng() % (indices.size() - i));
        std::swap(indices[i], indices[j]);
      }
      indices.resize(max_elements);
    }
    GradCheckEntry entry{name};
    for (std::size_t idx : indices) {
      const real orig = p.value[idx];
      // Shrink the step when the two evaluations straddle a kink; only an
      // element that straddles at every step is skipped.
      double step = h;
      double fd = 0.0;
      bool smooth = false;
      for (int attempt = 0; attempt < 4 && !smooth; ++attempt, step *= 0.1) {
        const real up = static_cast<real>(orig + step);
        const real down = static_cast<real>(orig - step);
        p.value[idx] = up;
        Tape tape_up;
        tape_up.track_kinks(true);
        const double f_up = build(tape_up, params).item();
        p.value[idx] = down;
        Tape tape_down;
        tape_down.track_kinks(true);
        const double f_down = build(tape_down, params).item();
        p.value[idx] = orig;
        smooth = tape_up.kink_signature() == tape_down.kink_signature();
        if (smooth) {
          fd = (f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down));
          if (attempt > 0) ++entry.refined;
        }
      }
      if (!smooth) {
        ++entry.kink_skipped;
        continue;
      }
      ++entry.checked;
      const double ad = p.grad[idx];
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-6});
      if (rel >= entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = idx;
        entry.ad = ad;
        entry.fd = fd;
      }
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace cider::ad
