// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cider/instrumentation.hpp"
#include "cider/kernels.hpp"

namespace cider {

namespace {

void require_same(const char* op, const Image& a, const Image& b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::Shape, std::string(op) + ": incompatible shapes " + a.shape().str() + " and " +
                                      b.shape().str());
  }
  if (a.empty()) throw Error(ErrorKind::Input, std::string(op) + ": empty image");
}

Tensor product(const Tensor& a, const Tensor& b) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// Local statistics of the SSIM map. Second moments are taken about each
// image's global mean (cx, cy), which the local variances do not depend on;
// this keeps float cancellation small. Everything after the window filtering
// runs in double.
struct SSIMStats {
  Tensor mx, my, exx, eyy, exy;
  double cx = 0.0, cy = 0.0;
};

Tensor centered(const Tensor& a, double c) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<real>(a[i] - c);
  return out;
}

SSIMStats ssim_stats(const Image& x, const Image& y, const SSIMParams& p) {
  const Kernel w = p.kernel();
  const double cx = x.sum() / static_cast<double>(x.size());
  const double cy = y.sum() / static_cast<double>(y.size());
  const Tensor xc = centered(x, cx);
  const Tensor yc = centered(y, cy);
  return {conv2d_same(x, w, p.boundary),
          conv2d_same(y, w, p.boundary),
          conv2d_same(product(xc, xc), w, p.boundary),
          conv2d_same(product(yc, yc), w, p.boundary),
          conv2d_same(product(xc, yc), w, p.boundary),
          cx,
          cy};
}

struct SSIMTerms {
  double a1, a2, b1, b2;
};

inline SSIMTerms ssim_terms(const SSIMStats& s, std::size_t i, const SSIMParams& p) {
  const double mx = s.mx[i];
  const double my = s.my[i];
  const double dx = mx - s.cx;
  const double dy = my - s.cy;
  const double sxx = s.exx[i] - dx * dx;
  const double syy = s.eyy[i] - dy * dy;
  const double sxy = s.exy[i] - dx * dy;
  return {2.0 * mx * my + p.c1, 2.0 * sxy + p.c2, mx * mx + my * my + p.c1, sxx + syy + p.c2};
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {alpha, lambda, beta}) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::Config, "loss weights must be finite and >= 0");
  }
}

Tensor ssim_map(const Image& a, const Image& b, const SSIMParams& p) {
  require_same("ssim", a, b);
  const SSIMStats s = ssim_stats(a, b, p);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const SSIMTerms t = ssim_terms(s, i, p);
    out[i] = static_cast<real>(t.a1 * t.a2 / (t.b1 * t.b2));
  }
  return out;
}

double ssim(const Image& a, const Image& b, const SSIMParams& p) {
  require_same("ssim", a, b);
  const SSIMStats s = ssim_stats(a, b, p);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const SSIMTerms t = ssim_terms(s, i, p);
    total += t.a1 * t.a2 / (t.b1 * t.b2);
  }
  return total / static_cast<double>(a.size());
}

double mse(const Image& a, const Image& b) {
  require_same("mse", a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double hessian_value(const Image& z) {
  ad::Tape tape;
  return ad::hessian_reg(tape.constant(z)).item();
}

}  // namespace cider

namespace cider::ad {

Var ssim_index(Var x, const Image& y, const SSIMParams& p) {
  require_same("ssim_index", x.value(), y);
  auto stats = std::make_shared<SSIMStats>(ssim_stats(x.value(), y, p));
  const std::size_t n = y.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SSIMTerms t = ssim_terms(*stats, i, p);
    total += t.a1 * t.a2 / (t.b1 * t.b2);
  }
  const double mean = total / static_cast<double>(n);
  return x.tape().record_scalar("ssim_index", mean, {x}, [stats, y, p](Tape& t, const Node& node) {
    const Tensor& xv = t.node(node.parents[0]).value;
    const double upstream = node.grad[0] / static_cast<double>(y.size());
    Tensor g_mu(y.shape());
    Tensor g_exx(y.shape());
    Tensor g_exy(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const SSIMTerms s = ssim_terms(*stats, i, p);
      const double mx = stats->mx[i];
      const double my = stats->my[i];
      const double den = s.b1 * s.b2;
      const double val = s.a1 * s.a2 / den;
      const double d_mu = 2.0 * my * s.a2 / den - 2.0 * my * s.a1 / den - 2.0 * mx * val / s.b1 +
                          2.0 * mx * val / s.b2;
      g_mu[i] = static_cast<real>(upstream * d_mu);
      g_exx[i] = static_cast<real>(-upstream * val / s.b2);
      g_exy[i] = static_cast<real>(upstream * 2.0 * s.a1 / den);
    }
    const Filter2D w = p.kernel().filter();
    const Tensor a_mu = conv2d_same_adjoint(g_mu, w, p.boundary);
    const Tensor a_exx = conv2d_same_adjoint(g_exx, w, p.boundary);
    const Tensor a_exy = conv2d_same_adjoint(g_exy, w, p.boundary);
    Tensor dx(xv.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] = a_mu[i] + 2 * xv[i] * a_exx[i] + y[i] * a_exy[i];
    }
    t.accumulate(node.parents[0], dx);
  });
}

Var loss_ssim(Var x, const Kernel& k, const Image& y, const SSIMParams& p, BoundaryMode mode) {
  Var s = ssim_index(filter_conv(x, k, mode), y, p);
  Var one = x.tape().constant(Tensor::scalar(1));
  return add(one, scalar_mul(s, -1.0));
}

Var hessian_reg(Var z) {
  const Tensor& v = z.value();
  const int c = v.channels();
  const int h = v.height();
  const int w = v.width();
  // Second differences, kept for the backward pass.
  auto dxx = std::make_shared<std::vector<real>>();
  auto dyy = std::make_shared<std::vector<real>>();
  auto dxy = std::make_shared<std::vector<real>>();
  double total = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y)
      for (int x = 1; x + 1 < w; ++x) {
        const real d = v.at(ch, y, x - 1) - 2 * v.at(ch, y, x) + v.at(ch, y, x + 1);
        dxx->push_back(d);
        total += std::abs(static_cast<double>(d));
      }
    for (int y = 1; y + 1 < h; ++y)
      for (int x = 0; x < w; ++x) {
        const real d = v.at(ch, y - 1, x) - 2 * v.at(ch, y, x) + v.at(ch, y + 1, x);
        dyy->push_back(d);
        total += std::abs(static_cast<double>(d));
      }
    for (int y = 0; y + 1 < h; ++y)
      for (int x = 0; x + 1 < w; ++x) {
        const real d = v.at(ch, y + 1, x + 1) - v.at(ch, y + 1, x) - v.at(ch, y, x + 1) + v.at(ch, y, x);
        dxy->push_back(d);
        total += 2.0 * std::abs(static_cast<double>(d));
      }
  }
  z.tape().note_kinks(*dxx);
  z.tape().note_kinks(*dyy);
  z.tape().note_kinks(*dxy);
  return z.tape().record_scalar("hessian_reg", total, {z}, [dxx, dyy, dxy](Tape& t, const Node& n) {
    const Shape s = t.node(n.parents[0]).value.shape();
    const real g = n.grad[0];
    auto sgn = [](real d) { return static_cast<real>((d > 0) - (d < 0)); };
    Tensor dz(s);
    std::size_t ixx = 0, iyy = 0, ixy = 0;
    for (int ch = 0; ch < s.channels; ++ch) {
      for (int y = 0; y < s.height; ++y)
        for (int x = 1; x + 1 < s.width; ++x) {
          const real d = g * sgn((*dxx)[ixx++]);
          dz.at(ch, y, x - 1) += d;
          dz.at(ch, y, x) -= 2 * d;
          dz.at(ch, y, x + 1) += d;
        }
      for (int y = 1; y + 1 < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          const real d = g * sgn((*dyy)[iyy++]);
          dz.at(ch, y - 1, x) += d;
          dz.at(ch, y, x) -= 2 * d;
          dz.at(ch, y + 1, x) += d;
        }
      for (int y = 0; y + 1 < s.height; ++y)
        for (int x = 0; x + 1 < s.width; ++x) {
          const real d = 2 * g * sgn((*dxy)[ixy++]);
          dz.at(ch, y + 1, x + 1) += d;
          dz.at(ch, y + 1, x) -= d;
          dz.at(ch, y, x + 1) -= d;
          dz.at(ch, y, x) += d;
        }
    }
    t.accumulate(n.parents[0], dz);
  });
}

Var sparsity_l1(Var x) {
  instrumentation::count(instrumentation::Probe::SparsityPrior);
  double total = 0.0;
  for (real v : x.value().data()) total += std::abs(static_cast<double>(v));
  x.tape().note_kinks(x.value().data());
  return x.tape().record_scalar("sparsity_l1", total, {x}, [](Tape& t, const Node& n) {
    const Tensor& v = t.node(n.parents[0]).value;
    Tensor g(v.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[0] * static_cast<real>((v[i] > 0) - (v[i] < 0));
    t.accumulate(n.parents[0], g);
  });
}

Var total_loss(Var x, const Kernel& k, const Image& y, const LossWeights& w, bool microscopy,
               LossParts* parts, const SSIMParams& p, BoundaryMode mode) {
  w.validate();
  if (x.shape() != y.shape()) {
    throw Error(ErrorKind::Shape, "total_loss: incompatible shapes " + x.shape().str() + " and " +
                                      y.shape().str());
  }
  LossParts local;
  const double prior_scale = w.per_pixel_priors ? 1.0 / static_cast<double>(x.value().size()) : 1.0;
  Var total = x.tape().constant(Tensor::scalar(0));
  if (w.alpha != 0.0) {
    Var d = loss_ssim(x, k, y, p, mode);
    local.data = d.item();
    total = add(total, scalar_mul(d, w.alpha));
  }
  if (w.lambda != 0.0) {
    Var r = hessian_reg(x);
    local.hessian = r.item();
    total = add(total, scalar_mul(r, w.lambda * prior_scale));
  }
  if (microscopy && w.beta != 0.0) {
    Var s = sparsity_l1(x);
    local.sparsity = s.item();
    total = add(total, scalar_mul(s, w.beta * prior_scale));
  }
  if (parts != nullptr) *parts = local;
  return total;
}

}  // namespace cider::ad
