// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/wavelet.hpp"

#include <bit>

namespace cider {

namespace {

WaveletFilters make_filters(std::vector<double> lo) {
  const int n = static_cast<int>(lo.size());
  WaveletFilters f;
  f.dec_lo = lo;
  f.dec_hi.resize(n);
  for (int k = 0; k < n; ++k) f.dec_hi[k] = ((k % 2 == 0) ? -1.0 : 1.0) * lo[n - 1 - k];
  f.rec_lo.assign(f.dec_lo.rbegin(), f.dec_lo.rend());
  f.rec_hi.assign(f.dec_hi.rbegin(), f.dec_hi.rend());
  return f;
}

int symmetric_index(int i, int n) {
  const int period = 2 * n;
  int r = i % period;
  if (r < 0) r += period;
  return r < n ? r : period - 1 - r;
}

}  // namespace

const WaveletFilters& WaveletFilters::get(WaveletFamily family) {
  // Daubechies analysis low-pass filters, orthonormal (sum = sqrt 2).
  static const WaveletFilters db6 = make_filters({
      -0.00107730108499558, 0.004777257511010651, 0.0005538422009938016,
      -0.031582039318031156, 0.02752286553001629, 0.09750160558707936,
      -0.12976686756709563, -0.22626469396516913, 0.3152503517092432,
      0.7511339080215775, 0.4946238903983854, 0.11154074335008017,
  });
  static const WaveletFilters db3 = make_filters({
      0.035226291882100656, -0.08544127388224149, -0.13501102001039084,
      0.4598775021193313, 0.8068915093133388, 0.3326705529509569,
  });
  return family == WaveletFamily::Db6 ? db6 : db3;
}

int dwt1_length(int n, const WaveletFilters& f) { return (n + f.length() - 1) / 2; }

void dwt1(std::span<const real> x, const WaveletFilters& f, std::span<real> lo, std::span<real> hi) {
  const int n = static_cast<int>(x.size());
  const int len = f.length();
  const int out = dwt1_length(n, f);
  for (int k = 0; k < out; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (int j = 0; j < len; ++j) {
      const double v = x[symmetric_index(2 * k + 1 - j, n)];
      a += f.dec_lo[j] * v;
      d += f.dec_hi[j] * v;
    }
    lo[k] = static_cast<real>(a);
    hi[k] = static_cast<real>(d);
  }
}

void idwt1(std::span<const real> lo, std::span<const real> hi, const WaveletFilters& f,
           std::span<real> out) {
  const int n = static_cast<int>(lo.size());
  const int len = f.length();
  const int produced = 2 * n - len + 2;
  // Valid part of the full upsampled convolution, starting at offset len-2.
  for (int o = 0; o < produced && o < static_cast<int>(out.size()); ++o) {
    const int m = o + len - 2;
    double acc = 0.0;
    // Taps j with (m - j) even and 0 <= (m - j)/2 < n.
    for (int j = m % 2; j < len; j += 2) {
      const int k = (m - j) / 2;
      if (k < 0 || k >= n) continue;
      acc += lo[k] * f.rec_lo[j] + hi[k] * f.rec_hi[j];
    }
    out[o] = static_cast<real>(acc);
  }
}

int max_wavelet_levels(int height, int width) {
  const int n = std::min(height, width);
  if (n < 1) return 0;
  return std::bit_width(static_cast<unsigned>(n));
}

void WaveletPyramid::zero_details() {
  for (auto& level : levels) {
    level.horizontal.fill(0.0f);
    level.vertical.fill(0.0f);
    level.diagonal.fill(0.0f);
  }
}

namespace {

// Filters along rows: (h, w) -> two (h, n) outputs.
void analyze_rows(const Image& in, const WaveletFilters& f, Image& lo, Image& hi) {
  const int h = in.height();
  const int w = in.width();
  const int n = dwt1_length(w, f);
  lo = Image(1, h, n);
  hi = Image(1, h, n);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    dwt1(in.data().subspan(static_cast<std::size_t>(y) * w, w), f,
         lo.data().subspan(static_cast<std::size_t>(y) * n, n),
         hi.data().subspan(static_cast<std::size_t>(y) * n, n));
  }
}

// Filters along columns: (h, w) -> two (m, w) outputs.
void analyze_cols(const Image& in, const WaveletFilters& f, Image& lo, Image& hi) {
  const int h = in.height();
  const int w = in.width();
  const int m = dwt1_length(h, f);
  lo = Image(1, m, w);
  hi = Image(1, m, w);
#pragma omp parallel
  {
    std::vector<real> col(h), a(m), d(m);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) col[y] = in(y, x);
      dwt1(col, f, a, d);
      for (int y = 0; y < m; ++y) {
        lo(y, x) = a[y];
        hi(y, x) = d[y];
      }
    }
  }
}

Image synthesize_cols(const Image& lo, const Image& hi, const WaveletFilters& f, int out_h) {
  const int m = lo.height();
  const int w = lo.width();
  Image out(1, out_h, w);
  const int produced = 2 * m - f.length() + 2;
#pragma omp parallel
  {
    std::vector<real> a(m), d(m), col(produced);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < m; ++y) {
        a[y] = lo(y, x);
        d[y] = hi(y, x);
      }
      idwt1(a, d, f, col);
      for (int y = 0; y < out_h; ++y) out(y, x) = col[y];
    }
  }
  return out;
}

Image synthesize_rows(const Image& lo, const Image& hi, const WaveletFilters& f, int out_w) {
  const int h = lo.height();
  const int n = lo.width();
  Image out(1, h, out_w);
  const int produced = 2 * n - f.length() + 2;
#pragma omp parallel
  {
    std::vector<real> row(produced);
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      idwt1(lo.data().subspan(static_cast<std::size_t>(y) * n, n),
            hi.data().subspan(static_cast<std::size_t>(y) * n, n), f, row);
      std::copy_n(row.begin(), out_w, out.data().begin() + static_cast<std::ptrdiff_t>(y) * out_w);
    }
  }
  return out;
}

void check_band(const Image& band, const Image& ref, const char* name, std::size_t level) {
  if (band.shape() != ref.shape()) {
    throw Error(ErrorKind::Shape, std::string("wavelet level ") + std::to_string(level) + ": " + name +
                                      " band " + band.shape().str() + " vs approximation " +
                                      ref.shape().str());
  }
}

}  // namespace

WaveletPyramid dwt2(const Image& img, int levels, WaveletFamily family) {
  if (img.channels() != 1) throw Error(ErrorKind::Shape, "dwt2 expects a single-channel image");
  if (levels < 1) throw Error(ErrorKind::Config, "dwt2 needs at least one level");
  const int max_levels = max_wavelet_levels(img.height(), img.width());
  if (levels > max_levels) {
    throw Error(ErrorKind::Config, "image " + std::to_string(img.height()) + "x" +
                                       std::to_string(img.width()) + " supports at most " +
                                       std::to_string(max_levels) + " wavelet levels, requested " +
                                       std::to_string(levels));
  }
  const auto& f = WaveletFilters::get(family);
  WaveletPyramid pyr;
  pyr.family = family;
  Image current = img;
  for (int l = 0; l < levels; ++l) {
    Image row_lo, row_hi;
    analyze_rows(current, f, row_lo, row_hi);
    WaveletLevel level;
    level.height = current.height();
    level.width = current.width();
    analyze_cols(row_lo, f, level.approx, level.horizontal);
    analyze_cols(row_hi, f, level.vertical, level.diagonal);
    current = level.approx;
    pyr.levels.push_back(std::move(level));
  }
  return pyr;
}

Image idwt2(const WaveletPyramid& pyr) {
  if (pyr.levels.empty()) throw Error(ErrorKind::Shape, "idwt2: empty pyramid");
  const auto& f = WaveletFilters::get(pyr.family);
  Image current = pyr.coarsest();
  for (std::size_t l = pyr.levels.size(); l-- > 0;) {
    const auto& level = pyr.levels[l];
    check_band(current, level.horizontal, "approximation", l);
    check_band(level.vertical, level.horizontal, "vertical", l);
    check_band(level.diagonal, level.horizontal, "diagonal", l);
    const int m = current.height();
    const int n = current.width();
    if (m != dwt1_length(level.height, f) || n != dwt1_length(level.width, f)) {
      throw Error(ErrorKind::Shape, "wavelet level " + std::to_string(l) + ": bands " +
                                        current.shape().str() + " cannot reconstruct " +
                                        std::to_string(level.height) + "x" + std::to_string(level.width));
    }
    Image lo = synthesize_cols(current, level.horizontal, f, level.height);
    Image hi = synthesize_cols(level.vertical, level.diagonal, f, level.height);
    current = synthesize_rows(lo, hi, f, level.width);
  }
  return current;
}

}  // namespace cider
