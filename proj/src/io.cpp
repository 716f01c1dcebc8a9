// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#include "cider/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace cider::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume little endian");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Input, "short write to " + path.string());
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  while (!line.empty()) {
    const auto pos = line.find(' ');
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, const char* what) {
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw Error(ErrorKind::Format, std::string("bad ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

Kernel parse_kernel(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    auto pos = rest.find('\n');
    auto line = rest.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  if (lines.empty()) throw Error(ErrorKind::Format, "empty kernel file");
  const auto header = split_spaces(lines[0]);
  if (header.size() != 2) throw Error(ErrorKind::Format, "kernel header must be 'H W'");
  const int h = parse_number<int>(header[0], "kernel height");
  const int w = parse_number<int>(header[1], "kernel width");
  if (h <= 0 || w <= 0) throw Error(ErrorKind::Format, "kernel dimensions must be positive");
  if (lines.size() < static_cast<std::size_t>(h) + 1) {
    throw Error(ErrorKind::Format, "kernel file has fewer than " + std::to_string(h) + " rows");
  }
  for (std::size_t i = h + 1; i < lines.size(); ++i) {
    if (!lines[i].empty()) throw Error(ErrorKind::Format, "trailing data after kernel rows");
  }
  std::vector<float> weights;
  weights.reserve(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const auto tokens = split_spaces(lines[y + 1]);
    if (tokens.size() != static_cast<std::size_t>(w)) {
      throw Error(ErrorKind::Format, "kernel row " + std::to_string(y) + " has " +
                                         std::to_string(tokens.size()) + " values, expected " +
                                         std::to_string(w));
    }
    for (auto t : tokens) weights.push_back(parse_number<float>(t, "kernel weight"));
  }
  return Kernel::from_weights(h, w, std::vector<real>(weights.begin(), weights.end()));
}

std::string format_kernel(const Kernel& k) {
  std::string out = std::to_string(k.height()) + " " + std::to_string(k.width()) + "\n";
  char buf[64];
  for (int i = 0; i < k.height(); ++i) {
    for (int j = 0; j < k.width(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), k(i, j), std::chars_format::fixed);
      if (j > 0) out += ' ';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

Kernel read_kernel(const std::filesystem::path& path) { return parse_kernel(read_file(path)); }

void write_kernel(const std::filesystem::path& path, const Kernel& k) {
  write_file(path, format_kernel(k));
}

Image read_pfm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream in(bytes);
  std::string magic;
  int h = 0;
  int w = 0;
  in >> magic >> h >> w;
  if (magic != "PFMg" || !in || h <= 0 || w <= 0) {
    throw Error(ErrorKind::Format, path.string() + ": not a PFMg float map");
  }
  in.get();  // single newline after the header
  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t count = static_cast<std::size_t>(h) * w;
  if (bytes.size() < offset + count * sizeof(float)) {
    throw Error(ErrorKind::Format, path.string() + ": truncated float map");
  }
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + offset, count * sizeof(float));
  Image img(Shape{1, h, w}, std::vector<real>(data.begin(), data.end()));
  if (!img.all_finite()) throw Error(ErrorKind::Input, path.string() + ": non-finite pixel");
  return img;
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1) throw Error(ErrorKind::Shape, "PFMg stores single-channel images");
  std::string out = "PFMg\n" + std::to_string(img.height()) + " " + std::to_string(img.width()) + "\n";
  const std::vector<float> values(img.data().begin(), img.data().end());
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
  write_file(path, out);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) {
  throw Error(ErrorKind::Format, std::string("png: ") + msg);
}
void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Tensor read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::Input, "cannot open " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buffer(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());

  Tensor out(channels, h, w);
  const double scale = out_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        double v;
        if (out_depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + idx * 2, 2);
          v = s;
        } else {
          v = rows[y][idx];
        }
        out.at(c, y, x) = static_cast<real>(v / scale);
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Tensor& img, int bit_depth) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw Error(ErrorKind::Shape, "png output needs 1 or 3 channels, got " + img.shape().str());
  }
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorKind::Config, "png bit depth must be 8 or 16");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::Input, "cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  const int channels = img.channels();
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);

  const int bytes = bit_depth / 8;
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * channels * bytes);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(static_cast<double>(img.at(c, y, x)), 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(v * scale));
        const std::size_t idx = (static_cast<std::size_t>(x) * channels + c) * bytes;
        if (bytes == 2) {
          std::memcpy(row.data() + idx, &q, 2);
        } else {
          row[idx] = static_cast<unsigned char>(q);
        }
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

Tensor read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".png") return read_png(path);
  throw Error(ErrorKind::Input, "unsupported image extension '" + ext + "' (use .png or .pfm)");
}

void write_image(const std::filesystem::path& path, const Tensor& img) {
  const auto ext = path.extension().string();
  if (ext == ".pfm") return write_pfm(path, img);
  if (ext == ".png") return write_png(path, img, 8);
  throw Error(ErrorKind::Input, "unsupported image extension '" + ext + "' (use .png or .pfm)");
}

std::size_t NamedArray::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

constexpr char kMagic[] = "CIDRW001";
constexpr std::size_t kMagicLen = 8;

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, sizeof(v));
    return v;
  }
  void take(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorKind::Format, "weights file is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

std::vector<NamedArray> parse_weights(const std::string& bytes) {
  if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw Error(ErrorKind::Format, "bad magic: expected CIDRW001");
  }
  const std::string body = bytes.substr(kMagicLen);
  Reader in(body);
  const std::uint32_t count = in.u32();
  std::vector<NamedArray> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    NamedArray a;
    const std::uint32_t name_len = in.u32();
    if (name_len > 4096) throw Error(ErrorKind::Format, "layer name too long");
    a.name.resize(name_len);
    in.take(a.name.data(), name_len);
    const std::uint32_t rank = in.u32();
    if (rank > 8) throw Error(ErrorKind::Format, "layer '" + a.name + "' has rank > 8");
    a.dims.resize(rank);
    for (auto& d : a.dims) d = in.u32();
    const std::size_t n = a.element_count();
    if (n > body.size()) throw Error(ErrorKind::Format, "weights file is truncated");
    a.values.resize(n);
    in.take(a.values.data(), n * sizeof(float));
    for (float v : a.values) {
      if (!std::isfinite(v)) throw Error(ErrorKind::Format, "non-finite value in '" + a.name + "'");
    }
    layers.push_back(std::move(a));
  }
  if (!in.done()) throw Error(ErrorKind::Format, "trailing bytes after last layer");
  return layers;
}

std::vector<NamedArray> read_weights(const std::filesystem::path& path) {
  return parse_weights(read_file(path));
}

std::string serialize_weights(const std::vector<NamedArray>& layers) {
  std::string out(kMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& a : layers) {
    if (a.values.size() != a.element_count()) {
      throw Error(ErrorKind::Shape, "layer '" + a.name + "' value count does not match dims");
    }
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) put_u32(out, d);
    out.append(reinterpret_cast<const char*>(a.values.data()), a.values.size() * sizeof(float));
  }
  return out;
}

void write_weights(const std::filesystem::path& path, const std::vector<NamedArray>& layers) {
  write_file(path, serialize_weights(layers));
}

std::vector<float> to_f32(std::span<const real> values) { return {values.begin(), values.end()}; }
std::vector<real> from_f32(std::span<const float> values) { return {values.begin(), values.end()}; }

}  // namespace cider::io
