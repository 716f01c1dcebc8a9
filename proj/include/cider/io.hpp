// Copyright 2026 The cider Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cider/tensor.hpp"

namespace cider::io {

// Kernel text: "H W" on the first line, then H lines of W decimal floats
// separated by single spaces. Loading normalizes to unit sum.
Kernel parse_kernel(const std::string& text);
std::string format_kernel(const Kernel& k);
Kernel read_kernel(const std::filesystem::path& path);
void write_kernel(const std::filesystem::path& path, const Kernel& k);

// Float map: "PFMg\n" "H W\n" then H*W little-endian 32-bit floats, row-major.
Image read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Image& img);

// PNG: 8 or 16 bit, gray or RGB (alpha dropped). Values map to [0, 1].
Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& img, int bit_depth = 8);

/// Dispatches on extension (.png, .pfm).
Tensor read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Tensor& img);

// CIDRW001 weights container.
struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
};

std::vector<float> to_f32(std::span<const real> values);
std::vector<real> from_f32(std::span<const float> values);

std::vector<NamedArray> read_weights(const std::filesystem::path& path);
std::vector<NamedArray> parse_weights(const std::string& bytes);
std::string serialize_weights(const std::vector<NamedArray>& layers);
void write_weights(const std::filesystem::path& path, const std::vector<NamedArray>& layers);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace cider::io
