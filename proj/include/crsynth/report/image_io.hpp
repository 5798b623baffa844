#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crsynth/core/tensor.hpp"

namespace crsynth::report {

// Minimal RGB8 image buffer, row-major.
struct Image {
  int64_t height = 0, width = 0;
  std::vector<uint8_t> rgb;  // 3 * height * width

  static Image blank(int64_t h, int64_t w, uint8_t value = 32);
};

// Unit-range (3,H,W) tensor -> RGB8.
Image from_optical(const Tensor& chw);
// Clipped-dB (2,H,W) SAR tile -> grayscale RGB8 (VV channel).
Image from_sar_db(const Tensor& chw);

// Horizontal strip with a fixed gutter between cells.
Image compose_row(const std::vector<Image>& cells, int64_t gutter = 2);
// Vertical stack.
Image compose_column(const std::vector<Image>& rows, int64_t gutter = 2);

// Uncompressed (stored-deflate) PNG; deterministic bytes for fixed input.
void write_png(const std::string& path, const Image& image);

}  // namespace crsynth::report
