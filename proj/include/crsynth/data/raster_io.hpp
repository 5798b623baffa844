#pragma once

#include <string>

#include "crsynth/data/scene.hpp"

namespace crsynth::data {

// Flat binary blob (float32, little-endian, row-major) with a JSON sidecar
// describing shape, dtype, value range tag, geo box and date. The pair shares
// a stem: <stem>.bin and <stem>.json.
struct RasterMeta {
  Shape shape;
  std::string dtype = "f32";
  std::string range;  // "unit", "db", "mask", "signed"
  GeoBox geo;
  std::string date;
};

void write_raster(const std::string& stem, const Tensor& data, const RasterMeta& meta);

struct RasterFile {
  Tensor data;
  RasterMeta meta;
};
RasterFile read_raster(const std::string& stem);

// Reads just the tensor, validating it is finite.
Tensor read_raster_data(const std::string& stem);

}  // namespace crsynth::data
