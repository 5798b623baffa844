#pragma once

#include <string>

#include "crsynth/core/tensor.hpp"

namespace crsynth::data {

struct GeoBox {
  double lon_min = 0.0, lat_min = 0.0, lon_max = 0.0, lat_max = 0.0;
  bool inside(const GeoBox& outer) const {
    return lon_min >= outer.lon_min && lon_max <= outer.lon_max && lat_min >= outer.lat_min &&
           lat_max <= outer.lat_max && lon_min < lon_max && lat_min < lat_max;
  }
};

// Study area the toy corpus mimics.
inline constexpr GeoBox kStudyArea{112.0, 33.0, 116.0, 36.5};

// Affine raw -> signed-range mapping per modality; invertible by contract.
struct NormalizationSpec {
  double scale = 1.0;
  double offset = 0.0;

  void validate() const {
    if (scale == 0.0) throw ConfigError("NormalizationSpec: scale must be non-zero");
  }
  double apply(double x) const { return scale * x + offset; }
  double invert(double y) const { return (y - offset) / scale; }
};

Tensor normalize(const Tensor& tile, const NormalizationSpec& spec);
Tensor denormalize(const Tensor& tile, const NormalizationSpec& spec);

struct ModalityNorms {
  NormalizationSpec optical{2.0, -1.0};   // unit [0,1] -> signed [-1,1]
  NormalizationSpec sar{0.08, 1.0};       // dB clip [-25,0] -> signed [-1,1]
};

// Fraction of set pixels in a strictly binary mask.
double cloud_fraction(const Tensor& mask);

// One training/eval sample. SAR tiles hold clipped dB backscatter, optical
// tiles unit-range reflectance, masks are binary.
struct SceneInstance {
  std::string tile_id;
  Tensor s1_t1, s1_t2;          // (2,H,W)
  Tensor s2_t1, s2_t2_ref;      // (3,H,W)
  Tensor cloud_mask_t1, cloud_mask_t2;  // (H,W)
  GeoBox geo;
  std::string date_t1, date_t2;  // ISO dates, t1 < t2

  void validate() const;
};

// Per-pixel median over cloud-free observations of co-registered tiles.
struct CompositeResult {
  Tensor composite;  // (C,H,W)
  Tensor validity;   // (H,W), 1 where at least one cloud-free observation
};
CompositeResult make_composite(const std::vector<Tensor>& tiles, const std::vector<Tensor>& cloud_masks);

}  // namespace crsynth::data
