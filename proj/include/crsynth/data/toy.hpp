#pragma once

#include "crsynth/data/manifest.hpp"

namespace crsynth::data {

// Procedural desk-scale scene: smooth terrain with field polygons and roads
// for the optical reference, a temporally perturbed cloudy time-1 view, and a
// structural SAR response with gamma speckle for both dates. Fully
// deterministic in the seed.
SceneInstance generate_toy_scene(uint64_t seed, int64_t size, double cloud_fraction_target,
                                 int64_t required_divisor = 64);

struct ToyCorpusSpec {
  std::string root;
  int64_t count = 8;
  int64_t size = 64;
  uint64_t master_seed = 7;
  double cloud_fraction_target = 0.3;
  int64_t required_divisor = 64;
  int64_t val_count = 1;   // taken from the tail of the corpus
  int64_t test_count = 1;
};

// Writes tiles + descriptors + manifest; returns the corpus content hash.
std::string write_toy_corpus(const ToyCorpusSpec& spec);

// FNV-1a over every raster blob and the manifest text, in manifest order.
std::string corpus_hash(const std::string& manifest_path);

}  // namespace crsynth::data
