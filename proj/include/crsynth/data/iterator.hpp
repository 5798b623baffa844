#pragma once

#include <optional>

#include "crsynth/data/manifest.hpp"

namespace crsynth::data {

// Normalized, batch-stacked tensors in the signed network range.
struct SceneBatch {
  std::vector<std::string> tile_ids;
  Tensor s1_t1, s1_t2, s2_t1, s2_t2_ref;  // (N,C,H,W)
  int64_t size() const { return static_cast<int64_t>(tile_ids.size()); }
};

// Deterministic shuffled batches over one split; the final partial batch is
// emitted. Instances are cached in memory after first load.
class DatasetIterator {
 public:
  DatasetIterator(const TileManifest& manifest, std::string split, int64_t batch_size, uint64_t shuffle_seed,
                  ModalityNorms norms = {});

  // Restart with the order derived from (shuffle_seed, epoch).
  void start_epoch(int64_t epoch);
  std::optional<SceneBatch> next();

  int64_t instance_count() const { return static_cast<int64_t>(entries_.size()); }
  int64_t batches_per_epoch() const;
  const ModalityNorms& norms() const { return norms_; }

  // All instances in manifest order (unshuffled), e.g. for validation.
  SceneBatch full_batch();

 private:
  SceneBatch stack(const std::vector<int64_t>& indices);
  const SceneInstance& instance(int64_t idx);

  const TileManifest& manifest_;
  std::string split_;
  int64_t batch_size_;
  uint64_t shuffle_seed_;
  ModalityNorms norms_;
  std::vector<const ManifestEntry*> entries_;
  std::vector<std::optional<SceneInstance>> cache_;
  std::vector<int64_t> order_;
  size_t cursor_ = 0;
};

}  // namespace crsynth::data
