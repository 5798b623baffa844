#include "crsynth/data/iterator.hpp"

#include "crsynth/core/rng.hpp"

namespace crsynth::data {

DatasetIterator::DatasetIterator(const TileManifest& manifest, std::string split, int64_t batch_size,
                                 uint64_t shuffle_seed, ModalityNorms norms)
    : manifest_(manifest),
      split_(std::move(split)),
      batch_size_(batch_size),
      shuffle_seed_(shuffle_seed),
      norms_(norms),
      entries_(manifest.split_entries(split_)) {
  if (batch_size_ < 1) throw ConfigError("DatasetIterator: batch_size must be >= 1");
  if (entries_.empty()) throw DataError("DatasetIterator: split '" + split_ + "' is empty");
  cache_.resize(entries_.size());
  start_epoch(0);
}

int64_t DatasetIterator::batches_per_epoch() const {
  int64_t n = instance_count();
  return (n + batch_size_ - 1) / batch_size_;
}

void DatasetIterator::start_epoch(int64_t epoch) {
  Rng rng(shuffle_seed_ ^ (0x9E3779B97F4A7C15ull * static_cast<uint64_t>(epoch + 1)));
  order_ = rng.permutation(instance_count());
  cursor_ = 0;
}

const SceneInstance& DatasetIterator::instance(int64_t idx) {
  auto& slot = cache_[static_cast<size_t>(idx)];
  if (!slot.has_value()) slot = load_instance(manifest_, *entries_[static_cast<size_t>(idx)]);
  return *slot;
}

SceneBatch DatasetIterator::stack(const std::vector<int64_t>& indices) {
  SceneBatch batch;
  const SceneInstance& first = instance(indices[0]);
  int64_t h = first.s1_t1.shape()[1], w = first.s1_t1.shape()[2];
  int64_t n = static_cast<int64_t>(indices.size());
  batch.s1_t1 = Tensor(Shape{n, 2, h, w});
  batch.s1_t2 = Tensor(Shape{n, 2, h, w});
  batch.s2_t1 = Tensor(Shape{n, 3, h, w});
  batch.s2_t2_ref = Tensor(Shape{n, 3, h, w});
  for (int64_t i = 0; i < n; ++i) {
    const SceneInstance& inst = instance(indices[static_cast<size_t>(i)]);
    if (inst.s1_t1.shape()[1] != h || inst.s1_t1.shape()[2] != w) {
      throw DataError("DatasetIterator: mixed tile extents inside one batch");
    }
    batch.tile_ids.push_back(inst.tile_id);
    auto copy_norm = [&](const Tensor& src, Tensor& dst, const NormalizationSpec& spec) {
      int64_t stride = src.numel();
      for (int64_t j = 0; j < stride; ++j) dst[i * stride + j] = spec.apply(src[j]);
    };
    copy_norm(inst.s1_t1, batch.s1_t1, norms_.sar);
    copy_norm(inst.s1_t2, batch.s1_t2, norms_.sar);
    copy_norm(inst.s2_t1, batch.s2_t1, norms_.optical);
    copy_norm(inst.s2_t2_ref, batch.s2_t2_ref, norms_.optical);
  }
  return batch;
}

std::optional<SceneBatch> DatasetIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  std::vector<int64_t> indices;
  while (cursor_ < order_.size() && static_cast<int64_t>(indices.size()) < batch_size_) {
    indices.push_back(order_[cursor_++]);
  }
  return stack(indices);
}

SceneBatch DatasetIterator::full_batch() {
  std::vector<int64_t> indices(static_cast<size_t>(instance_count()));
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int64_t>(i);
  return stack(indices);
}

}  // namespace crsynth::data
