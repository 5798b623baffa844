#pragma once

#include <map>
#include <string>
#include <vector>

#include "crsynth/data/scene.hpp"

namespace crsynth::data {

inline const std::vector<std::string> kRasterKeys = {"s1_t1", "s1_t2", "s2_t1", "s2_t2_ref",
                                                     "cloud_mask_t1", "cloud_mask_t2"};

struct ManifestEntry {
  std::string tile_id;
  std::map<std::string, std::string> paths;  // raster key -> stem relative to the manifest root
  std::string split;                         // train | val | test
  double cloud_t1 = 0.0;
  double cloud_t2 = 0.0;
  std::string date_t1, date_t2;
};

struct TileManifest {
  std::string root;  // directory containing the manifest file
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split_entries(const std::string& split) const;
};

// One JSON record per line. Validates unique ids, known splits, the fixed
// raster key set, and that every referenced file exists.
TileManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const TileManifest& manifest);

// Reads and validates the full instance behind one entry.
SceneInstance load_instance(const TileManifest& manifest, const ManifestEntry& entry);

}  // namespace crsynth::data
