#include "crsynth/data/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "crsynth/data/raster_io.hpp"
#include "json.hpp"

namespace crsynth::data {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<const ManifestEntry*> TileManifest::split_entries(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

TileManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_manifest: cannot open " + path);
  TileManifest m;
  m.root = fs::path(path).parent_path().string();
  if (m.root.empty()) m.root = ".";

  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError("load_manifest: " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ManifestEntry e;
    e.tile_id = j.at("tile_id").get<std::string>();
    if (!seen.insert(e.tile_id).second) {
      throw DataError("load_manifest: duplicate tile_id '" + e.tile_id + "'");
    }
    const auto& paths = j.at("paths");
    for (const auto& key : kRasterKeys) {
      if (!paths.contains(key)) {
        throw DataError("load_manifest: tile '" + e.tile_id + "' is missing raster path '" + key + "'");
      }
      e.paths[key] = paths.at(key).get<std::string>();
    }
    e.split = j.at("split").get<std::string>();
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      throw DataError("load_manifest: tile '" + e.tile_id + "' has unknown split '" + e.split + "'");
    }
    e.cloud_t1 = j.at("cloud_t1").get<double>();
    e.cloud_t2 = j.at("cloud_t2").get<double>();
    e.date_t1 = j.at("date_t1").get<std::string>();
    e.date_t2 = j.at("date_t2").get<std::string>();

    for (const auto& [key, stem] : e.paths) {
      fs::path bin = fs::path(m.root) / (stem + ".bin");
      if (!fs::exists(bin)) {
        throw DataError("load_manifest: tile '" + e.tile_id + "' references missing file " + bin.string());
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::string& path, const TileManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("save_manifest: cannot open " + path + " for writing");
  for (const auto& e : manifest.entries) {
    ordered_json j;
    j["tile_id"] = e.tile_id;
    ordered_json paths;
    for (const auto& key : kRasterKeys) paths[key] = e.paths.at(key);
    j["paths"] = paths;
    j["split"] = e.split;
    j["cloud_t1"] = e.cloud_t1;
    j["cloud_t2"] = e.cloud_t2;
    j["date_t1"] = e.date_t1;
    j["date_t2"] = e.date_t2;
    out << j.dump() << "\n";
  }
}

SceneInstance load_instance(const TileManifest& manifest, const ManifestEntry& entry) {
  auto stem = [&](const std::string& key) {
    return (fs::path(manifest.root) / entry.paths.at(key)).string();
  };
  SceneInstance inst;
  inst.tile_id = entry.tile_id;
  RasterFile ref = read_raster(stem("s2_t2_ref"));
  inst.s2_t2_ref = std::move(ref.data);
  inst.geo = ref.meta.geo;
  inst.s1_t1 = read_raster_data(stem("s1_t1"));
  inst.s1_t2 = read_raster_data(stem("s1_t2"));
  inst.s2_t1 = read_raster_data(stem("s2_t1"));
  Tensor m1 = read_raster_data(stem("cloud_mask_t1"));
  Tensor m2 = read_raster_data(stem("cloud_mask_t2"));
  inst.cloud_mask_t1 = m1.rank() == 3 ? m1.reshaped({m1.shape()[1], m1.shape()[2]}) : m1;
  inst.cloud_mask_t2 = m2.rank() == 3 ? m2.reshaped({m2.shape()[1], m2.shape()[2]}) : m2;
  inst.date_t1 = entry.date_t1;
  inst.date_t2 = entry.date_t2;
  inst.validate();
  return inst;
}

}  // namespace crsynth::data
