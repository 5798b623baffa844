#include "crsynth/data/raster_io.hpp"

#include <fstream>

#include "json.hpp"

namespace crsynth::data {

using ordered_json = nlohmann::ordered_json;

void write_raster(const std::string& stem, const Tensor& data, const RasterMeta& meta) {
  if (shape_numel(meta.shape) != data.numel()) throw DataError("write_raster: meta shape disagrees with data");
  {
    std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw DataError("write_raster: cannot open " + stem + ".bin for writing");
    std::vector<float> buf(static_cast<size_t>(data.numel()));
    for (int64_t i = 0; i < data.numel(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(data[i]);
    bin.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  ordered_json j;
  j["shape"] = meta.shape;
  j["dtype"] = meta.dtype;
  j["range"] = meta.range;
  j["geo"] = {{"lon_min", meta.geo.lon_min},
              {"lat_min", meta.geo.lat_min},
              {"lon_max", meta.geo.lon_max},
              {"lat_max", meta.geo.lat_max}};
  j["date"] = meta.date;
  std::ofstream side(stem + ".json", std::ios::trunc);
  if (!side) throw DataError("write_raster: cannot open " + stem + ".json for writing");
  side << j.dump(2) << "\n";
}

RasterFile read_raster(const std::string& stem) {
  std::ifstream side(stem + ".json");
  if (!side) throw DataError("read_raster: missing descriptor " + stem + ".json");
  ordered_json j;
  try {
    side >> j;
  } catch (const std::exception& e) {
    throw DataError("read_raster: malformed descriptor " + stem + ".json: " + e.what());
  }
  RasterFile out;
  out.meta.shape = j.at("shape").get<Shape>();
  out.meta.dtype = j.at("dtype").get<std::string>();
  out.meta.range = j.at("range").get<std::string>();
  out.meta.date = j.value("date", "");
  if (j.contains("geo")) {
    const auto& g = j["geo"];
    out.meta.geo = {g.at("lon_min"), g.at("lat_min"), g.at("lon_max"), g.at("lat_max")};
  }
  if (out.meta.dtype != "f32") throw DataError("read_raster: unsupported dtype " + out.meta.dtype);

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw DataError("read_raster: missing blob " + stem + ".bin");
  int64_t n = shape_numel(out.meta.shape);
  std::vector<float> buf(static_cast<size_t>(n));
  bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (bin.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
    throw DataError("read_raster: blob " + stem + ".bin is truncated");
  }
  out.data = Tensor(out.meta.shape);
  for (int64_t i = 0; i < n; ++i) out.data[i] = static_cast<double>(buf[static_cast<size_t>(i)]);
  if (!out.data.all_finite()) throw DataError("read_raster: " + stem + ".bin contains NaN/Inf");
  return out;
}

Tensor read_raster_data(const std::string& stem) { return read_raster(stem).data; }

}  // namespace crsynth::data
