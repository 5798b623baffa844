#include "crsynth/train/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace crsynth::train {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr const char* kMagic = "CRSYNTH-CKPT v1";
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw ConfigError("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ordered_json j;
  j["magic"] = kMagic;
  j["epoch"] = ckpt.epoch;
  j["config_hash"] = ckpt.config_hash;
  j["scheduler"] = {{"best", ckpt.scheduler_best},
                    {"has_best", ckpt.scheduler_has_best},
                    {"bad_epochs", ckpt.scheduler_bad_epochs}};
  j["g_lr"] = ckpt.g_lr;
  j["d_lr"] = ckpt.d_lr;
  j["opt_g_steps"] = ckpt.opt_g_steps;
  j["opt_d_steps"] = ckpt.opt_d_steps;
  j["train_rng"] = ckpt.train_rng_state;

  ordered_json tensors = ordered_json::array();
  int64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    int64_t bytes = t.numel() * static_cast<int64_t>(sizeof(double));
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f64"}, {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
  }
  j["tensors"] = tensors;

  std::string header = j.dump(1);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("save_checkpoint: cannot open " + path);
  out << header.size() << "\n" << header << "\n";
  for (const auto& [name, t] : ckpt.tensors) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open " + path);
  size_t header_len = 0;
  in >> header_len;
  in.get();  // newline
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  in.get();  // newline
  ordered_json j;
  try {
    j = ordered_json::parse(header);
  } catch (const std::exception& e) {
    throw DataError("load_checkpoint: malformed header in " + path + ": " + e.what());
  }
  if (j.value("magic", "") != kMagic) throw DataError("load_checkpoint: bad magic in " + path);

  Checkpoint c;
  c.epoch = j.at("epoch").get<int64_t>();
  c.config_hash = j.at("config_hash").get<std::string>();
  c.scheduler_best = j.at("scheduler").at("best").get<double>();
  c.scheduler_has_best = j.at("scheduler").at("has_best").get<bool>();
  c.scheduler_bad_epochs = j.at("scheduler").at("bad_epochs").get<int64_t>();
  c.g_lr = j.at("g_lr").get<double>();
  c.d_lr = j.at("d_lr").get<double>();
  c.opt_g_steps = j.at("opt_g_steps").get<int64_t>();
  c.opt_d_steps = j.at("opt_d_steps").get<int64_t>();
  c.train_rng_state = j.at("train_rng").get<std::vector<uint64_t>>();

  for (const auto& entry : j.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    Tensor t(shape);
    in.seekg(static_cast<std::streamoff>(header.size() + std::to_string(header.size()).size() + 2 +
                                         entry.at("offset").get<int64_t>()));
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(t.numel() * sizeof(double))) {
      throw DataError("load_checkpoint: truncated blob for tensor " + name);
    }
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  return c;
}

}  // namespace crsynth::train
