#include "crsynth/cli/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace crsynth::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_array4(const json& j, const char* key, std::array<int64_t, 4>& out, const std::string& where) {
  if (!j.contains(key)) return;
  auto v = j.at(key).get<std::vector<int64_t>>();
  if (v.size() != 4) throw ConfigError("config: " + where + "." + key + " must have exactly 4 entries");
  std::copy(v.begin(), v.end(), out.begin());
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"schema_version", "generator", "discriminator", "loss", "train", "data"}, "top level");
  if (!j.contains("schema_version") || j.at("schema_version").get<int64_t>() != 1) {
    throw ConfigError("config: schema_version must be present and equal to 1");
  }

  RunConfig cfg;
  cfg.raw_text = text;

  if (j.contains("generator")) {
    const json& g = j["generator"];
    reject_unknown(g,
                   {"sar_channels", "opt_channels", "base_width", "swin_embed_dim", "swin_depths", "swin_heads",
                    "window_size", "qk_channels", "dropout_rate", "gamma_init"},
                   "generator");
    read(g, "sar_channels", cfg.generator.sar_channels);
    read(g, "opt_channels", cfg.generator.opt_channels);
    read(g, "base_width", cfg.generator.base_width);
    read(g, "swin_embed_dim", cfg.generator.swin_embed_dim);
    read_array4(g, "swin_depths", cfg.generator.swin_depths, "generator");
    read_array4(g, "swin_heads", cfg.generator.swin_heads, "generator");
    read(g, "window_size", cfg.generator.window_size);
    read(g, "qk_channels", cfg.generator.qk_channels);
    read(g, "dropout_rate", cfg.generator.dropout_rate);
    read(g, "gamma_init", cfg.generator.gamma_init);
  }

  if (j.contains("discriminator")) {
    const json& d = j["discriminator"];
    reject_unknown(d, {"widths", "spectral_norm_iters", "use_batch_norm"}, "discriminator");
    read(d, "widths", cfg.discriminator.widths);
    read(d, "spectral_norm_iters", cfg.discriminator.spectral_norm_iters);
    read(d, "use_batch_norm", cfg.discriminator.use_batch_norm);
  }
  // Conditioning width is derived, never configured: candidate + 2 SAR + optical.
  cfg.discriminator.in_channels = 2 * cfg.generator.opt_channels + 2 * cfg.generator.sar_channels;

  if (j.contains("loss")) {
    const json& l = j["loss"];
    reject_unknown(l, {"alpha", "beta", "gamma_sim", "lambda_adv", "lambda_gp"}, "loss");
    read(l, "alpha", cfg.loss.alpha);
    read(l, "beta", cfg.loss.beta);
    read(l, "gamma_sim", cfg.loss.gamma_sim);
    read(l, "lambda_adv", cfg.loss.lambda_adv);
    read(l, "lambda_gp", cfg.loss.lambda_gp);
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t,
                   {"epochs", "batch_size", "lr", "beta1", "beta2", "d_weight_decay", "plateau_patience",
                    "plateau_factor", "monitor_metric", "seed", "checkpoint_every", "ablation"},
                   "train");
    read(t, "epochs", cfg.train.epochs);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "lr", cfg.train.lr);
    read(t, "beta1", cfg.train.beta1);
    read(t, "beta2", cfg.train.beta2);
    read(t, "d_weight_decay", cfg.train.d_weight_decay);
    read(t, "plateau_patience", cfg.train.plateau_patience);
    read(t, "plateau_factor", cfg.train.plateau_factor);
    read(t, "monitor_metric", cfg.train.monitor_metric);
    read(t, "seed", cfg.train.seed);
    read(t, "checkpoint_every", cfg.train.checkpoint_every);
    if (t.contains("ablation")) {
      const json& a = t["ablation"];
      reject_unknown(a, {"no_downup", "no_fusionatt", "no_channel_att", "no_spatial_att", "alt_discriminator"},
                     "train.ablation");
      read(a, "no_downup", cfg.train.ablation.no_downup);
      read(a, "no_fusionatt", cfg.train.ablation.no_fusionatt);
      read(a, "no_channel_att", cfg.train.ablation.no_channel_att);
      read(a, "no_spatial_att", cfg.train.ablation.no_spatial_att);
      read(a, "alt_discriminator", cfg.train.ablation.alt_discriminator);
    }
  }

  if (j.contains("data")) {
    const json& d = j["data"];
    reject_unknown(d, {"manifest", "run_dir", "tile_size"}, "data");
    read(d, "manifest", cfg.manifest);
    read(d, "run_dir", cfg.run_dir);
    read(d, "tile_size", cfg.tile_size);
  }

  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  generator.validate();
  discriminator.validate();
  loss.validate();
  train.validate();
  generator.validate_tile(tile_size, tile_size);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string default_run_config_text() {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["generator"] = {{"sar_channels", 2},      {"opt_channels", 3},  {"base_width", 32},
                    {"swin_embed_dim", 96},   {"swin_depths", {2, 2, 6, 2}}, {"swin_heads", {3, 6, 12, 24}},
                    {"window_size", 8},       {"qk_channels", 0},   {"dropout_rate", 0.2},
                    {"gamma_init", 0.0}};
  j["discriminator"] = {{"widths", {64, 128, 256, 512}}, {"spectral_norm_iters", 1}, {"use_batch_norm", true}};
  j["loss"] = {{"alpha", 1.0}, {"beta", 1.0}, {"gamma_sim", 1.0}, {"lambda_adv", 0.01}, {"lambda_gp", 10.0}};
  j["train"] = {{"epochs", 200},
                {"batch_size", 8},
                {"lr", 0.001},
                {"beta1", 0.9},
                {"beta2", 0.999},
                {"d_weight_decay", 1e-5},
                {"plateau_patience", 10},
                {"plateau_factor", 0.5},
                {"monitor_metric", "psnr"},
                {"seed", 42},
                {"checkpoint_every", 1},
                {"ablation",
                 {{"no_downup", false},
                  {"no_fusionatt", false},
                  {"no_channel_att", false},
                  {"no_spatial_att", false},
                  {"alt_discriminator", false}}}};
  j["data"] = {{"manifest", "toy/manifest.jsonl"}, {"run_dir", "runs/default"}, {"tile_size", 64}};
  return j.dump(2) + "\n";
}

std::string resolve_run_dir(const std::string& run_dir) {
  const char* root = std::getenv("CRSYNTH_RUN_ROOT");
  if (root == nullptr || run_dir.empty() || std::filesystem::path(run_dir).is_absolute()) return run_dir;
  return (std::filesystem::path(root) / run_dir).string();
}

}  // namespace crsynth::cli
