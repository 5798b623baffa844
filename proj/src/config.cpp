#include "crsynth/config.hpp"

#include <cmath>
namespace crsynth {

namespace {
void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}
}  // namespace

void GeneratorConfig::validate() const {
  require(sar_channels >= 1, "generator: sar_channels must be >= 1");
  require(opt_channels >= 1, "generator: opt_channels must be >= 1");
  require(base_width >= 1, "generator: base_width must be >= 1");
  require(swin_embed_dim >= 1, "generator: swin_embed_dim must be >= 1");
  require(window_size >= 1, "generator: window_size must be >= 1");
  require(qk_channels >= 0, "generator: qk_channels must be >= 0");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "generator: dropout_rate must be in [0,1)");
  for (int s = 0; s < 4; ++s) {
    require(swin_depths[static_cast<size_t>(s)] >= 1, "generator: swin_depths entries must be >= 1");
    require(swin_heads[static_cast<size_t>(s)] >= 1, "generator: swin_heads entries must be >= 1");
    int64_t dim = swin_embed_dim << s;
    require(dim % swin_heads[static_cast<size_t>(s)] == 0,
            "generator: stage " + std::to_string(s + 1) + " width " + std::to_string(dim) +
                " is not divisible by its head count");
  }
}

void GeneratorConfig::validate_tile(int64_t height, int64_t width) const {
  int64_t block = window_size * 8;
  for (auto [name, v] : {std::pair{"height", height}, std::pair{"width", width}}) {
    require(v > 0, std::string("tile ") + name + " must be positive");
    require(v % 4 == 0, std::string("tile ") + name + " " + std::to_string(v) +
                            " is not divisible by 4 (DownUp block)");
    require(v % block == 0, std::string("tile ") + name + " " + std::to_string(v) +
                                " is not divisible by window_size*8 = " + std::to_string(block));
  }
}

void DiscriminatorConfig::validate() const {
  require(in_channels >= 1, "discriminator: in_channels must be >= 1");
  require(!widths.empty(), "discriminator: widths must be non-empty");
  for (int64_t w : widths) require(w >= 1, "discriminator: widths entries must be >= 1");
  require(n_scales == 3, "discriminator: n_scales is fixed at 3");
  require(spectral_norm_iters >= 1, "discriminator: spectral_norm_iters must be >= 1");
}

void LossWeights::validate() const {
  for (double v : {alpha, beta, gamma_sim, lambda_adv, lambda_gp}) {
    require(v >= 0.0 && std::isfinite(v), "loss weights must be finite and non-negative");
  }
}

std::string AblationSpec::label() const {
  if (no_downup) return "No_DownUp";
  if (no_fusionatt) return "No_FusionAtt";
  if (no_channel_att) return "No_Channel Att";
  if (no_spatial_att) return "No_Spatial Att";
  if (alt_discriminator) return "Alt_DIS";
  return "CRSynthNet";
}

void TrainConfig::validate() const {
  require(epochs >= 1, "train: epochs must be >= 1");
  require(batch_size >= 1, "train: batch_size must be >= 1");
  require(lr > 0.0, "train: lr must be positive");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, "train: betas must be in (0,1)");
  require(d_weight_decay >= 0.0, "train: d_weight_decay must be >= 0");
  require(plateau_patience >= 1, "train: plateau_patience must be >= 1");
  require(plateau_factor > 0.0 && plateau_factor < 1.0, "train: plateau_factor must be in (0,1)");
  require(monitor_metric == "psnr", "train: unsupported monitor metric '" + monitor_metric + "'");
  require(checkpoint_every >= 1, "train: checkpoint_every must be >= 1");
}

}  // namespace crsynth
