#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "crsynth/core/tensor.hpp"

namespace crsynth {

struct GeneratorConfig {
  int64_t sar_channels = 2;  // VV + VH
  int64_t opt_channels = 3;  // RGB
  int64_t base_width = 32;
  int64_t swin_embed_dim = 96;
  std::array<int64_t, 4> swin_depths{2, 2, 6, 2};
  std::array<int64_t, 4> swin_heads{3, 6, 12, 24};
  int64_t window_size = 8;
  int64_t qk_channels = 0;  // 0 -> base_width / 8, floor 1
  double dropout_rate = 0.2;
  double gamma_init = 0.0;

  int64_t qk() const { return qk_channels > 0 ? qk_channels : std::max<int64_t>(1, base_width / 8); }
  void validate() const;
  // Tile divisibility: by 4 for the DownUp block, by window_size * 8 for the
  // four merging backbone stages. Checked at configuration time.
  void validate_tile(int64_t height, int64_t width) const;
};

struct DiscriminatorConfig {
  int64_t in_channels = 10;  // candidate(3) + S1_T1(2) + S1_T2(2) + S2_T1(3)
  std::vector<int64_t> widths{64, 128, 256, 512};
  int n_scales = 3;  // fixed by the architecture
  int spectral_norm_iters = 1;
  bool use_batch_norm = true;

  void validate() const;
};

struct LossWeights {
  double alpha = 1.0;       // perceptual term
  double beta = 1.0;        // cosine term
  double gamma_sim = 1.0;   // MS-SSIM term
  double lambda_adv = 0.01; // adversarial weight in the generator objective
  double lambda_gp = 10.0;  // gradient-penalty weight

  void validate() const;
};

struct AblationSpec {
  bool no_downup = false;
  bool no_fusionatt = false;
  bool no_channel_att = false;
  bool no_spatial_att = false;
  bool alt_discriminator = false;

  std::string label() const;
};

struct TrainConfig {
  int64_t epochs = 200;
  int64_t batch_size = 8;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double d_weight_decay = 1e-5;  // discriminator optimizer only
  int64_t plateau_patience = 10;
  double plateau_factor = 0.5;
  std::string monitor_metric = "psnr";  // higher is better
  uint64_t seed = 42;
  int64_t checkpoint_every = 1;
  AblationSpec ablation;

  void validate() const;
};

}  // namespace crsynth
