#pragma once

#include <optional>

#include "crsynth/data/iterator.hpp"
#include "crsynth/data/toy.hpp"
#include "crsynth/gen/generator.hpp"
#include "crsynth/loss/losses.hpp"
#include "crsynth/metrics/report.hpp"
#include "crsynth/train/checkpoint.hpp"
#include "crsynth/train/optim.hpp"

namespace crsynth::train {

// Raised when a step produces a non-finite loss; carries a diagnostic dump.
class TrainAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepLosses {
  double d_total = 0.0, d_real = 0.0, d_fake = 0.0, d_gp = 0.0;
  double g_total = 0.0, g_sim = 0.0, g_adv = 0.0;
};

// Everything one training run owns: models, optimizers, scheduler, frozen
// feature networks, and the RNG stream for dropout and penalty epsilons.
struct TrainState {
  GeneratorConfig gcfg;
  DiscriminatorConfig dcfg;
  LossWeights weights;
  TrainConfig tcfg;
  std::unique_ptr<gen::Generator> generator;
  std::unique_ptr<disc::Critic> critic;
  std::unique_ptr<Adam> opt_g, opt_d;
  PlateauScheduler scheduler;
  Rng train_rng{0};
  std::unique_ptr<loss::FixedRandomExtractor> extractor;
  std::vector<std::string> extractor_layers;
  std::unique_ptr<metrics::FeatureEmbedder> embedder;
  int64_t next_epoch = 0;
  int64_t global_step = 0;

  static TrainState create(const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg, const LossWeights& weights,
                           const TrainConfig& tcfg);

  Checkpoint to_checkpoint(const std::string& config_hash);
  void restore(const Checkpoint& ckpt);
};

// One discriminator update (with gradient penalty) followed by one generator
// update. The discriminator sees a detached prediction; the generator update
// scores the live prediction against the freshly updated discriminator.
StepLosses train_step(TrainState& st, const data::SceneBatch& batch);

// Evaluation-mode synthesis; predictions mapped back to the unit range.
std::vector<metrics::EvalPair> synthesize_pairs(TrainState& st, const data::SceneBatch& batch,
                                                const data::ModalityNorms& norms);

// Evaluation-mode metrics over one split (deterministic manifest order).
metrics::MetricReport validate(TrainState& st, const data::TileManifest& manifest, const std::string& split,
                               const data::ModalityNorms& norms, const std::string& model_name);

struct RunSetup {
  GeneratorConfig gcfg;
  DiscriminatorConfig dcfg;
  LossWeights weights;
  TrainConfig tcfg;
  std::string manifest_path;
  std::string run_dir;
  std::string config_snapshot;  // verbatim config text, written into the run dir
  std::string model_name = "CRSynthNet";
};

struct RunResult {
  double best_psnr = 0.0;
  int64_t epochs_run = 0;
  std::string best_checkpoint;
  std::string final_checkpoint;
  metrics::MetricReport best_report;
};

// Full loop: per-epoch validation, plateau scheduling on the generator lr,
// checkpoint retention (latest per policy + best on the monitor metric),
// JSONL history, resume support.
RunResult run_training(const RunSetup& setup, const std::optional<std::string>& resume_checkpoint = {});

// Trains every requested variant under the identical seed and data order and
// renders the comparison table; returns the table text.
std::string run_ablation(const RunSetup& base, const std::vector<std::string>& variants);

AblationSpec ablation_from_name(const std::string& name);
const std::vector<std::string>& ablation_variant_names();

std::string config_hash_of(const std::string& text);

}  // namespace crsynth::train
