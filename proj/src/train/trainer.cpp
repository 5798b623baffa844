#include "crsynth/train/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace crsynth::train {

namespace fs = std::filesystem;
namespace O = ag::ops;
using ag::Variable;
using ordered_json = nlohmann::ordered_json;

std::string config_hash_of(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char out[32];
  snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

TrainState TrainState::create(const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg,
                              const LossWeights& weights, const TrainConfig& tcfg) {
  gcfg.validate();
  dcfg.validate();
  weights.validate();
  tcfg.validate();

  TrainState st{gcfg,    dcfg,    weights, tcfg,
                nullptr, nullptr, nullptr, nullptr,
                PlateauScheduler(tcfg.plateau_factor, tcfg.plateau_patience),
                Rng(0),  nullptr, {},      nullptr};
  Rng master(tcfg.seed);
  Rng g_rng = master.fork();
  Rng d_rng = master.fork();
  st.train_rng = master.fork();

  st.generator = std::make_unique<gen::Generator>(gcfg, tcfg.ablation, g_rng);
  if (tcfg.ablation.alt_discriminator) {
    st.critic = std::make_unique<disc::AltDiscriminator>(dcfg, d_rng);
  } else {
    st.critic = std::make_unique<disc::MultiScaleDiscriminator>(dcfg, d_rng);
  }
  st.opt_g = std::make_unique<Adam>(st.generator->named_parameters(), tcfg.lr, tcfg.beta1, tcfg.beta2, 0.0);
  st.opt_d = std::make_unique<Adam>(st.critic->named_parameters(), tcfg.lr, tcfg.beta1, tcfg.beta2,
                                    tcfg.d_weight_decay);
  st.extractor = std::make_unique<loss::FixedRandomExtractor>(0xFEA7ull, gcfg.opt_channels,
                                                              std::vector<int64_t>{12, 24, 48});
  st.extractor_layers = st.extractor->layer_names();
  st.embedder = std::make_unique<metrics::FeatureEmbedder>(0xF1Dull, gcfg.opt_channels, 64);
  return st;
}

namespace {

uint64_t tensor_fnv(const Tensor& t) {
  uint64_t h = 0xcbf29ce484222325ull;
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(t.data());
  size_t n = static_cast<size_t>(t.numel()) * sizeof(double);
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void check_finite(const StepLosses& losses, const data::SceneBatch& batch, int64_t step) {
  for (double v : {losses.d_total, losses.d_real, losses.d_fake, losses.d_gp, losses.g_total, losses.g_sim,
                   losses.g_adv}) {
    if (!std::isfinite(v)) {
      char buf[256];
      snprintf(buf, sizeof(buf),
               "non-finite loss at step %lld: d_total=%g d_real=%g d_fake=%g gp=%g g_total=%g g_sim=%g g_adv=%g "
               "(input hash %016llx)",
               static_cast<long long>(step), losses.d_total, losses.d_real, losses.d_fake, losses.d_gp,
               losses.g_total, losses.g_sim, losses.g_adv,
               static_cast<unsigned long long>(tensor_fnv(batch.s1_t1)));
      throw TrainAbort(buf);
    }
  }
}

}  // namespace

StepLosses train_step(TrainState& st, const data::SceneBatch& batch) {
  st.generator->set_training(true);
  st.critic->set_training(true);

  Variable s1t1 = Variable::constant(batch.s1_t1);
  Variable s1t2 = Variable::constant(batch.s1_t2);
  Variable s2t1 = Variable::constant(batch.s2_t1);
  Variable ref = Variable::constant(batch.s2_t2_ref);

  Variable pred = st.generator->forward(s1t1, s1t2, s2t1, st.train_rng);

  StepLosses out;

  // Discriminator update on the detached prediction.
  Variable real_stack = disc::MultiScaleDiscriminator::make_stack(ref, s1t1, s1t2, s2t1);
  Variable fake_stack = disc::MultiScaleDiscriminator::make_stack(pred.detach(), s1t1, s1t2, s2t1);
  st.opt_d->zero_grad();
  auto d_parts = loss::discriminator_loss(*st.critic, real_stack, fake_stack, st.weights, st.train_rng,
                                          /*create_graph=*/true);
  ag::backward(d_parts.total);
  st.opt_d->step();
  out.d_total = d_parts.total.value().item();
  out.d_real = d_parts.real_term.value().item();
  out.d_fake = d_parts.fake_term.value().item();
  out.d_gp = d_parts.penalty.value().item();

  // Generator update against the refreshed discriminator.
  disc::ScoreMaps scores = st.critic->score_stack(disc::MultiScaleDiscriminator::make_stack(pred, s1t1, s1t2, s2t1));
  Variable g_sim = loss::similarity_loss(pred, ref, st.weights, *st.extractor, st.extractor_layers);
  Variable g_adv = loss::generator_adv_loss(scores);
  Variable g_total = st.weights.lambda_adv == 0.0 ? g_sim : O::add(g_sim, O::mul_scalar(g_adv, st.weights.lambda_adv));
  st.opt_g->zero_grad();
  ag::backward(g_total);
  st.opt_g->step();
  out.g_total = g_total.value().item();
  out.g_sim = g_sim.value().item();
  out.g_adv = g_adv.value().item();

  check_finite(out, batch, st.global_step);
  ++st.global_step;
  return out;
}

std::vector<metrics::EvalPair> synthesize_pairs(TrainState& st, const data::SceneBatch& batch,
                                                const data::ModalityNorms& norms) {
  st.generator->set_training(false);
  ag::NoGradGuard ng;
  Rng eval_rng(0);  // dropout disabled in eval mode; stream unused
  Variable pred = st.generator->forward(Variable::constant(batch.s1_t1), Variable::constant(batch.s1_t2),
                                        Variable::constant(batch.s2_t1), eval_rng);
  std::vector<metrics::EvalPair> pairs;
  int64_t n = batch.size();
  const Shape& s = pred.value().shape();
  int64_t chw = s[1] * s[2] * s[3];
  for (int64_t i = 0; i < n; ++i) {
    metrics::EvalPair p;
    p.tile_id = batch.tile_ids[static_cast<size_t>(i)];
    Tensor pt(Shape{s[1], s[2], s[3]});
    Tensor rt(Shape{s[1], s[2], s[3]});
    for (int64_t j = 0; j < chw; ++j) {
      pt[j] = norms.optical.invert(pred.value()[i * chw + j]);
      rt[j] = norms.optical.invert(batch.s2_t2_ref[i * chw + j]);
    }
    p.prediction = std::move(pt);
    p.reference = std::move(rt);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

metrics::MetricReport validate(TrainState& st, const data::TileManifest& manifest, const std::string& split,
                               const data::ModalityNorms& norms, const std::string& model_name) {
  data::DatasetIterator iter(manifest, split, 1, 0, norms);
  data::SceneBatch all = iter.full_batch();
  auto pairs = synthesize_pairs(st, all, norms);
  return metrics::evaluate_pairs(std::move(pairs), *st.embedder, model_name);
}

Checkpoint TrainState::to_checkpoint(const std::string& config_hash) {
  Checkpoint c;
  c.epoch = next_epoch - 1;
  c.config_hash = config_hash;
  c.scheduler_best = scheduler.best();
  c.scheduler_has_best = scheduler.has_best();
  c.scheduler_bad_epochs = scheduler.bad_epochs();
  c.g_lr = opt_g->lr();
  c.d_lr = opt_d->lr();
  c.opt_g_steps = opt_g->step_count();
  c.opt_d_steps = opt_d->step_count();
  auto rng_state = train_rng.state();
  c.train_rng_state.assign(rng_state.begin(), rng_state.end());

  for (const auto& [name, t] : generator->state_dict()) c.tensors.emplace_back("g." + name, t);
  for (const auto& [name, t] : critic->state_dict()) c.tensors.emplace_back("d." + name, t);
  for (auto& [name, t] : opt_g->state_tensors()) c.tensors.emplace_back("opt_g." + name, *t);
  for (auto& [name, t] : opt_d->state_tensors()) c.tensors.emplace_back("opt_d." + name, *t);
  return c;
}

void TrainState::restore(const Checkpoint& c) {
  std::vector<std::pair<std::string, Tensor>> g_state, d_state;
  for (const auto& [name, t] : c.tensors) {
    if (name.rfind("g.", 0) == 0) g_state.emplace_back(name.substr(2), t);
    if (name.rfind("d.", 0) == 0) d_state.emplace_back(name.substr(2), t);
  }
  generator->load_state_dict(g_state);
  critic->load_state_dict(d_state);
  for (auto& [name, t] : opt_g->state_tensors()) *t = c.tensor("opt_g." + name);
  for (auto& [name, t] : opt_d->state_tensors()) *t = c.tensor("opt_d." + name);
  opt_g->set_lr(c.g_lr);
  opt_d->set_lr(c.d_lr);
  opt_g->set_step_count(c.opt_g_steps);
  opt_d->set_step_count(c.opt_d_steps);
  scheduler.restore(c.scheduler_best, c.scheduler_has_best, c.scheduler_bad_epochs);
  if (c.train_rng_state.size() != 4) throw DataError("checkpoint: bad rng state");
  std::array<uint64_t, 4> rs;
  std::copy(c.train_rng_state.begin(), c.train_rng_state.end(), rs.begin());
  train_rng.set_state(rs);
  next_epoch = c.epoch + 1;
}

namespace {

void append_history(const std::string& path, const ordered_json& record) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("history: cannot open " + path);
  out << record.dump() << "\n";
}

}  // namespace

RunResult run_training(const RunSetup& setup, const std::optional<std::string>& resume_checkpoint) {
  data::TileManifest manifest = data::load_manifest(setup.manifest_path);
  if (manifest.split_entries("train").empty()) throw DataError("run_training: train split is empty");
  std::string val_split = manifest.split_entries("val").empty() ? "train" : "val";

  fs::create_directories(fs::path(setup.run_dir) / "checkpoints");
  fs::create_directories(fs::path(setup.run_dir) / "best");
  std::string snapshot_path = (fs::path(setup.run_dir) / "config.snapshot").string();
  std::string history_path = (fs::path(setup.run_dir) / "history.log").string();
  std::string hash = config_hash_of(setup.config_snapshot);

  TrainState st = TrainState::create(setup.gcfg, setup.dcfg, setup.weights, setup.tcfg);
  if (resume_checkpoint.has_value()) {
    Checkpoint c = load_checkpoint(*resume_checkpoint);
    if (c.config_hash != hash) {
      throw ConfigError("resume: checkpoint was produced by a different config (hash " + c.config_hash + " vs " +
                        hash + ")");
    }
    st.restore(c);
    st.global_step = st.next_epoch * ((static_cast<int64_t>(manifest.split_entries("train").size()) +
                                       setup.tcfg.batch_size - 1) /
                                      setup.tcfg.batch_size);
  } else {
    std::ofstream snap(snapshot_path, std::ios::trunc);
    snap << setup.config_snapshot;
    std::ofstream(history_path, std::ios::trunc).close();
  }

  data::ModalityNorms norms;
  data::DatasetIterator train_iter(manifest, "train", setup.tcfg.batch_size, setup.tcfg.seed ^ 0xDA7Aull, norms);

  RunResult result;
  result.best_psnr = st.scheduler.has_best() ? st.scheduler.best() : -1.0;

  for (int64_t epoch = st.next_epoch; epoch < setup.tcfg.epochs; ++epoch) {
    train_iter.start_epoch(epoch);
    int64_t step_in_epoch = 0;
    while (auto batch = train_iter.next()) {
      StepLosses losses = train_step(st, *batch);
      ordered_json rec;
      rec["type"] = "step";
      rec["epoch"] = epoch;
      rec["step"] = step_in_epoch++;
      rec["d_total"] = losses.d_total;
      rec["d_real"] = losses.d_real;
      rec["d_fake"] = losses.d_fake;
      rec["d_gp"] = losses.d_gp;
      rec["g_total"] = losses.g_total;
      rec["g_sim"] = losses.g_sim;
      rec["g_adv"] = losses.g_adv;
      append_history(history_path, rec);
    }

    metrics::MetricReport report = validate(st, manifest, val_split, norms, setup.model_name);
    st.next_epoch = epoch + 1;

    bool improved = !st.scheduler.has_best() || report.mean_psnr > st.scheduler.best();
    bool reduced = st.scheduler.observe(report.mean_psnr, *st.opt_g);

    ordered_json rec;
    rec["type"] = "epoch";
    rec["epoch"] = epoch;
    rec["split"] = val_split;
    rec["psnr"] = report.mean_psnr;
    rec["ssim"] = report.mean_ssim;
    rec["ms_ssim"] = report.mean_ms_ssim;
    rec["mae"] = report.mean_mae;
    rec["rmse"] = report.mean_rmse;
    rec["fid"] = report.fid;
    rec["g_lr"] = st.opt_g->lr();
    rec["lr_reduced"] = reduced;
    append_history(history_path, rec);

    if ((epoch + 1) % setup.tcfg.checkpoint_every == 0 || epoch + 1 == setup.tcfg.epochs) {
      std::string path = (fs::path(setup.run_dir) / "checkpoints" / ("epoch_" + std::to_string(epoch))).string();
      save_checkpoint(path, st.to_checkpoint(hash));
      result.final_checkpoint = path;
    }
    if (improved) {
      result.best_psnr = report.mean_psnr;
      result.best_checkpoint = (fs::path(setup.run_dir) / "best" / "checkpoint").string();
      save_checkpoint(result.best_checkpoint, st.to_checkpoint(hash));
      std::ofstream csv((fs::path(setup.run_dir) / "best" / "metrics.csv").string(), std::ios::trunc);
      csv << metrics::report_csv(report);
      result.best_report = report;
    }
    result.epochs_run = epoch + 1;
  }
  std::ofstream table((fs::path(setup.run_dir) / "metrics_table.txt").string(), std::ios::trunc);
  table << metrics::report_table({result.best_report});
  return result;
}

const std::vector<std::string>& ablation_variant_names() {
  static const std::vector<std::string> names = {"full", "no_downup", "no_fusionatt", "no_channel_att",
                                                 "no_spatial_att", "alt_discriminator"};
  return names;
}

AblationSpec ablation_from_name(const std::string& name) {
  AblationSpec spec;
  if (name == "full") return spec;
  if (name == "no_downup") {
    spec.no_downup = true;
  } else if (name == "no_fusionatt") {
    spec.no_fusionatt = true;
  } else if (name == "no_channel_att") {
    spec.no_channel_att = true;
  } else if (name == "no_spatial_att") {
    spec.no_spatial_att = true;
  } else if (name == "alt_discriminator") {
    spec.alt_discriminator = true;
  } else {
    throw ConfigError("unknown ablation variant '" + name + "'");
  }
  return spec;
}

std::string run_ablation(const RunSetup& base, const std::vector<std::string>& variants) {
  if (variants.empty()) throw ConfigError("run_ablation: no variants requested");
  struct Row {
    std::string label;
    metrics::MetricReport report;
  };
  std::vector<Row> rows;
  for (const auto& name : variants) {
    RunSetup setup = base;
    setup.tcfg.ablation = ablation_from_name(name);
    setup.model_name = setup.tcfg.ablation.label();
    setup.run_dir = (fs::path(base.run_dir) / name).string();
    RunResult res = run_training(setup);
    rows.push_back({setup.model_name, res.best_report});
  }

  std::string out;
  char buf[256];
  snprintf(buf, sizeof(buf), "%-24s %10s %8s %8s %8s %10s\n", "Setting", "PSNR (^)", "SSIM (^)", "MAE (v)",
           "RMSE (v)", "FID (v)");
  out += buf;
  out += std::string(74, '-') + "\n";
  for (const auto& r : rows) {
    snprintf(buf, sizeof(buf), "%-24s %10.3f %8.3f %8.3f %8.3f %10.3f\n", r.label.c_str(), r.report.mean_psnr,
             r.report.mean_ssim, r.report.mean_mae, r.report.mean_rmse, r.report.fid);
    out += buf;
  }
  out += std::string(74, '-') + "\n";
  out += "reported TCSEN12 reference rows (not computed by this run):\n";
  const struct {
    const char* label;
    double psnr, ssim, mae, rmse, fid;
  } published[] = {
      {"No_DownUp", 27.053, 0.600, 0.034, 0.049, 73.570},
      {"No_FusionAtt", 26.396, 0.632, 0.046, 0.056, 74.758},
      {"DIS of prior work", 26.339, 0.632, 0.047, 0.056, 78.300},
      {"No_Channel Att", 26.237, 0.627, 0.048, 0.057, 71.875},
      {"No_Spatial Att", 25.808, 0.614, 0.051, 0.060, 84.289},
      {"CRSynthNet", 26.978, 0.648, 0.041, 0.050, 72.789},
  };
  for (const auto& p : published) {
    snprintf(buf, sizeof(buf), "%-24s %10.3f %8.3f %8.3f %8.3f %10.3f\n", p.label, p.psnr, p.ssim, p.mae, p.rmse,
             p.fid);
    out += buf;
  }

  std::ofstream f((fs::path(base.run_dir) / "ablation_table.txt").string(), std::ios::trunc);
  f << out;
  return out;
}

}  // namespace crsynth::train
