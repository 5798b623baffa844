// crsynth: multi-temporal SAR-optical synthesis toolbox.
// Subcommands cover toy-data generation, training, evaluation, synthesis,
// ablation sweeps, and comparison reports.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "crsynth/cli/run_config.hpp"
#include "crsynth/data/raster_io.hpp"
#include "crsynth/data/toy.hpp"
#include "crsynth/metrics/report.hpp"
#include "crsynth/report/image_io.hpp"
#include "crsynth/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace crsynth;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

train::RunSetup setup_from(const cli::RunConfig& cfg) {
  train::RunSetup setup;
  setup.gcfg = cfg.generator;
  setup.dcfg = cfg.discriminator;
  setup.weights = cfg.loss;
  setup.tcfg = cfg.train;
  setup.manifest_path = cfg.manifest;
  setup.run_dir = cli::resolve_run_dir(cfg.run_dir);
  setup.config_snapshot = cfg.raw_text;
  setup.model_name = cfg.train.ablation.label();
  return setup;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"CRSynthNet multi-temporal SAR-optical image synthesis"};
  app.require_subcommand(1);

  // --- make-toy-data ---
  auto* mk = app.add_subcommand("make-toy-data", "Generate a deterministic toy corpus");
  std::string mk_out;
  int64_t mk_n = 8, mk_size = 64, mk_val = 1, mk_test = 1;
  uint64_t mk_seed = 7;
  double mk_cloud = 0.3;
  bool mk_force = false;
  mk->add_option("--out", mk_out, "output corpus directory")->required();
  mk->add_option("--n", mk_n, "number of scenes");
  mk->add_option("--size", mk_size, "tile extent (must satisfy the generator divisibility)");
  mk->add_option("--seed", mk_seed, "master seed");
  mk->add_option("--cloud", mk_cloud, "time-1 cloud fraction target");
  mk->add_option("--val-count", mk_val, "scenes assigned to the val split");
  mk->add_option("--test-count", mk_test, "scenes assigned to the test split");
  mk->add_flag("--force", mk_force, "overwrite a non-empty directory");

  // --- print-config ---
  auto* pc = app.add_subcommand("print-config", "Print the default config template");

  // --- train ---
  auto* tr = app.add_subcommand("train", "Train from a config file");
  std::string tr_config, tr_resume, tr_run_dir;
  tr->add_option("--config", tr_config, "run config JSON")->required();
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  tr->add_option("--run-dir", tr_run_dir, "override the config's run directory");

  // --- evaluate ---
  auto* ev = app.add_subcommand("evaluate", "Metric report for prediction tiles against references");
  std::string ev_pred, ev_ref, ev_out, ev_name = "model";
  uint64_t ev_seed = 0xF1D;
  ev->add_option("--pred", ev_pred, "directory of predicted tiles")->required();
  ev->add_option("--ref", ev_ref, "directory of reference tiles")->required();
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->add_option("--name", ev_name, "model label");
  ev->add_option("--embedder-seed", ev_seed, "feature embedder seed");

  // --- synthesize ---
  auto* sy = app.add_subcommand("synthesize", "Predict tiles for a manifest split from a checkpoint");
  std::string sy_config, sy_ckpt, sy_manifest, sy_split = "test", sy_out;
  sy->add_option("--config", sy_config, "run config JSON")->required();
  sy->add_option("--checkpoint", sy_ckpt, "checkpoint file")->required();
  sy->add_option("--manifest", sy_manifest, "manifest (defaults to the config's)");
  sy->add_option("--split", sy_split, "split to synthesize");
  sy->add_option("--out", sy_out, "output directory")->required();

  // --- ablate ---
  auto* ab = app.add_subcommand("ablate", "Train ablation variants and emit the comparison table");
  std::string ab_config, ab_variants, ab_out;
  ab->add_option("--config", ab_config, "run config JSON")->required();
  ab->add_option("--variants", ab_variants, "comma-separated variant list (default: all)");
  ab->add_option("--out", ab_out, "override output directory");

  // --- report ---
  auto* rp = app.add_subcommand("report", "Side-by-side metric table and comparison panels");
  std::string rp_manifest, rp_split = "test", rp_runs, rp_names, rp_out;
  rp->add_option("--manifest", rp_manifest, "manifest with inputs and references")->required();
  rp->add_option("--split", rp_split, "split to report on");
  rp->add_option("--runs", rp_runs, "comma-separated prediction directories")->required();
  rp->add_option("--names", rp_names, "comma-separated labels (default: directory names)");
  rp->add_option("--out", rp_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (mk->parsed()) {
    if (fs::exists(mk_out) && !fs::is_empty(mk_out) && !mk_force) {
      throw ConfigError("output directory " + mk_out + " is not empty (use --force)");
    }
    GeneratorConfig probe;  // default window 8: divisibility window_size * 8
    probe.validate_tile(mk_size, mk_size);
    data::ToyCorpusSpec spec;
    spec.root = mk_out;
    spec.count = mk_n;
    spec.size = mk_size;
    spec.master_seed = mk_seed;
    spec.cloud_fraction_target = mk_cloud;
    spec.val_count = mk_val;
    spec.test_count = mk_test;
    std::string hash = data::write_toy_corpus(spec);
    std::cout << "corpus " << mk_out << " (" << mk_n << " scenes, " << mk_size << "x" << mk_size << ")\n";
    std::cout << "corpus-hash " << hash << "\n";
    return 0;
  }

  if (pc->parsed()) {
    std::cout << cli::default_run_config_text();
    return 0;
  }

  if (tr->parsed()) {
    cli::RunConfig cfg = cli::load_run_config(tr_config);
    train::RunSetup setup = setup_from(cfg);
    if (!tr_run_dir.empty()) setup.run_dir = tr_run_dir;
    std::optional<std::string> resume;
    if (!tr_resume.empty()) resume = tr_resume;
    train::RunResult res = train::run_training(setup, resume);
    std::cout << "run dir: " << setup.run_dir << "\n";
    std::cout << "epochs: " << res.epochs_run << "\n";
    std::cout << "best val psnr: " << res.best_psnr << "\n";
    std::cout << "best checkpoint: " << res.best_checkpoint << "\n";
    return 0;
  }

  if (ev->parsed()) {
    metrics::FeatureEmbedder embedder(ev_seed, 3, 64);
    metrics::MetricReport report = metrics::evaluate_dirs(ev_pred, ev_ref, embedder, ev_name);
    fs::create_directories(ev_out);
    std::ofstream csv(fs::path(ev_out) / "metrics.csv", std::ios::trunc);
    csv << metrics::report_csv(report);
    std::ofstream table(fs::path(ev_out) / "metrics_table.txt", std::ios::trunc);
    std::string text = metrics::report_table({report});
    table << text;
    std::cout << text;
    return 0;
  }

  if (sy->parsed()) {
    cli::RunConfig cfg = cli::load_run_config(sy_config);
    std::string manifest_path = sy_manifest.empty() ? cfg.manifest : sy_manifest;
    data::TileManifest manifest = data::load_manifest(manifest_path);
    auto st = train::TrainState::create(cfg.generator, cfg.discriminator, cfg.loss, cfg.train);
    train::Checkpoint ckpt = train::load_checkpoint(sy_ckpt);
    st.restore(ckpt);

    data::ModalityNorms norms;
    data::DatasetIterator iter(manifest, sy_split, 1, 0, norms);
    data::SceneBatch all = iter.full_batch();
    auto pairs = train::synthesize_pairs(st, all, norms);
    fs::create_directories(sy_out);
    for (const auto& p : pairs) {
      data::RasterMeta meta;
      meta.shape = p.prediction.shape();
      meta.range = "unit";
      data::write_raster((fs::path(sy_out) / p.tile_id).string(), p.prediction, meta);
    }
    std::cout << "synthesized " << pairs.size() << " tiles into " << sy_out << "\n";
    return 0;
  }

  if (ab->parsed()) {
    cli::RunConfig cfg = cli::load_run_config(ab_config);
    train::RunSetup setup = setup_from(cfg);
    setup.run_dir = ab_out.empty() ? (fs::path(setup.run_dir) / "ablation").string() : ab_out;
    std::vector<std::string> variants =
        ab_variants.empty() ? train::ablation_variant_names() : split_csv(ab_variants);
    std::string table = train::run_ablation(setup, variants);
    std::cout << table;
    std::cout << "table: " << (fs::path(setup.run_dir) / "ablation_table.txt").string() << "\n";
    return 0;
  }

  if (rp->parsed()) {
    data::TileManifest manifest = data::load_manifest(rp_manifest);
    auto entries = manifest.split_entries(rp_split);
    if (entries.empty()) throw DataError("report: split '" + rp_split + "' is empty");
    std::vector<std::string> runs = split_csv(rp_runs);
    std::vector<std::string> names = rp_names.empty() ? std::vector<std::string>{} : split_csv(rp_names);
    if (!names.empty() && names.size() != runs.size()) {
      throw ConfigError("report: --names count does not match --runs");
    }

    fs::create_directories(fs::path(rp_out) / "panels");
    metrics::FeatureEmbedder embedder(0xF1D, 3, 64);

    // metric table across runs
    std::vector<metrics::MetricReport> reports;
    for (size_t r = 0; r < runs.size(); ++r) {
      std::string name = names.empty() ? fs::path(runs[r]).filename().string() : names[r];
      std::vector<metrics::EvalPair> pairs;
      for (const auto* e : entries) {
        metrics::EvalPair p;
        p.tile_id = e->tile_id;
        p.prediction = data::read_raster_data((fs::path(runs[r]) / e->tile_id).string());
        data::SceneInstance inst = data::load_instance(manifest, *e);
        p.reference = inst.s2_t2_ref;
        pairs.push_back(std::move(p));
      }
      metrics::MetricReport rep = metrics::evaluate_pairs(std::move(pairs), embedder, name);
      std::ofstream csv(fs::path(rp_out) / ("metrics_" + name + ".csv"), std::ios::trunc);
      csv << metrics::report_csv(rep);
      reports.push_back(std::move(rep));
    }
    std::string table = metrics::report_table(reports);
    std::ofstream tf(fs::path(rp_out) / "comparison_table.txt", std::ios::trunc);
    tf << table;
    std::cout << table;

    // per-tile panels: inputs, one prediction column per run, reference
    for (const auto* e : entries) {
      data::SceneInstance inst = data::load_instance(manifest, *e);
      std::vector<report::Image> cells;
      cells.push_back(report::from_optical(inst.s2_t1));
      cells.push_back(report::from_sar_db(inst.s1_t1));
      cells.push_back(report::from_sar_db(inst.s1_t2));
      for (const auto& run : runs) {
        cells.push_back(report::from_optical(data::read_raster_data((fs::path(run) / e->tile_id).string())));
      }
      cells.push_back(report::from_optical(inst.s2_t2_ref));
      report::write_png((fs::path(rp_out) / "panels" / (e->tile_id + ".png")).string(),
                        report::compose_row(cells));
    }
    std::cout << "panels: " << (fs::path(rp_out) / "panels").string() << " (" << entries.size() << " tiles)\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
