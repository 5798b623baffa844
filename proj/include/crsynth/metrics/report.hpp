#pragma once

#include "crsynth/metrics/metrics.hpp"

namespace crsynth::metrics {

struct TileMetrics {
  std::string tile_id;
  double psnr = 0.0, ssim = 0.0, ms_ssim = 0.0, mae = 0.0, rmse = 0.0;
};

struct MetricReport {
  std::string model_name;
  std::vector<TileMetrics> per_tile;  // sorted by tile id
  double mean_psnr = 0.0, mean_ssim = 0.0, mean_ms_ssim = 0.0, mean_mae = 0.0, mean_rmse = 0.0;
  double fid = 0.0;

  void finalize();  // sorts rows, computes aggregates; throws when empty
};

struct EvalPair {
  std::string tile_id;
  Tensor prediction;  // unit range (C,H,W)
  Tensor reference;
};

// Per-tile metrics plus corpus FID over embedded features.
MetricReport evaluate_pairs(std::vector<EvalPair> pairs, const FeatureEmbedder& embedder,
                            const std::string& model_name);

// Directory form: matching <tile_id>.bin/<tile_id>.json raster pairs in both
// directories. Missing counterparts are reported by id.
MetricReport evaluate_dirs(const std::string& predictions_dir, const std::string& references_dir,
                           const FeatureEmbedder& embedder, const std::string& model_name);

// One comma-separated record per tile (UTF-8), aggregate row last.
std::string report_csv(const MetricReport& report);

// Aligned text table, one row per report, column order PSNR SSIM MAE RMSE FID.
// The published CRSynthNet TCSEN12 numbers are rendered as a reference
// footnote; they are documentation, never computed or asserted here.
std::string report_table(const std::vector<MetricReport>& reports, bool reference_footnote = true);

}  // namespace crsynth::metrics
