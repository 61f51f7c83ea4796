#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairlend/data.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/trainer.hpp"

namespace fairlend {

// The four Table-2-style training variants.
struct AblationVariant {
  std::string name;  // ours | no-CL | no-DA | neither
  bool use_contrastive = true;
  bool use_domain = true;
};
const std::vector<AblationVariant>& ablation_variants();

struct RunOutcome {
  std::string variant;
  std::string backbone;
  uint64_t seed = 0;
  MetricsReport report;
};

struct AblationSummary {
  std::vector<RunOutcome> rows;  // variant-major, seed-minor
  // Seed means in ablation_variants() order.
  std::vector<double> mean_auc, mean_profit, mean_uniformity, mean_alignment;
  std::vector<double> mean_dpi, mean_income, mean_approval;
};

// Trains variants x seeds on one split and evaluates each on the fully
// labeled test half. The shared seed list keeps comparisons paired.
AblationSummary run_ablation(const DatasetSplit& split, const ModelConfig& mcfg,
                             const TrainConfig& base, const std::vector<uint64_t>& seeds);

// Per-length-bin mean AUC of ours and neither plus the (ours - neither)
// deltas and a least-squares slope of delta against bin index.
struct LengthBinReport {
  std::vector<std::string> labels;
  std::vector<double> mean_count;  // mean loans per bin over seeds
  std::vector<double> auc_ours, auc_neither, delta;  // NaN where undefined
  double delta_slope = 0;
};
LengthBinReport run_length_bins(const AblationSummary& summary);

// 4 backbones x 4 ablation variants, one row per (backbone, variant, seed).
std::vector<RunOutcome> run_backbone_sweep(const DatasetSplit& split, const ModelConfig& mcfg,
                                           const TrainConfig& base,
                                           const std::vector<uint64_t>& seeds);

// Paired base-vs-transductive runs of the full model.
struct TransductiveOutcome {
  uint64_t seed = 0;
  MetricsReport base;
  MetricsReport transductive;
};
std::vector<TransductiveOutcome> run_transductive(const DatasetSplit& split,
                                                  const ModelConfig& mcfg,
                                                  const TrainConfig& base,
                                                  const std::vector<uint64_t>& seeds);

// Label-reveal sweep: a seeded `ratio` sample of test loans joins the train
// pool with labels; evaluation skips them, and their realized profit is
// reported alongside the model's profit on the remainder.
struct RatioOutcome {
  double ratio = 0;
  uint64_t seed = 0;
  int n_revealed = 0;
  MetricsReport report;         // over the non-revealed test loans
  double revealed_profit = 0;   // realized profit of the revealed (approved) loans
  double total_profit = 0;      // report.policy.profit + revealed_profit
};
std::vector<RatioOutcome> run_label_ratio_sweep(const DatasetSplit& split,
                                                const ModelConfig& mcfg, const TrainConfig& base,
                                                const std::vector<double>& ratios,
                                                const std::vector<uint64_t>& seeds);

// ---- CSV emission (headers documented in the README) ----
std::string metrics_csv_header();
std::string metrics_csv_row(const RunOutcome& row);
void write_runs_csv(const std::vector<RunOutcome>& rows, const std::string& path);
void write_length_bins_csv(const LengthBinReport& rep, const std::string& path);
void write_transductive_csv(const std::vector<TransductiveOutcome>& rows,
                            const std::string& path);
void write_ratio_sweep_csv(const std::vector<RatioOutcome>& rows, const std::string& path);
void write_curves_csv(const TrainResult& result, const std::string& path);

}  // namespace fairlend
