#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairlend/rng.hpp"
#include "fairlend/tensor.hpp"

namespace fairlend {

// ---------------------------------------------------------------------------
// Domain records
// ---------------------------------------------------------------------------

struct DemographicVector {
  double living_city_dpi = 0;     // disposable personal income of the home city
  double monthly_income = 0;      // ordinal level, roughly 1..7
  double education = 0;           // ordinal level, roughly 1..5
  double homeownership = 0;       // {0,1}
  double cov1 = 0, cov2 = 0;      // generic continuous covariates

  std::vector<double> features() const {
    return {living_city_dpi, monthly_income, education, homeownership, cov1, cov2};
  }
  static constexpr int kFeatureCount = 6;
};

struct LoanApplication {
  double amount = 0;        // currency units
  double annual_rate = 0;   // in (0,1)
  int term_months = 0;      // 3..8
};

struct RepaymentRecord {
  double overdue_days = 0;       // >= 0, capped at 180 by the generator
  double positive_attitude = 0;  // proportion in [0,1]
  double assisted = 0;           // proportion in [0,1]

  bool is_zero() const { return overdue_days == 0 && positive_attitude == 0 && assisted == 0; }
};

// One applicant: demographics plus aligned application / repayment / label /
// observability sequences. repayments[t] describes loan t-1; labels use
// 1 = approved & non-default, 0 = approved & default, -1 = not approved.
// label_in_train marks the positions whose labels the supervised loss may use
// (equal to label != -1 for generated data; the reveal mechanism narrows it).
struct BorrowerHistory {
  int id = 0;
  DemographicVector demographics;
  std::vector<LoanApplication> applications;
  std::vector<RepaymentRecord> repayments;
  std::vector<int> labels;         // Y_it
  std::vector<int> observability;  // S_it = 1[Y_{i,t-1} != -1], S_i1 = 0
  std::vector<int> label_in_train;
  double latent_creditworthiness = 0;  // generator-private; never a model input

  int length() const { return static_cast<int>(applications.size()); }
};

// Generator knobs. Defaults are calibrated to the published aggregates:
// 43.68% approval, 38.37% repeat applicants, mean sequence length 2.23.
struct GeneratorConfig {
  int n_borrowers = 4000;
  double repeat_fraction = 0.3837;
  double target_approval_rate = 0.4368;
  double bias_strength = 1.0;   // how strongly the screener favors socioeconomics
  double label_noise = 0.05;    // probability an observed default label flips
  double test_fraction = 0.25;  // share of borrowers placed in the approve-all test split
  // Shift subtracted from the test split's socioeconomic factor: the deployment
  // cohort looks poorer on observables than the historical book (the platform
  // expanding downmarket), which is where a socioeconomics-leaning screener
  // under-lends.
  double test_drift = 0.9;
  int max_length = 15;          // hard cap on applications per borrower
  uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument naming the bad field
  std::string canonical_json() const;
};

struct DatasetSplit {
  std::vector<BorrowerHistory> train;
  std::vector<BorrowerHistory> test;
  GeneratorConfig config;
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

// Pre-drawn randomness for one borrower: everything the screener's decisions
// do NOT influence, so that threshold calibration can re-screen the same
// population deterministically.
struct BorrowerScenario {
  DemographicVector demographics;
  double socio_factor = 0;       // latent u behind every demographic field
  double idio_credit = 0;        // creditworthiness component independent of u
  double creditworthiness = 0;   // c = a*u + idio_credit
  std::vector<LoanApplication> applications;
  std::vector<int> true_outcome;           // per loan: 1 non-default, 0 default (after label noise)
  std::vector<RepaymentRecord> would_repay;  // repayment of loan t if it were approved
  std::vector<double> proxy_noise;         // screener's per-application assessment noise
  std::vector<double> screen_noise;        // residual evaluator noise
};

// Sequentially screens one applicant's scenario: the score combines the
// socioeconomic index (scaled by bias_strength), a noisy read of the
// applicant's idiosyncratic creditworthiness, and the average repayment
// performance on previously approved loans. Returns one approve(1)/reject(0)
// per application.
std::vector<int> historical_screen(const BorrowerScenario& scenario, double threshold,
                                   double bias_strength);

// Draws the full population, calibrates the screener threshold by bisection to
// the target approval rate on the train split, and materializes both splits.
// Pure function of the config.
DatasetSplit generate_population(const GeneratorConfig& cfg);

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

// Per-column affine normalization fitted on the train split only.
struct FeatureScaler {
  std::vector<double> seq_mean, seq_std;    // 6 sequence-feature columns
  std::vector<double> demo_mean, demo_std;  // 6 demographic columns

  static FeatureScaler fit(const std::vector<BorrowerHistory>& train);
  // Overdue days are capped at 180 and rescaled to [0,1] before z-scoring.
  std::vector<double> scale_sequence_row(const LoanApplication& app,
                                         const RepaymentRecord& rep) const;
  std::vector<double> scale_demographics(const DemographicVector& d) const;
};

// Padded batch tensors. All tensors are plain inputs (requires_grad=false);
// shapes use B = histories, L = max_len.
struct Batch {
  int n_borrowers = 0;
  int max_len = 0;
  Tensor C;               // [B, L, 6] z-scored application+repayment features
  Tensor S;               // [B, L] observability in {0,1}
  Tensor D;               // [B, 6] z-scored demographics
  Tensor Y;               // [B, L] labels in {-1, 0, 1}
  Tensor domain_tags;     // [B, L] 1 = labeled/source domain
  Tensor attention_mask;  // [B, L] 1 = real position, 0 = padding
  Tensor position_ids;    // [B, L] 0..T-1 within the borrower
  bool truncated = false; // any sequence cut down to max_len (oldest end dropped)
  std::vector<int> lengths;  // clamped T per borrower
};

Batch build_batch(const std::vector<const BorrowerHistory*>& histories, int max_len,
                  const FeatureScaler& scaler);
Batch build_batch(const std::vector<BorrowerHistory>& histories, int max_len,
                  const FeatureScaler& scaler);

// ---------------------------------------------------------------------------
// Semi-supervised label reveal (the "randomly approve a small test ratio" arm)
// ---------------------------------------------------------------------------

struct RevealResult {
  DatasetSplit split;  // train extended with revealed loans; test untouched
  // (test-borrower index, position) of every revealed loan; AUC must skip these.
  std::vector<std::pair<int, int>> revealed;
};

// Uniformly samples `ratio` of test loans. Each selected loan joins the train
// pool as a truncated copy of its borrower's history ending at that loan, with
// only the selected position marked label_in_train (earlier positions stay
// context-only so their labels never enter the supervised loss).
RevealResult reveal_test_labels(const DatasetSplit& split, double ratio, uint64_t seed);

// ---------------------------------------------------------------------------
// Persistence: JSONL, one borrower per line, plus the generator config
// ---------------------------------------------------------------------------

void save_split(const DatasetSplit& split, const std::string& dir);
DatasetSplit load_split(const std::string& dir);  // parse errors name file, line, field

}  // namespace fairlend
