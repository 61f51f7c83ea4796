#pragma once

#include <limits>
#include <string>
#include <vector>

#include "fairlend/tensor.hpp"

namespace fairlend {

// Rank-based ROC AUC with midrank tie handling (ties count one half).
// Labels are 1 = positive (repaid) / 0 = negative; both classes must occur.
double auc_roc(const std::vector<double>& scores, const std::vector<int>& labels);

// Profit of one approved loan: interest amount*rate*(term/12) when repaid
// (y = 1), loss of the principal when defaulted (y = 0).
double loan_profit(double amount, double annual_rate, int term_months, int y);

// Outcome of a threshold policy over a set of loans with known labels.
struct PolicyOutcome {
  int n_loans = 0;
  int n_approved = 0;
  double approval_rate = 0;
  double profit = 0;           // total over approved loans
  double profit_per_loan = 0;  // total / n_loans
  double default_rate_approved = 0;
  // Socioeconomic standing of who gets credit (the inclusion view).
  double mean_dpi_approved = 0;
  double mean_income_approved = 0;
  double mean_education_approved = 0;
  double mean_homeownership_approved = 0;
};

struct LoanRecord {
  double score = 0;  // model P(repay)
  int label = 0;     // realized outcome
  double amount = 0, annual_rate = 0;
  int term_months = 0;
  double dpi = 0, income = 0, education = 0, homeownership = 0;
};

// Approves score >= threshold. Zero approvals leave every approved-set
// statistic undefined and raise an error.
PolicyOutcome evaluate_policy(const std::vector<LoanRecord>& loans, double threshold);

// Mean squared distance between paired rows of two views (lower = views of
// the same item agree). Antipodal unit rows give exactly 4.
double alignment_metric(const Tensor& view_a, const Tensor& view_b);

// Mean of exp(-2 ||f_i - f_j||^2) over unordered row pairs (lower = embeddings
// spread more evenly on the sphere). Requires at least two rows.
double uniformity_metric(const Tensor& f);

// Principal components of the rows of x via a cyclic Jacobi eigensolver on
// the column covariance. Each component's largest-magnitude entry is made
// positive so the decomposition is sign-deterministic.
struct PcaResult {
  Tensor components;  // [d, k], columns are unit eigenvectors
  std::vector<double> explained_variance_ratio;
  Tensor projected;  // [n, k] centered projections
};
PcaResult pca_project(const Tensor& x, int k);  // k above the data rank is an error

// History-length bins reported throughout: {1}, {2,3}, {4..6}, {7..10}, {>10}.
int length_bin(int t_len);
const std::vector<std::string>& length_bin_labels();

// Ordinary least-squares slope of y on x; needs >= 2 points and non-constant x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

struct MetricsReport {
  int n_loans = 0;
  double auc = std::numeric_limits<double>::quiet_NaN();
  PolicyOutcome policy;
  double alignment = std::numeric_limits<double>::quiet_NaN();
  double uniformity = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> bin_counts;
  std::vector<double> bin_auc;  // NaN where a bin is empty or one-class
  double auc_length_slope = std::numeric_limits<double>::quiet_NaN();

  std::string to_json() const;  // NaN serializes as null
};

}  // namespace fairlend
