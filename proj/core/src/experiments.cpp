#include "fairlend/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fairlend/io_util.hpp"

namespace fairlend {

namespace {

double nan_mean(const std::vector<double>& v) {
  double s = 0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) { s += x; ++n; }
  return n ? s / n : std::numeric_limits<double>::quiet_NaN();
}

std::vector<const RunOutcome*> rows_of(const std::vector<RunOutcome>& rows,
                                       const std::string& variant) {
  std::vector<const RunOutcome*> out;
  for (const auto& r : rows)
    if (r.variant == variant) out.push_back(&r);
  return out;
}

}  // namespace

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> kVariants = {
      {"ours", true, true},
      {"no-CL", false, true},
      {"no-DA", true, false},
      {"neither", false, false},
  };
  return kVariants;
}

AblationSummary run_ablation(const DatasetSplit& split, const ModelConfig& mcfg,
                             const TrainConfig& base, const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("run_ablation: empty seed list");
  AblationSummary out;
  for (const auto& variant : ablation_variants()) {
    double auc = 0, profit = 0, unif = 0, align = 0, dpi = 0, inc = 0, appr = 0;
    for (uint64_t seed : seeds) {
      TrainConfig tc = base;
      tc.seed = seed;
      tc.use_contrastive = variant.use_contrastive;
      tc.use_domain = variant.use_domain;
      TrainResult tr = train(split, mcfg, tc);
      MetricsReport rep = evaluate(split, tr.params, tr.scaler, tc.approve_threshold);
      auc += rep.auc;
      profit += rep.policy.profit;
      unif += rep.uniformity;
      align += rep.alignment;
      dpi += rep.policy.mean_dpi_approved;
      inc += rep.policy.mean_income_approved;
      appr += rep.policy.approval_rate;
      out.rows.push_back({variant.name, backbone_to_string(mcfg.backbone), seed, std::move(rep)});
    }
    const double n = static_cast<double>(seeds.size());
    out.mean_auc.push_back(auc / n);
    out.mean_profit.push_back(profit / n);
    out.mean_uniformity.push_back(unif / n);
    out.mean_alignment.push_back(align / n);
    out.mean_dpi.push_back(dpi / n);
    out.mean_income.push_back(inc / n);
    out.mean_approval.push_back(appr / n);
  }
  return out;
}

LengthBinReport run_length_bins(const AblationSummary& summary) {
  const auto ours = rows_of(summary.rows, "ours");
  const auto neither = rows_of(summary.rows, "neither");
  if (ours.empty() || neither.empty())
    throw std::invalid_argument("run_length_bins: summary lacks ours/neither rows");

  LengthBinReport rep;
  rep.labels = length_bin_labels();
  const size_t n_bins = rep.labels.size();
  std::vector<double> xs, ys;  // valid (bin index, delta) pairs for the slope
  for (size_t b = 0; b < n_bins; ++b) {
    double count = 0;
    std::vector<double> a_ours, a_nei;
    for (const auto* r : ours) {
      count += r->report.bin_counts[b];
      a_ours.push_back(r->report.bin_auc[b]);
    }
    for (const auto* r : neither) a_nei.push_back(r->report.bin_auc[b]);
    rep.mean_count.push_back(count / ours.size());
    rep.auc_ours.push_back(nan_mean(a_ours));
    rep.auc_neither.push_back(nan_mean(a_nei));
    const double d = rep.auc_ours[b] - rep.auc_neither[b];
    rep.delta.push_back(d);
    if (std::isfinite(d)) {
      xs.push_back(static_cast<double>(b));
      ys.push_back(d);
    } else {
      std::fprintf(stderr, "warning: length bin %s has no defined AUC; omitted from slope\n",
                   rep.labels[b].c_str());
    }
  }
  rep.delta_slope = xs.size() >= 2 ? least_squares_slope(xs, ys) : 0.0;
  return rep;
}

std::vector<RunOutcome> run_backbone_sweep(const DatasetSplit& split, const ModelConfig& mcfg,
                                           const TrainConfig& base,
                                           const std::vector<uint64_t>& seeds) {
  std::vector<RunOutcome> rows;
  for (Backbone b : {Backbone::transformer, Backbone::rnn, Backbone::lstm, Backbone::gru}) {
    ModelConfig mc = mcfg;
    mc.backbone = b;
    AblationSummary s = run_ablation(split, mc, base, seeds);
    rows.insert(rows.end(), std::make_move_iterator(s.rows.begin()),
                std::make_move_iterator(s.rows.end()));
  }
  return rows;
}

std::vector<TransductiveOutcome> run_transductive(const DatasetSplit& split,
                                                  const ModelConfig& mcfg,
                                                  const TrainConfig& base,
                                                  const std::vector<uint64_t>& seeds) {
  std::vector<TransductiveOutcome> out;
  for (uint64_t seed : seeds) {
    TransductiveOutcome row;
    row.seed = seed;
    TrainConfig tc = base;
    tc.seed = seed;
    tc.transductive = false;
    TrainResult tr = train(split, mcfg, tc);
    row.base = evaluate(split, tr.params, tr.scaler, tc.approve_threshold);
    tc.transductive = true;
    TrainResult tt = train(split, mcfg, tc);
    row.transductive = evaluate(split, tt.params, tt.scaler, tc.approve_threshold);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<RatioOutcome> run_label_ratio_sweep(const DatasetSplit& split,
                                                const ModelConfig& mcfg, const TrainConfig& base,
                                                const std::vector<double>& ratios,
                                                const std::vector<uint64_t>& seeds) {
  static const std::set<double> kAllowed = {0, 0.01, 0.05, 0.1, 0.2, 0.5};
  for (double r : ratios)
    if (!kAllowed.count(r))
      throw std::invalid_argument("run_label_ratio_sweep: unsupported ratio " + format_double(r));

  std::vector<RatioOutcome> out;
  for (double ratio : ratios) {
    for (uint64_t seed : seeds) {
      RatioOutcome row;
      row.ratio = ratio;
      row.seed = seed;
      // ratio 0 goes through the same path and must reproduce the base run.
      RevealResult rr = reveal_test_labels(split, ratio, seed);
      row.n_revealed = static_cast<int>(rr.revealed.size());
      TrainConfig tc = base;
      tc.seed = seed;
      TrainResult tr = train(rr.split, mcfg, tc);
      row.report = evaluate(rr.split, tr.params, tr.scaler, tc.approve_threshold, rr.revealed);
      for (const auto& [b, t] : rr.revealed) {
        const BorrowerHistory& h = split.test.at(static_cast<size_t>(b));
        row.revealed_profit +=
            loan_profit(h.labels.at(static_cast<size_t>(t)) == 1, h.applications[t].amount,
                        h.applications[t].annual_rate, h.applications[t].term_months);
      }
      row.total_profit = row.report.policy.profit + row.revealed_profit;
      out.push_back(std::move(row));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

std::string metrics_csv_header() {
  return csv_row({"variant", "backbone", "seed", "n_loans", "auc", "profit", "profit_per_loan",
                  "approval_rate", "default_rate_approved", "mean_dpi_approved",
                  "mean_income_approved", "mean_education_approved", "mean_homeownership_approved",
                  "alignment", "uniformity", "auc_length_slope"});
}

std::string metrics_csv_row(const RunOutcome& r) {
  const MetricsReport& m = r.report;
  return csv_row({r.variant, r.backbone, std::to_string(r.seed), std::to_string(m.n_loans),
                  format_double(m.auc), format_double(m.policy.profit),
                  format_double(m.policy.profit_per_loan), format_double(m.policy.approval_rate),
                  format_double(m.policy.default_rate_approved),
                  format_double(m.policy.mean_dpi_approved),
                  format_double(m.policy.mean_income_approved),
                  format_double(m.policy.mean_education_approved),
                  format_double(m.policy.mean_homeownership_approved),
                  format_double(m.alignment), format_double(m.uniformity),
                  format_double(m.auc_length_slope)});
}

void write_runs_csv(const std::vector<RunOutcome>& rows, const std::string& path) {
  std::ostringstream os;
  os << metrics_csv_header() << "\n";
  for (const auto& r : rows) os << metrics_csv_row(r) << "\n";
  atomic_write_file(path, os.str());
}

void write_length_bins_csv(const LengthBinReport& rep, const std::string& path) {
  std::ostringstream os;
  os << csv_row({"bin", "mean_count", "auc_ours", "auc_neither", "delta", "delta_slope"}) << "\n";
  for (size_t b = 0; b < rep.labels.size(); ++b)
    os << csv_row({rep.labels[b], format_double(rep.mean_count[b]),
                   format_double(rep.auc_ours[b]), format_double(rep.auc_neither[b]),
                   format_double(rep.delta[b]), format_double(rep.delta_slope)})
       << "\n";
  atomic_write_file(path, os.str());
}

void write_transductive_csv(const std::vector<TransductiveOutcome>& rows,
                            const std::string& path) {
  std::ostringstream os;
  os << csv_row({"seed", "auc_base", "auc_transductive", "profit_base", "profit_transductive",
                 "uniformity_base", "uniformity_transductive"})
     << "\n";
  for (const auto& r : rows)
    os << csv_row({std::to_string(r.seed), format_double(r.base.auc),
                   format_double(r.transductive.auc), format_double(r.base.policy.profit),
                   format_double(r.transductive.policy.profit), format_double(r.base.uniformity),
                   format_double(r.transductive.uniformity)})
       << "\n";
  atomic_write_file(path, os.str());
}

void write_ratio_sweep_csv(const std::vector<RatioOutcome>& rows, const std::string& path) {
  std::ostringstream os;
  os << csv_row({"ratio", "seed", "n_revealed", "n_evaluated", "auc", "model_profit",
                 "revealed_profit", "total_profit", "approval_rate"})
     << "\n";
  for (const auto& r : rows)
    os << csv_row({format_double(r.ratio), std::to_string(r.seed), std::to_string(r.n_revealed),
                   std::to_string(r.report.n_loans), format_double(r.report.auc),
                   format_double(r.report.policy.profit), format_double(r.revealed_profit),
                   format_double(r.total_profit), format_double(r.report.policy.approval_rate)})
       << "\n";
  atomic_write_file(path, os.str());
}

void write_curves_csv(const TrainResult& result, const std::string& path) {
  std::ostringstream os;
  os << csv_row({"step", "epoch", "total", "label", "domain", "contrastive", "domain_weight",
                 "n_contrastive_pairs"})
     << "\n";
  for (const auto& s : result.history)
    os << csv_row({std::to_string(s.step), std::to_string(s.epoch), format_double(s.total),
                   format_double(s.label), format_double(s.domain), format_double(s.contrastive),
                   format_double(s.domain_weight), std::to_string(s.n_contrastive_pairs)})
       << "\n";
  atomic_write_file(path, os.str());
}

}  // namespace fairlend
