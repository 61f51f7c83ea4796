#include "fairlend/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fairlend/io_util.hpp"

using nlohmann::json;

namespace fairlend {

namespace {

// Generator shape constants. The observable aggregates they target (approval
// rate, repeat share, Table-1-style demographic gaps, a realistic default
// rate) are covered by tests; the individual constants are free knobs.
constexpr double kSocioToCredit = 0.5;    // u -> creditworthiness weight
constexpr double kIdioCreditStd = 0.9;    // idiosyncratic creditworthiness spread
constexpr double kDefaultBase = -0.25;    // logit of default prob at c = 0
constexpr double kDefaultSlope = 1.5;     // logit decrease per unit c
constexpr double kScreenSocioW = 0.8;     // socio weight inside the screener (x bias)
constexpr double kScreenProxyW = 1.0;     // weight of the noisy idiosyncratic read
constexpr double kScreenHistW = 0.25;     // weight of past repayment performance
constexpr double kProxyNoiseStd = 1.1;
constexpr double kScreenNoiseStd = 0.5;
constexpr double kRepeatGeomP = 0.3115;   // extra-loan count ~ Geom(p): mean 2.21
constexpr double kOverdueCap = 180.0;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double ordinal(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, std::round(v)));
}

// Scalar summary of how well one approved loan was repaid; feeds the
// screener's history term. Non-default, cooperative, unassisted, on-time
// repayment scores high.
double repayment_performance(int outcome, const RepaymentRecord& rep) {
  return 1.4 * (outcome - 0.5) + 0.4 * (rep.positive_attitude - 0.6) - 0.4 * rep.assisted -
         rep.overdue_days / kOverdueCap;
}

BorrowerScenario draw_scenario(CounterRng& rng, const GeneratorConfig& cfg, bool in_test) {
  BorrowerScenario sc;
  sc.socio_factor = rng.normal() - (in_test ? cfg.test_drift : 0.0);
  const double u = sc.socio_factor;

  sc.demographics.living_city_dpi = 40000.0 * std::exp(0.25 * u + 0.15 * rng.normal());
  sc.demographics.monthly_income = ordinal(3.4 + 1.1 * u + 0.5 * rng.normal(), 1, 7);
  sc.demographics.education = ordinal(2.3 + 0.5 * u + 0.6 * rng.normal(), 1, 5);
  sc.demographics.homeownership = rng.bernoulli(sigmoid_d(-1.65 + 0.8 * u)) ? 1.0 : 0.0;
  sc.demographics.cov1 = 0.6 * u + 0.8 * rng.normal();
  sc.demographics.cov2 = 0.3 * u + 0.95 * rng.normal();

  sc.idio_credit = kIdioCreditStd * rng.normal();
  sc.creditworthiness = kSocioToCredit * u + sc.idio_credit;
  const double c = sc.creditworthiness;

  int T = 1;
  if (rng.bernoulli(cfg.repeat_fraction)) {
    // 2 + Geometric extra applications: repeat applicants average 4.21 loans.
    const double une = rng.uniform();
    const int extra = static_cast<int>(std::floor(std::log1p(-une) / std::log1p(-kRepeatGeomP)));
    T = std::min(cfg.max_length, 2 + extra);
  }

  for (int t = 0; t < T; ++t) {
    LoanApplication app;
    app.amount = std::exp(std::log(450.0) - 0.045 + 0.3 * rng.normal());
    app.annual_rate = std::min(0.99, std::max(0.50, 0.92 + 0.04 * rng.normal()));
    app.term_months = rng.uniform_int(3, 8);
    sc.applications.push_back(app);

    int y = rng.bernoulli(sigmoid_d(kDefaultBase - kDefaultSlope * c)) ? 0 : 1;
    if (rng.bernoulli(cfg.label_noise)) y = 1 - y;
    sc.true_outcome.push_back(y);

    RepaymentRecord rep;
    if (y == 0) {
      // Defaulted: at least 90 days overdue by the platform's definition.
      rep.overdue_days = std::min(kOverdueCap, 90.0 - 40.0 * std::log1p(-rng.uniform()));
      rep.positive_attitude = clamp01(0.35 + 0.05 * c + 0.2 * rng.normal());
      rep.assisted = clamp01(0.40 - 0.05 * c + 0.2 * rng.normal());
    } else {
      const bool late = rng.bernoulli(sigmoid_d(-0.6 - 0.8 * c));
      rep.overdue_days = late ? rng.uniform(1.0, 30.0) : 0.0;
      rep.positive_attitude = clamp01(0.85 + 0.04 * c + 0.1 * rng.normal());
      rep.assisted = clamp01(0.06 - 0.02 * c + 0.06 * rng.normal());
    }
    sc.would_repay.push_back(rep);

    sc.proxy_noise.push_back(kProxyNoiseStd * rng.normal());
    sc.screen_noise.push_back(kScreenNoiseStd * rng.normal());
  }
  return sc;
}

BorrowerHistory materialize(const BorrowerScenario& sc, const std::vector<int>& approvals,
                            int id) {
  const int T = static_cast<int>(sc.applications.size());
  BorrowerHistory h;
  h.id = id;
  h.demographics = sc.demographics;
  h.applications = sc.applications;
  h.latent_creditworthiness = sc.creditworthiness;
  h.labels.resize(T);
  h.observability.resize(T);
  h.repayments.resize(T);
  h.label_in_train.resize(T);
  for (int t = 0; t < T; ++t) {
    h.labels[t] = approvals[t] ? sc.true_outcome[t] : -1;
    h.observability[t] = (t > 0 && h.labels[t - 1] != -1) ? 1 : 0;
    h.repayments[t] = h.observability[t] ? sc.would_repay[t - 1] : RepaymentRecord{};
    h.label_in_train[t] = h.labels[t] != -1 ? 1 : 0;
  }
  return h;
}

size_t loan_count(const std::vector<BorrowerScenario>& scs) {
  size_t n = 0;
  for (const auto& s : scs) n += s.applications.size();
  return n;
}

}  // namespace

std::vector<int> historical_screen(const BorrowerScenario& sc, double threshold,
                                   double bias_strength) {
  const int T = static_cast<int>(sc.applications.size());
  std::vector<int> approvals(T, 0);
  double perf_sum = 0.0;
  int perf_n = 0;
  for (int t = 0; t < T; ++t) {
    const double hist = perf_n ? perf_sum / perf_n : 0.0;
    const double score = bias_strength * kScreenSocioW * sc.socio_factor +
                         kScreenProxyW * (sc.idio_credit + sc.proxy_noise[t]) +
                         kScreenHistW * hist + sc.screen_noise[t];
    approvals[t] = score >= threshold ? 1 : 0;
    if (approvals[t]) {
      perf_sum += repayment_performance(sc.true_outcome[t], sc.would_repay[t]);
      ++perf_n;
    }
  }
  return approvals;
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("GeneratorConfig." + field + ": " + why);
  };
  if (n_borrowers < 2) fail("n_borrowers", "must be >= 2");
  if (repeat_fraction < 0 || repeat_fraction > 1) fail("repeat_fraction", "must be in [0,1]");
  if (!(target_approval_rate > 0 && target_approval_rate < 1))
    fail("target_approval_rate", "must be in (0,1)");
  if (bias_strength < 0) fail("bias_strength", "must be >= 0");
  if (label_noise < 0 || label_noise >= 0.5) fail("label_noise", "must be in [0,0.5)");
  if (!(test_fraction > 0 && test_fraction < 1)) fail("test_fraction", "must be in (0,1)");
  if (max_length < 1) fail("max_length", "must be >= 1");
}

std::string GeneratorConfig::canonical_json() const {
  json j;
  j["n_borrowers"] = n_borrowers;
  j["repeat_fraction"] = repeat_fraction;
  j["target_approval_rate"] = target_approval_rate;
  j["bias_strength"] = bias_strength;
  j["label_noise"] = label_noise;
  j["test_fraction"] = test_fraction;
  j["test_drift"] = test_drift;
  j["max_length"] = max_length;
  j["seed"] = seed;
  return j.dump();  // keys serialize alphabetically: stable for hashing
}

DatasetSplit generate_population(const GeneratorConfig& cfg) {
  cfg.validate();
  const int n_test = static_cast<int>(std::lround(cfg.n_borrowers * cfg.test_fraction));
  if (n_test < 1 || n_test >= cfg.n_borrowers) {
    throw std::invalid_argument("GeneratorConfig.test_fraction: leaves an empty split");
  }
  const int n_train = cfg.n_borrowers - n_test;

  CounterRng root(cfg.seed);
  std::vector<BorrowerScenario> train_sc, test_sc;
  train_sc.reserve(n_train);
  test_sc.reserve(n_test);
  for (int i = 0; i < cfg.n_borrowers; ++i) {
    const bool in_test = i >= n_train;
    CounterRng stream = root.fork(static_cast<uint64_t>(i));
    (in_test ? test_sc : train_sc).push_back(draw_scenario(stream, cfg, in_test));
  }

  // Calibrate the screener threshold to the target approval rate on the train
  // population. The screened world is a deterministic function of the
  // threshold (all randomness is pre-drawn), so plain bisection applies.
  const double total = static_cast<double>(loan_count(train_sc));
  auto rate_at = [&](double th) {
    size_t approved = 0;
    for (const auto& sc : train_sc) {
      const auto a = historical_screen(sc, th, cfg.bias_strength);
      for (int v : a) approved += static_cast<size_t>(v);
    }
    return static_cast<double>(approved) / total;
  };
  double lo = -20.0, hi = 20.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rate_at(mid) > cfg.target_approval_rate) {
      lo = mid;  // too many approvals: raise the bar
    } else {
      hi = mid;
    }
  }
  const double threshold = 0.5 * (lo + hi);

  DatasetSplit split;
  split.config = cfg;
  split.train.reserve(n_train);
  split.test.reserve(n_test);
  for (int i = 0; i < n_train; ++i) {
    const auto approvals = historical_screen(train_sc[i], threshold, cfg.bias_strength);
    split.train.push_back(materialize(train_sc[i], approvals, i));
  }
  for (int i = 0; i < n_test; ++i) {
    // The evaluation split mimics the approve-all field experiment.
    const std::vector<int> all(test_sc[i].applications.size(), 1);
    split.test.push_back(materialize(test_sc[i], all, n_train + i));
  }
  return split;
}

// ---------------------------------------------------------------------------
// Scaling and batching
// ---------------------------------------------------------------------------

namespace {

std::vector<double> raw_sequence_row(const LoanApplication& app, const RepaymentRecord& rep) {
  return {app.amount,
          app.annual_rate,
          static_cast<double>(app.term_months),
          std::min(rep.overdue_days, kOverdueCap) / kOverdueCap,
          rep.positive_attitude,
          rep.assisted};
}

void fit_columns(const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
                 std::vector<double>& stdev) {
  const size_t cols = rows.empty() ? 0 : rows[0].size();
  mean.assign(cols, 0.0);
  stdev.assign(cols, 1.0);
  if (rows.empty()) return;
  for (const auto& r : rows)
    for (size_t c = 0; c < cols; ++c) mean[c] += r[c];
  for (size_t c = 0; c < cols; ++c) mean[c] /= static_cast<double>(rows.size());
  for (size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (const auto& r : rows) acc += (r[c] - mean[c]) * (r[c] - mean[c]);
    const double sd = std::sqrt(acc / static_cast<double>(rows.size()));
    stdev[c] = sd > 0.0 ? sd : 1.0;  // constant column: leave centered values at 0
  }
}

}  // namespace

FeatureScaler FeatureScaler::fit(const std::vector<BorrowerHistory>& train) {
  if (train.empty()) throw std::invalid_argument("FeatureScaler::fit: empty train split");
  std::vector<std::vector<double>> seq_rows, demo_rows;
  for (const auto& h : train) {
    demo_rows.push_back(h.demographics.features());
    for (int t = 0; t < h.length(); ++t)
      seq_rows.push_back(raw_sequence_row(h.applications[t], h.repayments[t]));
  }
  FeatureScaler s;
  fit_columns(seq_rows, s.seq_mean, s.seq_std);
  fit_columns(demo_rows, s.demo_mean, s.demo_std);
  return s;
}

std::vector<double> FeatureScaler::scale_sequence_row(const LoanApplication& app,
                                                      const RepaymentRecord& rep) const {
  std::vector<double> row = raw_sequence_row(app, rep);
  for (size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - seq_mean[c]) / seq_std[c];
  return row;
}

std::vector<double> FeatureScaler::scale_demographics(const DemographicVector& d) const {
  std::vector<double> row = d.features();
  for (size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - demo_mean[c]) / demo_std[c];
  return row;
}

Batch build_batch(const std::vector<const BorrowerHistory*>& histories, int max_len,
                  const FeatureScaler& scaler) {
  if (histories.empty()) throw std::invalid_argument("build_batch: empty history list");
  if (max_len < 1) throw std::invalid_argument("build_batch: max_len must be >= 1");
  const int B = static_cast<int>(histories.size());
  const int L = max_len;

  Batch b;
  b.n_borrowers = B;
  b.max_len = L;
  b.C = Tensor::zeros({B, L, DemographicVector::kFeatureCount});
  b.S = Tensor::zeros({B, L});
  b.D = Tensor::zeros({B, DemographicVector::kFeatureCount});
  b.Y = Tensor::full({B, L}, -1.0);
  b.domain_tags = Tensor::zeros({B, L});
  b.attention_mask = Tensor::zeros({B, L});
  b.position_ids = Tensor::zeros({B, L});
  b.lengths.resize(B);

  for (int i = 0; i < B; ++i) {
    const BorrowerHistory& h = *histories[i];
    int T = h.length();
    int first = 0;
    if (T > L) {
      first = T - L;  // keep the most recent max_len loans
      T = L;
      b.truncated = true;
    }
    b.lengths[i] = T;
    const auto demo = scaler.scale_demographics(h.demographics);
    for (int c = 0; c < DemographicVector::kFeatureCount; ++c)
      (*b.D.data)[static_cast<size_t>(i) * DemographicVector::kFeatureCount + c] = demo[c];
    for (int t = 0; t < T; ++t) {
      const int src = first + t;
      for (int v : {h.observability[src], h.label_in_train[src]}) {
        if (v != 0 && v != 1)
          throw std::invalid_argument("build_batch: S/label flags must be 0 or 1");
      }
      const auto row = scaler.scale_sequence_row(h.applications[src], h.repayments[src]);
      for (int c = 0; c < DemographicVector::kFeatureCount; ++c)
        (*b.C.data)[(static_cast<size_t>(i) * L + t) * DemographicVector::kFeatureCount + c] =
            row[c];
      const size_t k = static_cast<size_t>(i) * L + t;
      (*b.S.data)[k] = h.observability[src];
      (*b.Y.data)[k] = h.labels[src];
      (*b.domain_tags.data)[k] = h.label_in_train[src];
      (*b.attention_mask.data)[k] = 1.0;
      (*b.position_ids.data)[k] = t;
    }
  }
  return b;
}

Batch build_batch(const std::vector<BorrowerHistory>& histories, int max_len,
                  const FeatureScaler& scaler) {
  std::vector<const BorrowerHistory*> ptrs;
  ptrs.reserve(histories.size());
  for (const auto& h : histories) ptrs.push_back(&h);
  return build_batch(ptrs, max_len, scaler);
}

// ---------------------------------------------------------------------------
// Label reveal
// ---------------------------------------------------------------------------

RevealResult reveal_test_labels(const DatasetSplit& split, double ratio, uint64_t seed) {
  if (ratio < 0.0 || ratio > 0.5) {
    throw std::invalid_argument("reveal_test_labels: ratio must be in [0, 0.5], got " +
                                std::to_string(ratio));
  }
  RevealResult res;
  res.split = split;
  if (ratio == 0.0) return res;

  std::vector<std::pair<int, int>> all;
  for (int bi = 0; bi < static_cast<int>(split.test.size()); ++bi)
    for (int t = 0; t < split.test[bi].length(); ++t) all.emplace_back(bi, t);

  CounterRng rng(hash_combine(seed, 0x72657665616cULL));  // independent of generation stream
  rng.shuffle(all);
  const size_t k = static_cast<size_t>(std::llround(ratio * static_cast<double>(all.size())));
  all.resize(k);
  std::sort(all.begin(), all.end());
  res.revealed = all;

  for (const auto& [bi, t] : all) {
    const BorrowerHistory& src = split.test[bi];
    BorrowerHistory copy;
    copy.id = src.id;
    copy.demographics = src.demographics;
    copy.latent_creditworthiness = src.latent_creditworthiness;
    copy.applications.assign(src.applications.begin(), src.applications.begin() + t + 1);
    copy.repayments.assign(src.repayments.begin(), src.repayments.begin() + t + 1);
    copy.labels.assign(src.labels.begin(), src.labels.begin() + t + 1);
    copy.observability.assign(src.observability.begin(), src.observability.begin() + t + 1);
    // Only the revealed position may feed the supervised loss; the earlier
    // positions travel along as observed context.
    copy.label_in_train.assign(static_cast<size_t>(t) + 1, 0);
    copy.label_in_train[static_cast<size_t>(t)] = 1;
    res.split.train.push_back(std::move(copy));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

json borrower_to_json(const BorrowerHistory& h) {
  json j;
  j["id"] = h.id;
  j["demographics"] = {{"living_city_dpi", h.demographics.living_city_dpi},
                       {"monthly_income", h.demographics.monthly_income},
                       {"education", h.demographics.education},
                       {"homeownership", h.demographics.homeownership},
                       {"cov1", h.demographics.cov1},
                       {"cov2", h.demographics.cov2}};
  j["applications"] = json::array();
  for (const auto& a : h.applications)
    j["applications"].push_back(
        {{"amount", a.amount}, {"annual_rate", a.annual_rate}, {"term_months", a.term_months}});
  j["repayments"] = json::array();
  for (const auto& r : h.repayments)
    j["repayments"].push_back({{"overdue_days", r.overdue_days},
                               {"positive_attitude", r.positive_attitude},
                               {"assisted", r.assisted}});
  j["labels"] = h.labels;
  j["observability"] = h.observability;
  j["label_in_train"] = h.label_in_train;
  j["latent_creditworthiness"] = h.latent_creditworthiness;
  return j;
}

BorrowerHistory borrower_from_json(const json& j) {
  BorrowerHistory h;
  h.id = j.at("id").get<int>();
  const json& d = j.at("demographics");
  h.demographics.living_city_dpi = d.at("living_city_dpi").get<double>();
  h.demographics.monthly_income = d.at("monthly_income").get<double>();
  h.demographics.education = d.at("education").get<double>();
  h.demographics.homeownership = d.at("homeownership").get<double>();
  h.demographics.cov1 = d.at("cov1").get<double>();
  h.demographics.cov2 = d.at("cov2").get<double>();
  for (const json& a : j.at("applications")) {
    h.applications.push_back({a.at("amount").get<double>(), a.at("annual_rate").get<double>(),
                              a.at("term_months").get<int>()});
  }
  for (const json& r : j.at("repayments")) {
    h.repayments.push_back({r.at("overdue_days").get<double>(),
                            r.at("positive_attitude").get<double>(),
                            r.at("assisted").get<double>()});
  }
  h.labels = j.at("labels").get<std::vector<int>>();
  h.observability = j.at("observability").get<std::vector<int>>();
  h.label_in_train = j.at("label_in_train").get<std::vector<int>>();
  h.latent_creditworthiness = j.at("latent_creditworthiness").get<double>();
  const size_t T = h.applications.size();
  if (T == 0 || h.repayments.size() != T || h.labels.size() != T ||
      h.observability.size() != T || h.label_in_train.size() != T) {
    throw std::runtime_error("sequence fields have mismatched lengths");
  }
  return h;
}

void save_jsonl(const std::vector<BorrowerHistory>& hs, const std::string& path) {
  std::string out;
  for (const auto& h : hs) {
    out += borrower_to_json(h).dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<BorrowerHistory> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<BorrowerHistory> hs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      hs.push_back(borrower_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return hs;
}

json config_to_json(const GeneratorConfig& c) {
  return json::parse(c.canonical_json());
}

GeneratorConfig config_from_json(const json& j) {
  GeneratorConfig c;
  c.n_borrowers = j.at("n_borrowers").get<int>();
  c.repeat_fraction = j.at("repeat_fraction").get<double>();
  c.target_approval_rate = j.at("target_approval_rate").get<double>();
  c.bias_strength = j.at("bias_strength").get<double>();
  c.label_noise = j.at("label_noise").get<double>();
  c.test_fraction = j.at("test_fraction").get<double>();
  c.test_drift = j.at("test_drift").get<double>();
  c.max_length = j.at("max_length").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

}  // namespace

void save_split(const DatasetSplit& split, const std::string& dir) {
  ensure_dir(dir);
  save_jsonl(split.train, dir + "/train.jsonl");
  save_jsonl(split.test, dir + "/test.jsonl");
  atomic_write_file(dir + "/generator_config.json", config_to_json(split.config).dump(2) + "\n");
}

DatasetSplit load_split(const std::string& dir) {
  DatasetSplit s;
  s.train = load_jsonl(dir + "/train.jsonl");
  s.test = load_jsonl(dir + "/test.jsonl");
  const std::string cfg_path = dir + "/generator_config.json";
  try {
    s.config = config_from_json(json::parse(read_file(cfg_path)));
  } catch (const std::exception& e) {
    throw std::runtime_error(cfg_path + ": " + e.what());
  }
  return s;
}

}  // namespace fairlend
