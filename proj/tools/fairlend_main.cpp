// fairlend: command-line driver for the selective-labels lending experiments.
//
// Subcommands: generate, train, evaluate, ablate, backbones, transductive,
// sweep, embed. Every run reads an optional JSON config file, applies CLI
// flag overrides on top (flags > file > defaults), and writes its artifacts
// under a directory named by the FNV-1a hash of the effective config, with an
// atomically written manifest.json recording enough to reproduce the run.
//
// Exit codes: 0 success, 2 usage/config error, 3 non-finite loss during
// training (the offending optimizer step is printed).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairlend/data.hpp"
#include "fairlend/experiments.hpp"
#include "fairlend/io_util.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/svg.hpp"
#include "fairlend/trainer.hpp"

using json = nlohmann::json;
using namespace fairlend;

namespace {

// ---------------------------------------------------------------------------
// Effective configuration: defaults < config file < CLI flags
// ---------------------------------------------------------------------------

struct CliConfig {
  GeneratorConfig gen;
  ModelConfig model;
  TrainConfig train;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<double> ratios = {0, 0.01};
  std::string data_dir;        // dataset directory (generate writes, others read)
  std::string out_root = "runs";
  bool write_svg = false;
};

[[noreturn]] void config_error(const std::string& msg) { throw std::invalid_argument(msg); }

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end())
      config_error("config: unknown key '" + key + "' in section '" + section + "'");
  }
}

void apply_generator_json(const json& j, GeneratorConfig& g) {
  check_keys(j, "generator",
             {"n_borrowers", "repeat_fraction", "target_approval_rate", "bias_strength",
              "label_noise", "test_fraction", "test_drift", "max_length", "seed"});
  read_key(j, "n_borrowers", g.n_borrowers);
  read_key(j, "repeat_fraction", g.repeat_fraction);
  read_key(j, "target_approval_rate", g.target_approval_rate);
  read_key(j, "bias_strength", g.bias_strength);
  read_key(j, "label_noise", g.label_noise);
  read_key(j, "test_fraction", g.test_fraction);
  read_key(j, "test_drift", g.test_drift);
  read_key(j, "max_length", g.max_length);
  read_key(j, "seed", g.seed);
}

void apply_model_json(const json& j, ModelConfig& m) {
  check_keys(j, "model",
             {"hidden_dim", "n_layers", "ff_dim", "dropout_keep", "max_seq_len", "backbone",
              "n_demographic_features", "n_sequence_features", "grl_lambda", "layer_norm_eps"});
  read_key(j, "hidden_dim", m.hidden_dim);
  read_key(j, "n_layers", m.n_layers);
  read_key(j, "ff_dim", m.ff_dim);
  read_key(j, "dropout_keep", m.dropout_keep);
  read_key(j, "max_seq_len", m.max_seq_len);
  if (j.contains("backbone")) m.backbone = backbone_from_string(j.at("backbone").get<std::string>());
  read_key(j, "n_demographic_features", m.n_demographic_features);
  read_key(j, "n_sequence_features", m.n_sequence_features);
  read_key(j, "grl_lambda", m.grl_lambda);
  read_key(j, "layer_norm_eps", m.layer_norm_eps);
}

void apply_train_json(const json& j, TrainConfig& t) {
  check_keys(j, "train",
             {"batch_size", "epochs", "learning_rate", "beta1", "beta2", "use_contrastive",
              "use_domain", "transductive", "cl_max_pairs", "approve_threshold", "seed",
              "w_label", "w_contrastive", "w_domain_max", "gamma", "tau"});
  read_key(j, "batch_size", t.batch_size);
  read_key(j, "epochs", t.epochs);
  read_key(j, "learning_rate", t.learning_rate);
  read_key(j, "beta1", t.beta1);
  read_key(j, "beta2", t.beta2);
  read_key(j, "use_contrastive", t.use_contrastive);
  read_key(j, "use_domain", t.use_domain);
  read_key(j, "transductive", t.transductive);
  read_key(j, "cl_max_pairs", t.cl_max_pairs);
  read_key(j, "approve_threshold", t.approve_threshold);
  read_key(j, "seed", t.seed);
  read_key(j, "w_label", t.loss.w_label);
  read_key(j, "w_contrastive", t.loss.w_contrastive);
  read_key(j, "w_domain_max", t.loss.w_domain_max);
  read_key(j, "gamma", t.loss.gamma);
  read_key(j, "tau", t.loss.tau);
}

// Accepts either a plain config file or a previously written manifest (whose
// "config" object is then used), so a run can be replayed from its manifest.
void apply_config_file(const std::string& path, CliConfig& c) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    config_error("config " + path + ": " + e.what());
  }
  if (j.contains("command") && j.contains("config")) j = j.at("config");
  check_keys(j, "<top>", {"generator", "model", "train", "seeds", "ratios", "data", "out_root"});
  if (j.contains("generator")) apply_generator_json(j.at("generator"), c.gen);
  if (j.contains("model")) apply_model_json(j.at("model"), c.model);
  if (j.contains("train")) apply_train_json(j.at("train"), c.train);
  read_key(j, "seeds", c.seeds);
  read_key(j, "ratios", c.ratios);
  read_key(j, "data", c.data_dir);
  read_key(j, "out_root", c.out_root);
}

json config_snapshot(const CliConfig& c) {
  json j;
  j["generator"] = json::parse(c.gen.canonical_json());
  j["model"] = json::parse(c.model.canonical_json());
  j["train"] = json::parse(c.train.canonical_json());
  j["seeds"] = c.seeds;
  j["ratios"] = c.ratios;
  j["data"] = c.data_dir;
  j["out_root"] = c.out_root;
  return j;
}

// Run directory: <out_root>/<command>-<16-hex config hash>. Identical
// command+config always lands in the same directory.
std::string run_dir_for(const std::string& command, const CliConfig& c) {
  const std::string canon = command + ":" + config_snapshot(c).dump();
  const std::string dir = c.out_root + "/" + command + "-" + hex64(fnv1a(canon));
  ensure_dir(dir);
  return dir;
}

struct ManifestWriter {
  std::string command, dir, started;
  json outputs = json::object();
  json metrics = json::object();

  ManifestWriter(std::string cmd, std::string d)
      : command(std::move(cmd)), dir(std::move(d)), started(timestamp_now()) {}

  void add_output(const std::string& kind, const std::string& path) { outputs[kind] = path; }

  void finish(const CliConfig& c) const {
    json m;
    m["command"] = command;
    m["config"] = config_snapshot(c);
    m["started"] = started;
    m["finished"] = timestamp_now();
    m["outputs"] = outputs;
    m["metrics"] = metrics;
    atomic_write_file(dir + "/manifest.json", m.dump(2) + "\n");
  }
};

DatasetSplit load_data(const CliConfig& c) {
  if (c.data_dir.empty())
    config_error("no dataset directory given (use --data or the config's \"data\" key)");
  return load_split(c.data_dir);
}

// Shared summary of one trained variant, reused by several subcommands.
json report_json(const MetricsReport& rep) { return json::parse(rep.to_json()); }

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_generate(CliConfig& c) {
  c.gen.validate();
  if (c.data_dir.empty()) c.data_dir = "data/gen-" + hex64(fnv1a(c.gen.canonical_json()));
  DatasetSplit split = generate_population(c.gen);
  save_split(split, c.data_dir);

  size_t train_loans = 0, labeled = 0, test_loans = 0;
  for (const auto& h : split.train) {
    train_loans += h.labels.size();
    for (int y : h.labels) labeled += y != -1;
  }
  for (const auto& h : split.test) test_loans += h.labels.size();

  ManifestWriter mw("generate", c.data_dir);
  mw.add_output("train", c.data_dir + "/train.jsonl");
  mw.add_output("test", c.data_dir + "/test.jsonl");
  mw.metrics = {{"train_borrowers", split.train.size()},
                {"test_borrowers", split.test.size()},
                {"train_loans", train_loans},
                {"labeled_train_loans", labeled},
                {"test_loans", test_loans}};
  mw.finish(c);
  std::printf("[generate] %zu train / %zu test borrowers, %zu train loans (%zu labeled), "
              "%zu test loans -> %s\n",
              split.train.size(), split.test.size(), train_loans, labeled, test_loans,
              c.data_dir.c_str());
  return 0;
}

int cmd_train(CliConfig& c) {
  c.model.validate();
  c.train.validate();
  DatasetSplit split = load_data(c);
  const std::string dir = run_dir_for("train", c);
  ManifestWriter mw("train", dir);

  TrainResult tr = train(split, c.model, c.train);
  MetricsReport rep = evaluate(split, tr.params, tr.scaler, c.train.approve_threshold);

  save_checkpoint(tr.params, dir + "/checkpoint.json");
  write_curves_csv(tr, dir + "/curves.csv");
  atomic_write_file(dir + "/metrics.json", rep.to_json() + "\n");
  mw.add_output("checkpoint", dir + "/checkpoint.json");
  mw.add_output("curves", dir + "/curves.csv");
  mw.add_output("metrics", dir + "/metrics.json");
  mw.metrics = report_json(rep);
  mw.finish(c);
  std::printf("[train] steps=%lld auc=%.4f profit=%.0f approval=%.3f uniformity=%.4f -> %s\n",
              static_cast<long long>(tr.steps), rep.auc, rep.policy.profit,
              rep.policy.approval_rate, rep.uniformity, dir.c_str());
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, CliConfig& c) {
  DatasetSplit split = load_data(c);
  ModelParams params = load_checkpoint(checkpoint_path);
  FeatureScaler scaler = FeatureScaler::fit(split.train);
  MetricsReport rep = evaluate(split, params, scaler, c.train.approve_threshold);

  const std::string dir = run_dir_for("evaluate", c);
  ManifestWriter mw("evaluate", dir);
  atomic_write_file(dir + "/metrics.json", rep.to_json() + "\n");
  mw.add_output("metrics", dir + "/metrics.json");
  mw.metrics = report_json(rep);
  mw.finish(c);
  std::printf("[evaluate] auc=%.4f profit=%.0f approval=%.3f -> %s\n", rep.auc,
              rep.policy.profit, rep.policy.approval_rate, dir.c_str());
  return 0;
}

int cmd_ablate(CliConfig& c) {
  c.model.validate();
  c.train.validate();
  DatasetSplit split = load_data(c);
  const std::string dir = run_dir_for("ablate", c);
  ManifestWriter mw("ablate", dir);

  AblationSummary summary = run_ablation(split, c.model, c.train, c.seeds);
  write_runs_csv(summary.rows, dir + "/runs.csv");

  // Headline table: one row per variant, seed-mean metrics.
  const auto& variants = ablation_variants();
  std::string table = csv_row({"variant", "n_seeds", "auc", "profit", "approval_rate",
                               "mean_dpi_approved", "mean_income_approved", "alignment",
                               "uniformity"}) +
                      "\n";
  for (size_t v = 0; v < variants.size(); ++v)
    table += csv_row({variants[v].name, std::to_string(c.seeds.size()),
                      format_double(summary.mean_auc[v]), format_double(summary.mean_profit[v]),
                      format_double(summary.mean_approval[v]), format_double(summary.mean_dpi[v]),
                      format_double(summary.mean_income[v]),
                      format_double(summary.mean_alignment[v]),
                      format_double(summary.mean_uniformity[v])}) +
             "\n";
  atomic_write_file(dir + "/ablation.csv", table);

  LengthBinReport bins = run_length_bins(summary);
  write_length_bins_csv(bins, dir + "/bins.csv");
  if (c.write_svg) {
    SvgChart chart;
    chart.title = "AUC delta (ours - neither) by sequence length";
    chart.x_label = "length bin";
    chart.y_label = "delta AUC";
    SvgSeries s;
    s.name = "delta";
    s.draw_line = true;
    for (size_t b = 0; b < bins.delta.size(); ++b) {
      s.x.push_back(static_cast<double>(b));
      s.y.push_back(bins.delta[b]);
    }
    chart.series.push_back(std::move(s));
    chart.save(dir + "/bins.svg");
    mw.add_output("bins_svg", dir + "/bins.svg");
  }

  mw.add_output("runs", dir + "/runs.csv");
  mw.add_output("ablation", dir + "/ablation.csv");
  mw.add_output("bins", dir + "/bins.csv");
  for (size_t v = 0; v < variants.size(); ++v) {
    mw.metrics[variants[v].name] = {{"auc", summary.mean_auc[v]},
                                    {"profit", summary.mean_profit[v]},
                                    {"approval_rate", summary.mean_approval[v]},
                                    {"mean_dpi_approved", summary.mean_dpi[v]},
                                    {"mean_income_approved", summary.mean_income[v]},
                                    {"alignment", summary.mean_alignment[v]},
                                    {"uniformity", summary.mean_uniformity[v]}};
  }
  mw.metrics["bin_delta_slope"] = bins.delta_slope;
  mw.finish(c);

  std::printf("[ablate] %zu seeds:", c.seeds.size());
  for (size_t v = 0; v < variants.size(); ++v)
    std::printf(" %s auc=%.4f profit=%.0f", variants[v].name.c_str(), summary.mean_auc[v],
                summary.mean_profit[v]);
  std::printf(" -> %s\n", dir.c_str());
  return 0;
}

int cmd_backbones(CliConfig& c) {
  c.model.validate();
  c.train.validate();
  DatasetSplit split = load_data(c);
  const std::string dir = run_dir_for("backbones", c);
  ManifestWriter mw("backbones", dir);

  std::vector<RunOutcome> rows = run_backbone_sweep(split, c.model, c.train, c.seeds);
  write_runs_csv(rows, dir + "/backbones.csv");
  mw.add_output("backbones", dir + "/backbones.csv");

  std::printf("[backbones] %zu seeds:", c.seeds.size());
  for (const char* b : {"transformer", "rnn", "lstm", "gru"}) {
    double s = 0;
    int n = 0;
    for (const auto& r : rows)
      if (r.backbone == b && r.variant == "ours") { s += r.report.auc; ++n; }
    mw.metrics[b] = {{"auc_ours", s / n}};
    std::printf(" %s=%.4f", b, s / n);
  }
  mw.finish(c);
  std::printf(" -> %s\n", dir.c_str());
  return 0;
}

int cmd_transductive(CliConfig& c) {
  c.model.validate();
  c.train.validate();
  DatasetSplit split = load_data(c);
  const std::string dir = run_dir_for("transductive", c);
  ManifestWriter mw("transductive", dir);

  std::vector<TransductiveOutcome> rows = run_transductive(split, c.model, c.train, c.seeds);
  write_transductive_csv(rows, dir + "/transductive.csv");
  mw.add_output("transductive", dir + "/transductive.csv");

  double base = 0, trans = 0;
  for (const auto& r : rows) {
    base += r.base.auc;
    trans += r.transductive.auc;
  }
  base /= rows.size();
  trans /= rows.size();
  mw.metrics = {{"auc_base", base}, {"auc_transductive", trans}};
  mw.finish(c);
  std::printf("[transductive] %zu seeds: base auc=%.4f transductive auc=%.4f -> %s\n",
              c.seeds.size(), base, trans, dir.c_str());
  return 0;
}

int cmd_sweep(CliConfig& c) {
  c.model.validate();
  c.train.validate();
  DatasetSplit split = load_data(c);
  const std::string dir = run_dir_for("sweep", c);
  ManifestWriter mw("sweep", dir);

  std::vector<RatioOutcome> rows = run_label_ratio_sweep(split, c.model, c.train, c.ratios, c.seeds);
  write_ratio_sweep_csv(rows, dir + "/ratio_sweep.csv");
  mw.add_output("ratio_sweep", dir + "/ratio_sweep.csv");

  std::printf("[sweep] %zu seeds:", c.seeds.size());
  for (double ratio : c.ratios) {
    double auc = 0, profit = 0;
    int n = 0;
    for (const auto& r : rows)
      if (r.ratio == ratio) { auc += r.report.auc; profit += r.total_profit; ++n; }
    auc /= n;
    profit /= n;
    mw.metrics[format_double(ratio)] = {{"auc", auc}, {"total_profit", profit}};
    std::printf(" r=%g auc=%.4f profit=%.0f", ratio, auc, profit);
  }
  mw.finish(c);
  std::printf(" -> %s\n", dir.c_str());
  return 0;
}

int cmd_embed(const std::string& checkpoint_path, CliConfig& c) {
  DatasetSplit split = load_data(c);
  ModelParams params = load_checkpoint(checkpoint_path);
  FeatureScaler scaler = FeatureScaler::fit(split.train);
  const std::string dir = run_dir_for("embed", c);
  ManifestWriter mw("embed", dir);

  // Fused embedding f for every loan of both splits, eval mode, in chunks.
  std::ostringstream emb, pca_rows;
  emb << "id";
  for (int k = 0; k < params.config.hidden_dim; ++k) emb << ",f" << k;
  emb << ",label,domain\n";

  std::vector<std::vector<double>> points;
  std::vector<int> labels, domains;
  std::vector<std::string> ids;
  auto run_half = [&](const std::vector<BorrowerHistory>& half, const char* tag) {
    NoGradGuard guard;
    constexpr size_t kChunk = 512;
    for (size_t begin = 0; begin < half.size(); begin += kChunk) {
      std::vector<const BorrowerHistory*> chunk;
      for (size_t i = begin; i < std::min(begin + kChunk, half.size()); ++i)
        chunk.push_back(&half[i]);
      Batch batch = build_batch(chunk, params.config.max_seq_len, scaler);
      ForwardResult fr = forward(batch, params, RunMode::eval, 0);
      const int rows = fr.f.shape[0], dim = fr.f.shape[1];
      for (int r = 0; r < rows; ++r) {
        const BorrowerHistory& h = *chunk[static_cast<size_t>(fr.borrower[r])];
        // Positions past max_seq_len were truncated from the front; map the
        // packed position back to the absolute loan index.
        const int first = std::max(0, h.length() - params.config.max_seq_len);
        const int t = first + fr.position[r];
        ids.push_back(std::string(tag) + std::to_string(h.id) + ":" + std::to_string(t));
        labels.push_back(h.labels[static_cast<size_t>(t)]);
        const int domain = h.label_in_train[static_cast<size_t>(t)];
        domains.push_back(domain);
        std::vector<double> p(static_cast<size_t>(dim));
        emb << ids.back();
        for (int k = 0; k < dim; ++k) {
          p[static_cast<size_t>(k)] = (*fr.f.data)[static_cast<size_t>(r * dim + k)];
          emb << "," << format_double(p[static_cast<size_t>(k)]);
        }
        emb << "," << labels.back() << "," << domain << "\n";
        points.push_back(std::move(p));
      }
    }
  };
  run_half(split.train, "tr");
  run_half(split.test, "te");

  // Loans truncated away by max_seq_len still exist in the dataset; export
  // them is impossible (no embedding), so the count contract is over encoded
  // loans. With the default config nothing is truncated.
  atomic_write_file(dir + "/embeddings.csv", emb.str());

  // 2-D PCA of the embeddings, one row per loan. Header is a frozen contract.
  Tensor x = Tensor::zeros({static_cast<int>(points.size()), params.config.hidden_dim}, false);
  for (size_t i = 0; i < points.size(); ++i)
    for (int k = 0; k < params.config.hidden_dim; ++k)
      (*x.data)[i * static_cast<size_t>(params.config.hidden_dim) + static_cast<size_t>(k)] =
          points[i][static_cast<size_t>(k)];
  PcaResult pca = pca_project(x, 2);
  pca_rows << "id,pc1,pc2,label,domain\n";
  for (size_t i = 0; i < points.size(); ++i)
    pca_rows << ids[i] << "," << format_double((*pca.projected.data)[2 * i]) << ","
             << format_double((*pca.projected.data)[2 * i + 1]) << "," << labels[i] << ","
             << domains[i] << "\n";
  atomic_write_file(dir + "/pca.csv", pca_rows.str());

  if (c.write_svg) {
    // Fig. 5-style coloring: non-default / default / unapproved.
    SvgChart chart;
    chart.title = "PCA of fused loan embeddings";
    chart.x_label = "pc1";
    chart.y_label = "pc2";
    SvgSeries good{"non-default", "#2ca02c", {}, {}, false, true};
    SvgSeries bad{"default", "#d62728", {}, {}, false, true};
    SvgSeries unapproved{"unapproved", "#9e9e9e", {}, {}, false, true};
    for (size_t i = 0; i < points.size(); ++i) {
      SvgSeries& s = labels[i] == 1 ? good : labels[i] == 0 ? bad : unapproved;
      s.x.push_back((*pca.projected.data)[2 * i]);
      s.y.push_back((*pca.projected.data)[2 * i + 1]);
    }
    chart.series = {std::move(unapproved), std::move(good), std::move(bad)};
    chart.save(dir + "/pca.svg");
    mw.add_output("pca_svg", dir + "/pca.svg");
  }

  mw.add_output("embeddings", dir + "/embeddings.csv");
  mw.add_output("pca", dir + "/pca.csv");
  mw.metrics = {{"n_loans", points.size()},
                {"explained_variance_pc1", pca.explained_variance_ratio[0]},
                {"explained_variance_pc2", pca.explained_variance_ratio[1]}};
  mw.finish(c);
  std::printf("[embed] %zu loans, pc variance %.3f/%.3f -> %s\n", points.size(),
              pca.explained_variance_ratio[0], pca.explained_variance_ratio[1], dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective-labels lending: domain-adversarial + contrastive training"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, backbone_name;

  CliConfig c;
  auto add_common = [&](CLI::App* sub, bool needs_data) {
    sub->add_option("--config", config_path, "JSON config file (or a manifest to replay)");
    sub->add_option("--out-root", c.out_root, "root directory for run artifacts");
    if (needs_data) sub->add_option("--data", c.data_dir, "dataset directory");
  };
  auto add_train_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", c.train.seed, "training seed");
    sub->add_option("--epochs", c.train.epochs, "training epochs");
    sub->add_option("--batch-size", c.train.batch_size, "borrowers per batch");
    sub->add_option("--lr", c.train.learning_rate, "Adam learning rate");
    sub->add_option("--threshold", c.train.approve_threshold, "approval threshold");
    sub->add_option("--backbone", backbone_name, "transformer|rnn|lstm|gru");
    sub->add_flag("--no-cl", "disable the contrastive term");
    sub->add_flag("--no-da", "disable the domain-adversarial term");
    sub->add_flag("--transductive", "add unlabeled test loans to the CL/DA pools");
  };
  auto add_seeds = [&](CLI::App* sub) {
    sub->add_option("--seeds", c.seeds, "comma-separated seed list")->delimiter(',');
  };

  CLI::App* generate = app.add_subcommand("generate", "draw a synthetic population");
  add_common(generate, true);
  generate->add_option("--n-borrowers", c.gen.n_borrowers, "population size");
  generate->add_option("--seed", c.gen.seed, "generator seed");
  generate->add_option("--bias", c.gen.bias_strength, "screener socioeconomic bias");
  generate->add_option("--drift", c.gen.test_drift, "test-split socioeconomic drift");
  generate->add_option("--test-fraction", c.gen.test_fraction, "share of borrowers in test");

  CLI::App* train_cmd = app.add_subcommand("train", "train one model and evaluate it");
  add_common(train_cmd, true);
  add_train_flags(train_cmd);

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
  add_common(evaluate_cmd, true);
  evaluate_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  evaluate_cmd->add_option("--threshold", c.train.approve_threshold, "approval threshold");

  CLI::App* ablate = app.add_subcommand("ablate", "4-variant ablation grid over seeds");
  add_common(ablate, true);
  add_train_flags(ablate);
  add_seeds(ablate);
  ablate->add_flag("--svg", c.write_svg, "also write SVG plots");

  CLI::App* backbones = app.add_subcommand("backbones", "4 backbones x 4 ablation variants");
  add_common(backbones, true);
  add_train_flags(backbones);
  add_seeds(backbones);

  CLI::App* transductive = app.add_subcommand("transductive", "paired base vs transductive runs");
  add_common(transductive, true);
  add_train_flags(transductive);
  add_seeds(transductive);

  CLI::App* sweep = app.add_subcommand("sweep", "labeled-test-ratio sweep");
  add_common(sweep, true);
  add_train_flags(sweep);
  add_seeds(sweep);
  sweep->add_option("--ratios", c.ratios, "comma-separated reveal ratios")->delimiter(',');

  CLI::App* embed = app.add_subcommand("embed", "export fused embeddings + 2-D PCA");
  add_common(embed, true);
  embed->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  embed->add_flag("--svg", c.write_svg, "also write an SVG scatter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    (void)app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    // Merge order: defaults are already in `c`; the config file overwrites
    // them; flags the user actually passed overwrite the file. CLI11 bound
    // the flag values into `c` during parse, so re-apply the file first and
    // then re-run the flag assignments for options that were seen.
    CliConfig file_layer;  // defaults
    if (!config_path.empty()) apply_config_file(config_path, file_layer);

    // Start from the file layer, then copy back every CLI-set field from `c`.
    CliConfig merged = file_layer;
    auto seen = [&](const char* name) { return sub->count(name) > 0; };
    if (seen("--out-root")) merged.out_root = c.out_root;
    if (seen("--data")) merged.data_dir = c.data_dir;
    if (sub == generate) {
      if (seen("--n-borrowers")) merged.gen.n_borrowers = c.gen.n_borrowers;
      if (seen("--seed")) merged.gen.seed = c.gen.seed;
      if (seen("--bias")) merged.gen.bias_strength = c.gen.bias_strength;
      if (seen("--drift")) merged.gen.test_drift = c.gen.test_drift;
      if (seen("--test-fraction")) merged.gen.test_fraction = c.gen.test_fraction;
    } else {
      if (sub->get_option_no_throw("--seed") && seen("--seed")) merged.train.seed = c.train.seed;
      if (sub->get_option_no_throw("--epochs") && seen("--epochs"))
        merged.train.epochs = c.train.epochs;
      if (sub->get_option_no_throw("--batch-size") && seen("--batch-size"))
        merged.train.batch_size = c.train.batch_size;
      if (sub->get_option_no_throw("--lr") && seen("--lr"))
        merged.train.learning_rate = c.train.learning_rate;
      if (sub->get_option_no_throw("--threshold") && seen("--threshold"))
        merged.train.approve_threshold = c.train.approve_threshold;
      if (sub->get_option_no_throw("--backbone") && seen("--backbone"))
        merged.model.backbone = backbone_from_string(backbone_name);
      if (sub->get_option_no_throw("--no-cl") && seen("--no-cl"))
        merged.train.use_contrastive = false;
      if (sub->get_option_no_throw("--no-da") && seen("--no-da"))
        merged.train.use_domain = false;
      if (sub->get_option_no_throw("--transductive") && seen("--transductive"))
        merged.train.transductive = true;
      if (sub->get_option_no_throw("--seeds") && seen("--seeds")) merged.seeds = c.seeds;
      if (sub->get_option_no_throw("--ratios") && seen("--ratios")) merged.ratios = c.ratios;
      if (sub->get_option_no_throw("--svg") && seen("--svg")) merged.write_svg = true;
    }

    if (sub == generate) return cmd_generate(merged);
    if (sub == train_cmd) return cmd_train(merged);
    if (sub == evaluate_cmd) return cmd_evaluate(checkpoint_path, merged);
    if (sub == ablate) return cmd_ablate(merged);
    if (sub == backbones) return cmd_backbones(merged);
    if (sub == transductive) return cmd_transductive(merged);
    if (sub == sweep) return cmd_sweep(merged);
    if (sub == embed) return cmd_embed(checkpoint_path, merged);
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s (optimizer step %lld)\n", e.what(),
                 static_cast<long long>(e.step));
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
