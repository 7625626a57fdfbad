#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icd/data_model.hpp"
#include "icd/error.hpp"
#include "icd/eval_harness.hpp"
#include "icd/gbdt.hpp"
#include "icd/imputation.hpp"
#include "icd/multiview.hpp"
#include "icd/pair_features.hpp"
#include "icd/pair_gen.hpp"
#include "icd/synth.hpp"
#include "icd/text_io.hpp"

namespace icd::cli {
namespace {

namespace fs = std::filesystem;

/// Raised for usage problems found after parsing (missing seed, bad combos).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out = "icd-out";
  std::size_t threads = 1;
  bool verbose = false;
};

struct SynthFlags {
  std::size_t n = SynthConfig{}.n_accounts;
  double clone_rate = SynthConfig{}.clone_rate;
  double corr_strength = SynthConfig{}.latent_corr_strength;
  double view_noise = SynthConfig{}.view_noise;
  std::size_t max_negative_ratio = SynthConfig{}.max_negative_ratio;

  SynthConfig config(std::uint64_t seed) const {
    SynthConfig c;
    c.n_accounts = n;
    c.clone_rate = clone_rate;
    c.latent_corr_strength = corr_strength;
    c.view_noise = view_noise;
    c.max_negative_ratio = max_negative_ratio;
    c.seed = seed;
    return c;
  }
};

/// Unset fields fall back to the tuned defaults of the mask rate.
struct GbdtFlags {
  std::optional<double> learning_rate;
  std::optional<std::size_t> max_depth;
  std::optional<std::size_t> num_leaves;
  std::optional<double> reg_alpha;
  std::optional<std::size_t> n_trees;
  std::optional<double> goss_a;
  std::optional<double> goss_b;
  std::optional<std::size_t> max_bins;
  std::optional<std::size_t> min_samples_leaf;

  GbdtParams params(double mask_rate) const {
    GbdtParams p = GbdtParams::for_mask_rate(mask_rate);
    if (learning_rate) p.learning_rate = *learning_rate;
    if (max_depth) p.max_depth = *max_depth;
    if (num_leaves) p.num_leaves = *num_leaves;
    if (reg_alpha) p.reg_alpha = *reg_alpha;
    if (n_trees) p.n_trees = *n_trees;
    if (goss_a) p.goss_a = *goss_a;
    if (goss_b) p.goss_b = *goss_b;
    if (max_bins) p.max_bins = *max_bins;
    if (min_samples_leaf) p.min_samples_leaf = *min_samples_leaf;
    p.validate();
    return p;
  }
};

struct ImputeFlags {
  std::string imputer = "copula";
  std::size_t knn_k = ExperimentConfig{}.knn_k;
  double copula_tol = CopulaEmOptions{}.tol;
  std::size_t copula_max_iter = CopulaEmOptions{}.max_iter;
};

struct Flags {
  GlobalOptions global;
  SynthFlags synth;
  GbdtFlags gbdt;
  ImputeFlags impute;
  std::string data;
  std::string pairs_file;
  std::string features_file;
  std::string model_file;
  double threshold = 0.8;
  double class_threshold = 0.5;
  bool exhaustive = false;
  double mask_rate = 0.5;
  double feature_mask_prob = 0.5;
  std::size_t rounds = ExperimentConfig{}.rounds;
  double train_ratio = ExperimentConfig{}.train_ratio;
};

class Logger {
 public:
  Logger(std::ostream& err, bool verbose) : err_(err), verbose_(verbose) {}
  void operator()(const std::string& message) const {
    if (verbose_) err_ << "[icd] " << message << '\n';
  }

 private:
  std::ostream& err_;
  bool verbose_;
};

std::uint64_t require_seed(const GlobalOptions& g, const char* subcommand) {
  if (!g.seed) throw UsageError(std::string(subcommand) + " is randomized and requires --seed");
  return *g.seed;
}

fs::path output_dir(const GlobalOptions& g) {
  const fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

Dataset require_dataset(const std::string& dir, const char* subcommand) {
  if (dir.empty()) throw UsageError(std::string(subcommand) + " requires --data");
  return load_dataset(dir);
}

ExperimentConfig experiment_config(const Flags& f, std::uint64_t seed) {
  ExperimentConfig c;
  c.mask_rate = f.mask_rate;
  c.feature_mask_prob = f.feature_mask_prob;
  c.rounds = f.rounds;
  c.train_ratio = f.train_ratio;
  c.seed = seed;
  c.imputer = parse_imputer(f.impute.imputer);
  c.gbdt = f.gbdt.params(f.mask_rate);
  c.knn_k = f.impute.knn_k;
  c.copula.tol = f.impute.copula_tol;
  c.copula.max_iter = f.impute.copula_max_iter;
  c.threads = f.global.threads;
  c.validate();
  return c;
}

/// WGCCA over every account with all views, then profile plus embedding
/// features in table order.
std::vector<SingleAccountFeatures> all_account_features(const Dataset& dataset, double mask_rate) {
  WgccaOptions opts;
  opts.weights = default_view_weights(mask_rate);
  const WgccaModel model = fit_wgcca(dataset.views, opts);
  return single_account_features(dataset, model);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

/// account_id followed by the 16 single-account features; masked cells empty.
void write_account_features(const fs::path& path, const AccountTable& accounts, const FeatureMatrix& m) {
  std::ofstream out = open_output(path);
  out << "account_id";
  for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << single_feature_name(c);
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << accounts[r].account_id;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out << ',';
      if (m.observed(r, c)) out << format_double(m.value(r, c));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

/// First two columns of every data line; a header starting with id_a is skipped.
std::vector<LabeledPair> load_pair_list(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<LabeledPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    const auto fields = split(t, ',');
    if (line_no == 1 && trim(fields[0]) == "id_a") continue;
    if (fields.size() < 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected id_a,id_b");
    }
    out.push_back(make_labeled_pair(std::string(trim(fields[0])), std::string(trim(fields[1])), PairLabel::kGenuine));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const Flags& f, std::ostream& out, const Logger& log) {
  const SynthConfig config = f.synth.config(require_seed(f.global, "synth"));
  config.validate();
  log("generating " + std::to_string(config.n_accounts) + " accounts");
  const SynthDataset synth = generate_synthetic_dataset(config);
  const fs::path dir = output_dir(f.global);
  write_synthetic_dataset(dir, synth);
  out << "wrote " << synth.dataset.accounts.size() << " accounts and " << synth.dataset.pairs.size()
      << " labeled pairs to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_pairs(const Flags& f, std::ostream& out, const Logger& log) {
  const Dataset dataset = require_dataset(f.data, "pairs");
  PairGenOptions opts;
  opts.threshold = f.threshold;
  opts.exhaustive = f.exhaustive;
  log("scoring names of " + std::to_string(dataset.accounts.size()) + " accounts");
  const auto pairs = generate_candidate_pairs(dataset.accounts, opts);
  const fs::path path = output_dir(f.global) / "candidates.csv";
  std::ofstream file = open_output(path);
  file << "id_a,id_b,name_score\n";
  for (const auto& p : pairs) file << p.id_a << ',' << p.id_b << ',' << format_double(p.name_score.value()) << '\n';
  if (!file) throw DataError("failed writing " + path.string());
  out << "wrote " << pairs.size() << " candidate pairs to " << path.string() << '\n';
  return kExitOk;
}

int cmd_features(const Flags& f, std::ostream& out, const Logger& log) {
  const Dataset dataset = require_dataset(f.data, "features");
  const std::vector<LabeledPair> pairs =
      f.pairs_file.empty() ? dataset.pairs : load_pair_list(f.pairs_file);
  std::map<std::pair<std::string, std::string>, PairLabel> known;
  for (const auto& k : dataset.pairs) known.emplace(std::pair{k.id_a, k.id_b}, k.label);
  std::vector<std::optional<PairLabel>> labels(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto it = known.find({pairs[i].id_a, pairs[i].id_b});
    if (it != known.end()) labels[i] = it->second;
  }

  log("fitting view embedding");
  const auto single = all_account_features(dataset, f.mask_rate);
  const FeatureMatrix matrix = FeatureMatrix::from_features(single);
  ExperimentConfig config;
  config.imputer = parse_imputer(f.impute.imputer);
  config.knn_k = f.impute.knn_k;
  config.copula.tol = f.impute.copula_tol;
  config.copula.max_iter = f.impute.copula_max_iter;
  const auto rows = all_rows(matrix.rows());
  log("imputing " + std::to_string(matrix.masked_count()) + " missing cells with " + f.impute.imputer);
  const FeatureMatrix imputed = apply_imputer(config.imputer, matrix, rows, config, f.global.threads);
  std::vector<SingleAccountFeatures> completed(imputed.rows());
  for (std::size_t i = 0; i < imputed.rows(); ++i) completed[i] = imputed.to_single(i);

  const TfidfModel tfidf = fit_description_tfidf(dataset.accounts.records(), rows);
  auto inputs = build_classifier_inputs(dataset.accounts, completed, pairs, tfidf, f.global.threads);
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].label = labels[i];
  const fs::path path = output_dir(f.global) / "features.csv";
  write_feature_matrix(path, inputs);
  out << "wrote " << inputs.size() << " feature rows to " << path.string() << '\n';
  return kExitOk;
}

int cmd_impute(const Flags& f, std::ostream& out, const Logger& log) {
  const std::uint64_t seed = require_seed(f.global, "impute");
  const Dataset dataset = require_dataset(f.data, "impute");
  ExperimentConfig config = experiment_config(f, seed);

  log("fitting view embedding");
  const auto single = all_account_features(dataset, f.mask_rate);
  const FeatureMatrix truth = FeatureMatrix::from_features(single);
  const InjectionResult injected = inject_missingness(truth, f.mask_rate, f.feature_mask_prob, seed);
  log("masked " + std::to_string(injected.hidden.size()) + " cells over " +
      std::to_string(injected.selected_rows.size()) + " accounts");
  const auto rows = all_rows(truth.rows());
  const FeatureMatrix imputed = apply_imputer(config.imputer, injected.masked, rows, config, f.global.threads);

  const fs::path dir = output_dir(f.global);
  write_account_features(dir / "features_masked.csv", dataset.accounts, injected.masked);
  write_account_features(dir / "features_imputed.csv", dataset.accounts, imputed);

  nlohmann::ordered_json report;
  report["imputer"] = imputer_name(config.imputer);
  report["mask_rate"] = f.mask_rate;
  report["feature_mask_prob"] = f.feature_mask_prob;
  report["seed"] = seed;
  report["masked_accounts"] = injected.selected_rows.size();
  report["hidden_cells"] = injected.hidden.size();
  if (injected.hidden.empty()) {
    report["mae"] = nullptr;
    report["rmse"] = nullptr;
  } else {
    const ErrorSummary s = imputation_metrics(imputed, injected.hidden, ColumnScaler::fit(truth));
    report["mae"] = s.mae;
    report["rmse"] = s.rmse;
  }
  std::ofstream file = open_output(dir / "imputation_report.json");
  file << report.dump(2) << '\n';
  if (!file) throw DataError("failed writing imputation report");
  out << report.dump() << '\n';
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out, const Logger& log) {
  const std::uint64_t seed = require_seed(f.global, "train");
  if (f.features_file.empty()) throw UsageError("train requires --features");
  const auto inputs = load_feature_matrix(f.features_file);
  const GbdtParams params = f.gbdt.params(f.mask_rate);
  log("training on " + std::to_string(inputs.size()) + " pairs");
  TrainOptions opts;
  opts.threads = f.global.threads;
  TrainInfo info;
  const GbdtModel model = train_gbdt(inputs, params, seed, opts, &info);
  const fs::path path = output_dir(f.global) / "model.txt";
  save_gbdt_model(path, model);
  out << "wrote " << model.trees.size() << " trees to " << path.string() << " (training loss "
      << format_double(info.train_loss.empty() ? info.initial_loss : info.train_loss.back()) << ")\n";
  return kExitOk;
}

int cmd_predict(const Flags& f, std::ostream& out, const Logger& log) {
  if (f.model_file.empty()) throw UsageError("predict requires --model");
  if (f.features_file.empty()) throw UsageError("predict requires --features");
  const GbdtModel model = load_gbdt_model(f.model_file);
  const auto inputs = load_feature_matrix(f.features_file);
  log("scoring " + std::to_string(inputs.size()) + " pairs");

  const fs::path path = output_dir(f.global) / "predictions.csv";
  std::ofstream file = open_output(path);
  file << "id_a,id_b,probability,prediction\n";
  std::vector<PairLabel> predicted;
  std::vector<PairLabel> actual;
  bool all_labeled = !inputs.empty();
  for (const auto& row : inputs) {
    const double prob = predict_proba(model, row.values);
    const PairLabel label = prob > f.class_threshold ? PairLabel::kCloned : PairLabel::kGenuine;
    file << row.id_a << ',' << row.id_b << ',' << format_double(prob) << ',' << label_name(label) << '\n';
    predicted.push_back(label);
    if (row.label) {
      actual.push_back(*row.label);
    } else {
      all_labeled = false;
    }
  }
  if (!file) throw DataError("failed writing " + path.string());
  out << "wrote " << inputs.size() << " predictions to " << path.string() << '\n';
  if (all_labeled) {
    const DetectionScore s = detection_metrics(predicted, actual);
    out << "precision " << format_double(s.precision) << " recall " << format_double(s.recall) << " f1 "
        << format_double(s.f1) << '\n';
  }
  return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out, const Logger& log) {
  const std::uint64_t seed = require_seed(f.global, "evaluate");
  const ExperimentConfig config = experiment_config(f, seed);
  Dataset dataset;
  if (f.data.empty()) {
    const SynthConfig sc = f.synth.config(seed);
    sc.validate();
    log("no --data given; generating " + std::to_string(sc.n_accounts) + " synthetic accounts");
    dataset = generate_synthetic_dataset(sc).dataset;
  } else {
    dataset = load_dataset(f.data);
  }
  log("running " + std::to_string(config.rounds) + " rounds with " + std::string(imputer_name(config.imputer)));
  const MetricsReport report = run_experiment(config, dataset);
  const fs::path dir = output_dir(f.global);
  write_report(dir / "report.json", report);
  write_report(dir / "report.csv", report);
  out << report_to_json(report) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

void add_synth_flags(CLI::App* sub, SynthFlags& s) {
  sub->add_option("--n", s.n, "Number of accounts")->check(CLI::PositiveNumber);
  sub->add_option("--clone-rate", s.clone_rate, "Fraction of accounts that are clones")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--corr-strength", s.corr_strength, "Scale of the latent factor loadings")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--view-noise", s.view_noise, "Noise of the view entries")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-negative-ratio", s.max_negative_ratio, "Negatives kept per clone; 0 keeps all");
}

void add_gbdt_flags(CLI::App* sub, GbdtFlags& g) {
  sub->add_option("--learning-rate", g.learning_rate, "Shrinkage per tree")->check(CLI::PositiveNumber);
  sub->add_option("--max-depth", g.max_depth, "Maximum tree depth")->check(CLI::PositiveNumber);
  sub->add_option("--num-leaves", g.num_leaves, "Maximum leaves per tree")->check(CLI::Range(2, 1 << 20));
  sub->add_option("--reg-alpha", g.reg_alpha, "L1 penalty on leaf values")->check(CLI::NonNegativeNumber);
  sub->add_option("--n-trees", g.n_trees, "Boosting iterations")->check(CLI::PositiveNumber);
  sub->add_option("--goss-a", g.goss_a, "GOSS top fraction")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--goss-b", g.goss_b, "GOSS random fraction")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--max-bins", g.max_bins, "Histogram bins per feature")->check(CLI::Range(2, 255));
  sub->add_option("--min-samples-leaf", g.min_samples_leaf, "Minimum rows per leaf")->check(CLI::PositiveNumber);
}

void add_impute_flags(CLI::App* sub, ImputeFlags& i) {
  sub->add_option("--imputer", i.imputer, "Imputation method")
      ->check(CLI::IsMember({"copula", "mean", "knn", "zero"}));
  sub->add_option("--knn-k", i.knn_k, "Neighbours for the kNN imputer")->check(CLI::PositiveNumber);
  sub->add_option("--copula-tol", i.copula_tol, "EM stopping tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--copula-max-iter", i.copula_max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
}

void add_mask_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--mask-rate", f.mask_rate, "Fraction of accounts with hidden features")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--feature-mask-prob", f.feature_mask_prob, "Hide probability per feature of a masked account")
      ->check(CLI::Range(0.0, 1.0));
}

struct Subcommand {
  CLI::App* app;
  std::function<int(const Flags&, std::ostream&, const Logger&)> handler;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Impersonation and clone detection toolkit", "icd"};
  app.set_config("--config", "", "Config file; explicit flags override its values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--seed", f.global.seed, "Seed for randomized subcommands");
  app.add_option("--out", f.global.out, "Output directory")->capture_default_str();
  app.add_option("--threads", f.global.threads, "Worker threads; outputs do not depend on it")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
  app.add_flag("--verbose", f.global.verbose, "Progress messages on stderr");

  std::vector<Subcommand> subs;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted clones");
  add_synth_flags(synth, f.synth);
  subs.push_back({synth, cmd_synth});

  auto* pairs = app.add_subcommand("pairs", "Candidate pairs by username or screen-name similarity");
  pairs->add_option("--data", f.data, "Dataset directory")->required();
  pairs->add_option("--threshold", f.threshold, "Jaro-Winkler threshold")->check(CLI::Range(0.0, 1.0));
  pairs->add_flag("--exhaustive", f.exhaustive, "Score every pair without blocking");
  subs.push_back({pairs, cmd_pairs});

  auto* features = app.add_subcommand("features", "42-column classifier inputs for labeled or listed pairs");
  features->add_option("--data", f.data, "Dataset directory")->required();
  features->add_option("--pairs", f.pairs_file, "CSV of pairs (id_a,id_b,...); defaults to the dataset labels");
  features->add_option("--mask-rate", f.mask_rate, "Mask rate keying the view weights")
      ->check(CLI::Range(0.0, 1.0));
  add_impute_flags(features, f.impute);
  subs.push_back({features, cmd_features});

  auto* impute = app.add_subcommand("impute", "Hide feature cells, impute them and report the error");
  impute->add_option("--data", f.data, "Dataset directory")->required();
  add_mask_flags(impute, f);
  add_impute_flags(impute, f.impute);
  subs.push_back({impute, cmd_impute});

  auto* train = app.add_subcommand("train", "Train the boosted classifier on a feature matrix");
  train->add_option("--features", f.features_file, "Labeled feature matrix CSV")->required();
  train->add_option("--mask-rate", f.mask_rate, "Mask rate keying the default tree parameters")
      ->check(CLI::Range(0.0, 1.0));
  add_gbdt_flags(train, f.gbdt);
  subs.push_back({train, cmd_train});

  auto* predict = app.add_subcommand("predict", "Score pairs with a trained model");
  predict->add_option("--model", f.model_file, "Model file from train")->required();
  predict->add_option("--features", f.features_file, "Feature matrix CSV")->required();
  predict->add_option("--threshold", f.class_threshold, "Probability above which a pair is cloned")
      ->check(CLI::Range(0.0, 1.0));
  subs.push_back({predict, cmd_predict});

  auto* evaluate = app.add_subcommand("evaluate", "Repeated split, mask, impute, train and score protocol");
  evaluate->add_option("--data", f.data, "Dataset directory; a synthetic dataset is generated when omitted");
  add_mask_flags(evaluate, f);
  add_impute_flags(evaluate, f.impute);
  evaluate->add_option("--rounds", f.rounds, "Number of rounds")->check(CLI::PositiveNumber);
  evaluate->add_option("--train-ratio", f.train_ratio, "Fraction of pairs used for training")
      ->check(CLI::Range(0.0, 1.0));
  add_synth_flags(evaluate, f.synth);
  add_gbdt_flags(evaluate, f.gbdt);
  subs.push_back({evaluate, cmd_evaluate});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const Logger log(err, f.global.verbose);
  for (const auto& s : subs) {
    if (!s.app->parsed()) continue;
    try {
      return s.handler(f, out, log);
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n\n" << s.app->help();
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitData;
    }
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace icd::cli
