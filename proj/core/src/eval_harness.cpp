#include "icd/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "icd/error.hpp"
#include "icd/parallel.hpp"
#include "icd/random.hpp"
#include "icd/text_io.hpp"

namespace icd {

namespace {

// Sub-stream ids of a round's generator.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kMaskStream = 2;
constexpr std::uint64_t kBoostStream = 3;

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  }
}

RoundMetrics run_round(const ExperimentConfig& config, const Dataset& dataset, std::size_t round,
                       std::size_t threads) {
  RoundMetrics out;
  out.round = round;
  out.seed = config.seed + round;
  const Rng rng(out.seed);
  const AccountTable& accounts = dataset.accounts;

  const PairSplit split =
      stage("split", [&] { return stratified_split(dataset.pairs, config.train_ratio, rng.split(kSplitStream).next_u64()); });
  out.train_pairs = split.train.size();
  out.test_pairs = split.test.size();

  std::set<std::string, std::less<>> train_id_set;
  for (std::size_t i : split.train) {
    train_id_set.insert(dataset.pairs[i].id_a);
    train_id_set.insert(dataset.pairs[i].id_b);
  }
  const std::vector<std::string> train_ids(train_id_set.begin(), train_id_set.end());
  std::vector<std::size_t> train_rows;
  for (const auto& id : train_ids) {
    const auto idx = accounts.index_of(id);
    if (!idx) throw DataError("split: pair names unknown account '" + id + "'");
    train_rows.push_back(*idx);
  }
  std::sort(train_rows.begin(), train_rows.end());

  const WgccaModel wgcca = stage("wgcca", [&] {
    WgccaOptions opts;
    opts.weights = config.view_weights();
    return fit_wgcca(dataset.views, opts, &train_ids);
  });
  const auto features = single_account_features(dataset, wgcca);
  const FeatureMatrix truth = FeatureMatrix::from_features(features);

  const InjectionResult injected = inject_missingness(truth, config.mask_rate, config.feature_mask_prob,
                                                      rng.split(kMaskStream).next_u64());
  out.masked_accounts = injected.selected_rows.size();
  const auto visible = visible_records(accounts, injected.masked);

  const FeatureMatrix imputed =
      stage("impute", [&] { return apply_imputer(config.imputer, injected.masked, train_rows, config, threads); });
  if (!injected.hidden.empty()) {
    out.imputation = imputation_metrics(imputed, injected.hidden, ColumnScaler::fit(truth));
  }

  std::vector<SingleAccountFeatures> completed(accounts.size());
  for (std::size_t i = 0; i < accounts.size(); ++i) completed[i] = imputed.to_single(i);
  const TfidfModel tfidf = fit_description_tfidf(visible, train_rows);
  const auto inputs = stage("pair_features", [&] {
    return build_classifier_inputs(accounts, visible, completed, dataset.pairs, tfidf, threads);
  });

  std::vector<ClassifierInput> train_inputs;
  train_inputs.reserve(split.train.size());
  for (std::size_t i : split.train) train_inputs.push_back(inputs[i]);
  TrainOptions topts;
  topts.threads = threads;
  const GbdtModel model = stage("gbdt", [&] {
    return train_gbdt(train_inputs, config.gbdt_params(), rng.split(kBoostStream).next_u64(), topts);
  });

  std::vector<PairLabel> predicted;
  std::vector<PairLabel> actual;
  for (std::size_t i : split.test) {
    predicted.push_back(classify(model, inputs[i].values));
    actual.push_back(dataset.pairs[i].label);
  }
  out.detection = stage("score", [&] { return detection_metrics(predicted, actual); });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

InjectionResult inject_missingness(const FeatureMatrix& features, double q, double feature_mask_prob,
                                   std::uint64_t seed) {
  check_unit(q, "mask rate");
  check_unit(feature_mask_prob, "feature mask probability");
  if (features.cols() != kSingleFeatureCount) throw DataError("inject_missingness: expected 16 feature columns");
  const std::size_t n = features.rows();
  const auto count = static_cast<std::size_t>(std::llround(q * static_cast<double>(n)));

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(order[k], order[pick]);
  }
  InjectionResult out;
  out.masked = features;
  out.selected_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(out.selected_rows.begin(), out.selected_rows.end());
  for (std::size_t r : out.selected_rows) {
    for (std::size_t c : kMissableFeatures) {
      // One draw per candidate cell keeps the stream independent of the data.
      const bool hide = rng.bernoulli(feature_mask_prob);
      if (!hide || !features.observed(r, c)) continue;
      out.hidden.push_back(HiddenCell{r, c, features.value(r, c)});
      out.masked.hide(r, c);
    }
  }
  return out;
}

ColumnScaler ColumnScaler::fit(const FeatureMatrix& truth) {
  ColumnScaler s;
  s.means_.assign(truth.cols(), 0.0);
  s.scales_.assign(truth.cols(), 1.0);
  for (std::size_t c = 0; c < truth.cols(); ++c) {
    double sum = 0.0;
    std::size_t m = 0;
    for (std::size_t r = 0; r < truth.rows(); ++r) {
      if (truth.observed(r, c)) {
        sum += truth.value(r, c);
        ++m;
      }
    }
    if (m == 0) continue;
    const double mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t r = 0; r < truth.rows(); ++r) {
      if (truth.observed(r, c)) ss += (truth.value(r, c) - mean) * (truth.value(r, c) - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(m));
    s.means_[c] = mean;
    s.scales_[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

ErrorSummary summarize_errors(std::span<const double> errors) {
  if (errors.empty()) throw DataError("imputation metrics: no hidden cells");
  ErrorSummary s;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (double e : errors) {
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  s.cells = errors.size();
  s.mae = abs_sum / static_cast<double>(s.cells);
  s.rmse = std::sqrt(sq_sum / static_cast<double>(s.cells));
  return s;
}

ErrorSummary imputation_metrics(const FeatureMatrix& imputed, std::span<const HiddenCell> hidden,
                                const ColumnScaler& scaler) {
  std::vector<double> errors;
  errors.reserve(hidden.size());
  for (const auto& cell : hidden) {
    if (!imputed.observed(cell.row, cell.feature)) {
      throw DataError("imputation metrics: cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.feature) +
                      ") was not imputed");
    }
    errors.push_back(scaler.transform(cell.feature, imputed.value(cell.row, cell.feature)) -
                     scaler.transform(cell.feature, cell.truth));
  }
  return summarize_errors(errors);
}

DetectionScore detection_metrics(std::span<const PairLabel> predictions, std::span<const PairLabel> labels) {
  if (predictions.size() != labels.size()) {
    throw DataError("detection metrics: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
  }
  DetectionScore s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == PairLabel::kCloned;
    const bool y = labels[i] == PairLabel::kCloned;
    if (p && y) ++s.tp;
    else if (p) ++s.fp;
    else if (y) ++s.fn;
    else ++s.tn;
  }
  if (s.tp + s.fn == 0) throw DataError("detection metrics: no positive labels");
  s.precision = s.tp + s.fp == 0 ? 0.0 : static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
  s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  // 2PR / (P + R) in count form: one rounding, exact on small fixtures.
  s.f1 = s.tp == 0 ? 0.0 : 2.0 * static_cast<double>(s.tp) / static_cast<double>(2 * s.tp + s.fp + s.fn);
  return s;
}

std::string_view imputer_name(ImputerKind kind) {
  switch (kind) {
    case ImputerKind::kCopula: return "copula";
    case ImputerKind::kMean: return "mean";
    case ImputerKind::kKnn: return "knn";
    case ImputerKind::kZero: return "zero";
  }
  return "copula";
}

ImputerKind parse_imputer(std::string_view name) {
  for (auto k : {ImputerKind::kCopula, ImputerKind::kMean, ImputerKind::kKnn, ImputerKind::kZero}) {
    if (imputer_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown imputer '" + std::string(name) + "'");
}

PairSplit stratified_split(std::span<const LabeledPair> pairs, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw std::invalid_argument("train ratio must be in (0, 1)");
  PairSplit split;
  Rng rng(seed);
  for (PairLabel label : {PairLabel::kGenuine, PairLabel::kCloned}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].label == label) idx.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(idx));
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

GbdtParams ExperimentConfig::gbdt_params() const { return gbdt ? *gbdt : GbdtParams::for_mask_rate(mask_rate); }

ViewWeights ExperimentConfig::view_weights() const { return weights ? *weights : default_view_weights(mask_rate); }

void ExperimentConfig::validate() const {
  check_unit(mask_rate, "mask rate");
  check_unit(feature_mask_prob, "feature mask probability");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw std::invalid_argument("train ratio must be in (0, 1)");
  if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  if (knn_k < 1) throw std::invalid_argument("knn k must be at least 1");
  gbdt_params().validate();
  for (double w : view_weights()) {
    if (!(w > 0.0)) throw std::invalid_argument("view weights must be positive");
  }
}

// ---------------------------------------------------------------------------

std::vector<SingleAccountFeatures> single_account_features(const Dataset& dataset, const WgccaModel& model) {
  std::vector<SingleAccountFeatures> out;
  out.reserve(dataset.accounts.size());
  for (const auto& rec : dataset.accounts) {
    out.push_back(assemble_single_features(extract_profile_features(rec),
                                           project_wgcca(model, gather_views(dataset.views, rec.account_id))));
  }
  return out;
}

std::vector<AccountRecord> visible_records(const AccountTable& accounts, const FeatureMatrix& masked) {
  if (masked.rows() != accounts.size() || masked.cols() != kSingleFeatureCount) {
    throw DataError("visible records: mask shape does not match the account table");
  }
  std::vector<AccountRecord> out(accounts.begin(), accounts.end());
  for (std::size_t r = 0; r < out.size(); ++r) {
    AccountRecord& rec = out[r];
    const auto hidden = [&](SingleFeature f) { return !masked.observed(r, index_of(f)); };
    if (hidden(SingleFeature::kFriendCount)) rec.friend_count.reset();
    if (hidden(SingleFeature::kFollowerCount)) rec.follower_count.reset();
    if (hidden(SingleFeature::kTweetCount)) rec.tweet_count.reset();
    if (hidden(SingleFeature::kListCount)) rec.list_count.reset();
    if (hidden(SingleFeature::kFavoriteCount)) rec.favorite_count.reset();
    if (hidden(SingleFeature::kDescriptionLength)) rec.description.reset();
  }
  return out;
}

TfidfModel fit_description_tfidf(std::span<const AccountRecord> records, std::span<const std::size_t> rows) {
  std::vector<std::string> corpus;
  for (std::size_t r : rows) {
    if (records[r].description) corpus.push_back(normalize_text(*records[r].description));
  }
  if (corpus.empty()) corpus.emplace_back();
  return tfidf_fit(corpus);
}

FeatureMatrix apply_imputer(ImputerKind kind, const FeatureMatrix& data, std::span<const std::size_t> train_rows,
                            const ExperimentConfig& config, std::size_t threads) {
  const FeatureMatrix train = data.select_rows(train_rows);
  switch (kind) {
    case ImputerKind::kCopula: {
      CopulaEmOptions opts = config.copula;
      opts.threads = threads;
      const CopulaModel model = fit_copula_em(train, opts);
      return impute_copula(model, data, nullptr, threads);
    }
    case ImputerKind::kMean: return impute_mean(data, &train);
    case ImputerKind::kKnn: return impute_knn(data, config.knn_k, &train);
    case ImputerKind::kZero: return impute_zero(data);
  }
  throw std::invalid_argument("unknown imputer");
}

MetricsReport run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  config.validate();
  if (dataset.pairs.empty()) throw DataError("experiment: dataset has no labeled pairs");
  MetricsReport report;
  report.imputer = std::string(imputer_name(config.imputer));
  report.mask_rate = config.mask_rate;
  report.rounds.resize(config.rounds);
  const std::size_t outer = std::min(config.threads, config.rounds);
  const std::size_t inner = outer > 1 ? 1 : config.threads;
  parallel_for(config.rounds, outer,
               [&](std::size_t r) { report.rounds[r] = run_round(config, dataset, r, inner); });

  const double rounds = static_cast<double>(report.rounds.size());
  bool all_imputed = true;
  double mae = 0.0;
  double rmse = 0.0;
  for (const auto& r : report.rounds) {
    report.precision += r.detection.precision;
    report.recall += r.detection.recall;
    report.f1 += r.detection.f1;
    if (r.imputation) {
      mae += r.imputation->mae;
      rmse += r.imputation->rmse;
    } else {
      all_imputed = false;
    }
  }
  report.precision /= rounds;
  report.recall /= rounds;
  report.f1 /= rounds;
  if (all_imputed) {
    report.mae = mae / rounds;
    report.rmse = rmse / rounds;
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string report_to_json(const MetricsReport& report) {
  using nlohmann::ordered_json;
  const auto optional_number = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["imputer"] = report.imputer;
  j["mask_rate"] = report.mask_rate;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["mae"] = optional_number(report.mae);
  j["rmse"] = optional_number(report.rmse);
  ordered_json rounds = ordered_json::array();
  for (const auto& r : report.rounds) {
    ordered_json o;
    o["round"] = r.round;
    o["seed"] = r.seed;
    o["precision"] = r.detection.precision;
    o["recall"] = r.detection.recall;
    o["f1"] = r.detection.f1;
    o["tp"] = r.detection.tp;
    o["fp"] = r.detection.fp;
    o["fn"] = r.detection.fn;
    o["tn"] = r.detection.tn;
    o["mae"] = optional_number(r.imputation ? std::optional(r.imputation->mae) : std::nullopt);
    o["rmse"] = optional_number(r.imputation ? std::optional(r.imputation->rmse) : std::nullopt);
    o["hidden_cells"] = r.imputation ? r.imputation->cells : 0;
    o["masked_accounts"] = r.masked_accounts;
    o["train_pairs"] = r.train_pairs;
    o["test_pairs"] = r.test_pairs;
    rounds.push_back(std::move(o));
  }
  j["per_round"] = std::move(rounds);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  const auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "round,seed,precision,recall,f1,mae,rmse\n";
  for (const auto& r : report.rounds) {
    out << r.round << ',' << r.seed << ',' << format_double(r.detection.precision) << ','
        << format_double(r.detection.recall) << ',' << format_double(r.detection.f1) << ','
        << cell(r.imputation ? std::optional(r.imputation->mae) : std::nullopt) << ','
        << cell(r.imputation ? std::optional(r.imputation->rmse) : std::nullopt) << '\n';
  }
  out << "mean,," << format_double(report.precision) << ',' << format_double(report.recall) << ','
      << format_double(report.f1) << ',' << cell(report.mae) << ',' << cell(report.rmse) << '\n';
  return out.str();
}

void write_report(const std::filesystem::path& path, const MetricsReport& report) {
  auto out = open_output(path);
  out << (path.extension() == ".csv" ? report_to_csv(report) : report_to_json(report));
}

}  // namespace icd
