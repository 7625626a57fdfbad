#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icd/data_model.hpp"
#include "icd/gbdt.hpp"
#include "icd/imputation.hpp"
#include "icd/multiview.hpp"
#include "icd/pair_features.hpp"
#include "icd/textsim.hpp"

namespace icd {

struct HiddenCell {
  std::size_t row = 0;
  std::size_t feature = 0;
  double truth = 0.0;

  bool operator==(const HiddenCell&) const = default;
};

struct InjectionResult {
  FeatureMatrix masked;
  /// Newly hidden cells in row-major order.
  std::vector<HiddenCell> hidden;
  /// The round(q n) selected rows, ascending.
  std::vector<std::size_t> selected_rows;
};

/// Selects exactly round(q n) rows uniformly and hides each of their missable
/// features independently with probability feature_mask_prob. Cells that are
/// already masked stay masked and are not reported. Throws
/// std::invalid_argument when q or feature_mask_prob is outside [0, 1].
InjectionResult inject_missingness(const FeatureMatrix& features, double q, double feature_mask_prob,
                                   std::uint64_t seed);

/// Per-column z-score statistics over observed cells; a constant column has
/// scale 1.
class ColumnScaler {
 public:
  ColumnScaler() = default;
  static ColumnScaler fit(const FeatureMatrix& truth);

  double transform(std::size_t column, double v) const { return (v - means_[column]) / scales_[column]; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& scales() const { return scales_; }

 private:
  std::vector<double> means_;
  std::vector<double> scales_;
};

struct ErrorSummary {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t cells = 0;
};

/// MAE and RMSE of a list of errors. Throws DataError when empty.
ErrorSummary summarize_errors(std::span<const double> errors);

/// Errors between the imputed value and the truth of every hidden cell, on the
/// scaler's z-scored scale.
ErrorSummary imputation_metrics(const FeatureMatrix& imputed, std::span<const HiddenCell> hidden,
                                const ColumnScaler& scaler);

struct DetectionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// Cloned is the positive class. Precision is 0 without positive predictions
/// and F1 is 0 when precision + recall is 0. Throws DataError on a length
/// mismatch or when no label is positive.
DetectionScore detection_metrics(std::span<const PairLabel> predictions, std::span<const PairLabel> labels);

enum class ImputerKind { kCopula, kMean, kKnn, kZero };

std::string_view imputer_name(ImputerKind kind);
ImputerKind parse_imputer(std::string_view name);

struct PairSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-label shuffle; round(ratio * count) of each label go to training,
/// keeping at least one pair of a label on each side when it has two or more.
PairSplit stratified_split(std::span<const LabeledPair> pairs, double train_ratio, std::uint64_t seed);

struct ExperimentConfig {
  double mask_rate = 0.5;
  double feature_mask_prob = 0.5;
  std::size_t rounds = 10;
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  ImputerKind imputer = ImputerKind::kCopula;
  /// Defaults to GbdtParams::for_mask_rate(mask_rate).
  std::optional<GbdtParams> gbdt;
  /// Defaults to default_view_weights(mask_rate).
  std::optional<ViewWeights> weights;
  std::size_t knn_k = 5;
  CopulaEmOptions copula;
  std::size_t threads = 1;

  GbdtParams gbdt_params() const;
  ViewWeights view_weights() const;
  void validate() const;
};

struct RoundMetrics {
  std::size_t round = 0;
  std::uint64_t seed = 0;
  DetectionScore detection;
  std::optional<ErrorSummary> imputation;
  std::size_t train_pairs = 0;
  std::size_t test_pairs = 0;
  std::size_t masked_accounts = 0;
};

struct MetricsReport {
  std::string imputer;
  double mask_rate = 0.0;
  std::vector<RoundMetrics> rounds;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Present when every round hid at least one cell.
  std::optional<double> mae;
  std::optional<double> rmse;
};

/// Profile features plus WGCCA entries for every account, in table order.
std::vector<SingleAccountFeatures> single_account_features(const Dataset& dataset, const WgccaModel& model);

/// Copies of the accounts with masked counters removed and, when the
/// description length is masked, the description text removed.
std::vector<AccountRecord> visible_records(const AccountTable& accounts, const FeatureMatrix& masked);

/// TF-IDF over the normalized descriptions of `rows`; an empty vocabulary
/// when none of them has text.
TfidfModel fit_description_tfidf(std::span<const AccountRecord> records, std::span<const std::size_t> rows);

/// Fits the imputer on the `train_rows` of `data` and completes every row.
FeatureMatrix apply_imputer(ImputerKind kind, const FeatureMatrix& data, std::span<const std::size_t> train_rows,
                            const ExperimentConfig& config, std::size_t threads);

/// One round per seed + round index: split pairs, fit WGCCA on training
/// accounts, inject missingness, impute, build pair inputs, train and score.
MetricsReport run_experiment(const ExperimentConfig& config, const Dataset& dataset);

std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);
void write_report(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace icd
