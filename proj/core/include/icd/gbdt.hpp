#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icd/data_model.hpp"
#include "icd/pair_features.hpp"

namespace icd {

struct GbdtParams {
  double learning_rate = 0.1;
  std::size_t max_depth = 18;
  std::size_t num_leaves = 80;
  double reg_alpha = 0.01;
  std::size_t n_trees = 100;
  double goss_a = 0.2;
  double goss_b = 0.1;
  std::size_t max_bins = 255;
  std::size_t min_samples_leaf = 20;

  /// Tuned depth, leaves and L1 penalty for a masking rate; the nearest of
  /// 0.4, 0.5 and 0.6 is used.
  static GbdtParams for_mask_rate(double q);
  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;

  bool operator==(const GbdtParams&) const = default;
};

/// Per-feature quantile bin edges. A value v falls in the first bin whose
/// upper edge is >= v; the last edge of every feature is +inf.
class FeatureBins {
 public:
  FeatureBins() = default;
  explicit FeatureBins(std::vector<std::vector<double>> edges);

  /// Fits at most max_bins bins per column of the row-major n x p matrix.
  static FeatureBins fit(std::span<const double> rows, std::size_t p, std::size_t max_bins);

  std::size_t features() const { return edges_.size(); }
  std::size_t bin_count(std::size_t j) const { return edges_[j].size(); }
  const std::vector<double>& edges(std::size_t j) const { return edges_[j]; }
  std::uint8_t bin(std::size_t j, double v) const;
  /// Column-major bins: result[j][i] is the bin of row i on feature j.
  std::vector<std::vector<std::uint8_t>> apply(std::span<const double> rows) const;

  bool operator==(const FeatureBins&) const = default;

 private:
  std::vector<std::vector<double>> edges_;
};

/// Exact variance gain of sending bins <= split_bin left:
/// (1/n_O) [G_l^2 / n_l + G_r^2 / n_r]. `feature_bins` holds the bin of every
/// training row; `node_rows` lists the node's members. Returns nullopt when
/// a side has fewer than max(1, min_samples_leaf) members.
std::optional<double> variance_gain_exact(std::span<const double> gradients, std::span<const std::size_t> node_rows,
                                          std::span<const std::uint8_t> feature_bins, std::size_t split_bin,
                                          std::size_t min_samples_leaf = 1);

struct GossSample {
  /// Top ceil(a n) rows by |g|, ties by lower index, in ascending row order.
  std::vector<std::size_t> top;
  /// ceil(b n) rows drawn uniformly without replacement from the rest,
  /// in ascending row order.
  std::vector<std::size_t> random;
  /// (1 - a) / b, or 1 when `random` is empty.
  double amplification = 1.0;
};

/// Throws std::invalid_argument unless 0 <= a, b and a + b <= 1, and b > 0
/// whenever a < 1.
GossSample goss_sample(std::span<const double> gradients, double a, double b, std::uint64_t seed);

/// Sampled variance gain: gradient sums and counts of the random subset are
/// multiplied by the amplification. Restricted to `node_rows` when given;
/// the minimum-size rule applies to raw member counts.
std::optional<double> goss_variance_gain(std::span<const double> gradients, const GossSample& sample,
                                         std::span<const std::uint8_t> feature_bins, std::size_t split_bin,
                                         std::size_t min_samples_leaf = 1,
                                         std::span<const std::size_t> node_rows = {});

struct TreeNode {
  /// -1 for a leaf.
  int feature = -1;
  int bin = 0;
  /// Rows with x[feature] <= threshold go left.
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int depth = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct GbdtModel {
  GbdtParams params;
  FeatureBins bins;
  double base_score = 0.0;
  std::vector<Tree> trees;

  std::size_t features() const { return bins.features(); }
  bool operator==(const GbdtModel&) const = default;
};

/// Emitted for every split chosen during training.
struct SplitEvent {
  std::size_t tree = 0;
  int node = 0;
  int depth = 0;
  int feature = 0;
  int bin = 0;
  double gain = 0.0;
  /// Sampled members of the node and their GOSS weights.
  std::span<const std::size_t> rows;
  std::span<const double> weights;
  /// Gradients of every training row for this tree.
  std::span<const double> gradients;
  const std::vector<std::vector<std::uint8_t>>* binned = nullptr;
};

struct TrainInfo {
  /// Mean logistic loss on the training rows after each tree.
  std::vector<double> train_loss;
  double initial_loss = 0.0;
};

struct TrainOptions {
  std::size_t threads = 1;
  std::function<void(const SplitEvent&)> on_split;
};

/// Binary logistic boosting on a row-major n x p matrix with 0/1 labels.
/// Leaf values are L1 soft-thresholded Newton steps, halved while they would
/// raise the leaf's training loss, so the training loss never increases.
GbdtModel train_gbdt(std::span<const double> rows, std::size_t p, std::span<const int> labels,
                     const GbdtParams& params, std::uint64_t seed, const TrainOptions& options = {},
                     TrainInfo* info = nullptr);

/// Labeled classifier inputs; cloned is the positive class.
GbdtModel train_gbdt(std::span<const ClassifierInput> inputs, const GbdtParams& params, std::uint64_t seed,
                     const TrainOptions& options = {}, TrainInfo* info = nullptr);

/// sigmoid(base_score + learning_rate * sum of tree outputs).
double predict_proba(const GbdtModel& model, std::span<const double> x);
/// Cloned when the probability exceeds threshold.
PairLabel classify(const GbdtModel& model, std::span<const double> x, double threshold = 0.5);

double logistic_loss(std::span<const double> probabilities, std::span<const int> labels);

std::string serialize_gbdt_model(const GbdtModel& model);
GbdtModel parse_gbdt_model(const std::string& text);
void save_gbdt_model(const std::filesystem::path& path, const GbdtModel& model);
GbdtModel load_gbdt_model(const std::filesystem::path& path);

}  // namespace icd
