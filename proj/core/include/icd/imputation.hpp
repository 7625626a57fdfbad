#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "icd/data_model.hpp"

namespace icd {

/// Dense n x p matrix with a per-cell observation mask. Masked cells hold NaN.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  /// All cells masked.
  FeatureMatrix(std::size_t rows, std::size_t cols);

  static FeatureMatrix from_features(std::span<const SingleAccountFeatures> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double value(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  bool observed(std::size_t r, std::size_t c) const { return observed_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, double v);
  void hide(std::size_t r, std::size_t c);

  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::size_t observed_in_column(std::size_t c) const;
  std::size_t observed_in_row(std::size_t r) const;
  std::size_t masked_count() const;

  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  SingleAccountFeatures to_single(std::size_t r) const;

  /// Exact equality, NaN cells compared by mask only.
  bool operator==(const FeatureMatrix& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<unsigned char> observed_;
};

// ---------------------------------------------------------------------------
// Gaussian copula
// ---------------------------------------------------------------------------

enum class MarginalKind { kContinuous, kOrdinal };

/// Empirical marginal f_j = F_j^-1 o Phi for one feature.
///
/// Continuous features map an observation to the latent point
/// Phi^-1(F(x)), with F(x) = rank / (m + 1) clipped to [d, 1 - d],
/// d = 1 / (4 m^(1/4)). Ordinal features map an observation to the latent
/// interval between consecutive cumulative-proportion cut points.
class MarginalTransform {
 public:
  MarginalTransform() = default;
  static MarginalTransform fit(std::span<const double> observed, std::size_t ordinal_max_levels = 20);
  /// Rebuilds a transform from its serialized quantile table.
  static MarginalTransform from_table(MarginalKind kind, std::vector<double> sorted_values);

  MarginalKind kind() const { return kind_; }
  /// Sorted observed values (continuous) or the sorted table with
  /// duplicates (ordinal); this is the serialized state.
  const std::vector<double>& quantile_table() const { return sorted_; }
  const std::vector<double>& levels() const { return levels_; }
  /// Cumulative proportion at or below each level except the last.
  const std::vector<double>& cut_positions() const { return cuts_; }
  double winsor_bound() const { return winsor_; }

  /// Clipped empirical CDF position (continuous features).
  double cdf_position(double x) const;
  /// Phi^-1 of the clipped CDF position (continuous features).
  double to_latent(double x) const;
  /// Latent interval [lo, hi] for an ordinal observation; infinite at the ends.
  std::pair<double, double> latent_interval(double x) const;
  /// f_j(z): quantile mapping back to the observed scale.
  double from_latent(double z) const;

 private:
  void build();

  MarginalKind kind_ = MarginalKind::kContinuous;
  std::vector<double> sorted_;
  std::vector<double> levels_;
  std::vector<double> cuts_;
  double winsor_ = 0.0;
};

struct CopulaModel {
  Eigen::MatrixXd sigma;  // p x p latent correlation
  std::vector<MarginalTransform> marginals;

  std::size_t p() const { return marginals.size(); }
};

struct CopulaEmOptions {
  double tol = 1e-3;
  std::size_t max_iter = 50;
  /// Features with at most this many distinct observed values are ordinal.
  std::size_t ordinal_max_levels = 20;
  /// Coordinate sweeps of truncated-normal updates per E-step.
  std::size_t ordinal_sweeps = 3;
  std::size_t threads = 1;
  bool record_sigma_trace = false;
};

struct CopulaFitInfo {
  std::size_t iterations = 0;
  bool converged = false;
  /// ||S_t - S_{t-1}||_F / ||S_{t-1}||_F per iteration.
  std::vector<double> relative_changes;
  std::vector<Eigen::MatrixXd> sigma_trace;
  std::size_t jittered_patterns = 0;
};

/// EM estimate of the copula correlation. Throws DataError when a feature has
/// fewer than two observed values or a row has none.
CopulaModel fit_copula_em(const FeatureMatrix& data, const CopulaEmOptions& options = {},
                          CopulaFitInfo* info = nullptr);

struct ImputeReport {
  std::size_t imputed_cells = 0;
  /// Rows whose observed block of Sigma needed diagonal jitter.
  std::size_t jittered_rows = 0;
};

/// x_M = f_M(Sigma_MO Sigma_OO^-1 E[z_O | x_O]); observed cells unchanged.
FeatureMatrix impute_copula(const CopulaModel& model, const FeatureMatrix& data, ImputeReport* report = nullptr,
                            std::size_t threads = 1);

void save_copula_model(const std::filesystem::path& path, const CopulaModel& model);
CopulaModel load_copula_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Column means of observed entries; throws DataError on an empty column.
std::vector<double> observed_column_means(const FeatureMatrix& data);

/// Masked entries take the column mean of `reference` (defaults to `data`).
FeatureMatrix impute_mean(const FeatureMatrix& data, const FeatureMatrix* reference = nullptr);

/// Masked entries take the mean over the k nearest `reference` rows that
/// observe the feature. Distance is Euclidean over dimensions observed in
/// both rows, scaled by sqrt(p / shared). Ties go to the lower row index; a
/// row is never its own neighbor when `reference` is null.
FeatureMatrix impute_knn(const FeatureMatrix& data, std::size_t k = 5, const FeatureMatrix* reference = nullptr);

/// Masked entries become 0.
FeatureMatrix impute_zero(const FeatureMatrix& data);

/// Standard normal CDF and quantile.
double normal_cdf(double z);
double normal_quantile(double p);

struct TruncatedMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of N(mu, sigma^2) restricted to [lo, hi].
TruncatedMoments truncated_normal_moments(double mu, double sigma, double lo, double hi);

}  // namespace icd
