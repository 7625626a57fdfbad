#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "icd/data_model.hpp"
#include "icd/imputation.hpp"
#include "icd/random.hpp"

namespace icd {

struct SynthConfig {
  std::size_t n_accounts = 5000;
  /// Clones make up round(clone_rate * n_accounts) of the accounts.
  double clone_rate = 0.05;
  /// Scales every loading of the latent factor model.
  double latent_corr_strength = 1.0;
  /// Standard deviation of the per-entry view noise.
  double view_noise = 0.5;
  /// Keep at most this many negative pairs per planted clone; 0 keeps all.
  std::size_t max_negative_ratio = 0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an out-of-range field.
  void validate() const;
};

struct SynthDataset {
  Dataset dataset;
  /// Complete 16-feature ground truth in account-table order; entries 13-16
  /// hold the latent view factor.
  FeatureMatrix ground_truth;
  /// Correlation of the latent Gaussian that generated the genuine accounts.
  Eigen::MatrixXd sigma;
  std::vector<std::string> clone_ids;
};

/// Latent correlation over the 16 features from an activity factor and a
/// profile factor, loadings scaled by `strength`. Every missable feature
/// loads strongly on one of them.
Eigen::MatrixXd synthetic_sigma(double strength = 1.0);

/// n draws of z ~ N(0, sigma), one row per draw.
Eigen::MatrixXd sample_latent_gaussian(const Eigen::MatrixXd& sigma, std::size_t n, Rng& rng);

/// Pushes a 16-dimensional latent draw through the generator's marginals:
/// lognormal counts, ages in months, thresholded flags, a description length
/// that is 0 without a description, and the raw view factor in 13-16.
SingleAccountFeatures latent_to_features(std::span<const double> z);

/// n fully observed rows of the generator's Gaussian-copula feature model.
FeatureMatrix sample_copula_features(const Eigen::MatrixXd& sigma, std::size_t n, std::uint64_t seed);

/// One edit of `name` (adjacent transposition, substitution or append) with
/// Jaro-Winkler >= 0.8 to the input. Throws std::invalid_argument when the
/// name has fewer than four code points.
std::string perturb_name(std::string_view name, std::uint64_t seed);

/// Throws DataError when the name lexicon cannot supply n distinct accounts.
SynthDataset generate_synthetic_dataset(const SynthConfig& config);

/// write_dataset plus ground_truth.csv.
void write_synthetic_dataset(const std::filesystem::path& dir, const SynthDataset& synth);

}  // namespace icd
