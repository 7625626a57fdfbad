#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icd/data_model.hpp"

namespace icd {

/// View weights in [post, friend_net, follower_net, profile] order.
using ViewWeights = std::array<double, kViewCount>;

/// Tuned view weights keyed by account masking rate (0.4, 0.5, 0.6); other
/// rates use the nearest tuned level.
ViewWeights default_view_weights(double mask_rate);

struct WgccaOptions {
  ViewWeights weights{1.0, 1.0, 1.0, 1.0};
  std::size_t k = kWgccaFeatureCount;
  /// Ridge added to every X_i'X_i. When unset, each view uses
  /// 1e-6 * trace(X_i'X_i) / d_i.
  std::optional<double> ridge;
};

/// Fitted weighted GCCA embedding.
struct WgccaModel {
  ViewWeights weights{};
  std::size_t k = 0;
  std::array<double, kViewCount> ridge{};
  std::array<Eigen::VectorXd, kViewCount> means;
  std::array<Eigen::MatrixXd, kViewCount> projections;  // U_i, d_i x k
  std::vector<std::string> training_ids;
  Eigen::MatrixXd embedding;  // G, n x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // top-k, descending

  std::size_t view_dim(ViewId v) const { return static_cast<std::size_t>(means[static_cast<std::size_t>(v)].size()); }
};

/// One account's view vectors; nullopt marks an unavailable view.
using AccountViews = std::array<std::optional<std::vector<double>>, kViewCount>;

AccountViews gather_views(std::span<const ViewMatrix, kViewCount> views, std::string_view account_id);

/// Centered data matrix of view `v` over `ids` (rows in the given order).
Eigen::MatrixXd centered_view_matrix(const ViewMatrix& view, std::span<const std::string> ids,
                                     Eigen::VectorXd* means = nullptr);

/// Fits G as the top-k eigenvectors of M = sum_i w_i X_i (X_i'X_i + rI)^-1 X_i'
/// over accounts available in all four views (optionally restricted to
/// `fit_ids`). Column signs are fixed so each column's largest-magnitude entry
/// is positive.
///
/// When the account count exceeds the total view dimension, the eigenproblem
/// is solved through the factor M = Z Z' (Z_i = sqrt(w_i) X_i L_i^-T with
/// L_i L_i' = X_i'X_i + rI), which has the same nonzero spectrum at
/// O(n D^2) cost instead of O(n^3).
WgccaModel fit_wgcca(std::span<const ViewMatrix, kViewCount> views, const WgccaOptions& options = {},
                     const std::vector<std::string>* fit_ids = nullptr);

/// sum_i w_i (x_i - mean_i)' U_i / sum_i w_i when every view is present.
std::optional<std::vector<double>> project_wgcca(const WgccaModel& model, const AccountViews& views);

/// Entries 13-16 from the projection when present, otherwise masked; 1-12
/// copied with their masks.
SingleAccountFeatures assemble_single_features(const SingleAccountFeatures& profile,
                                               const std::optional<std::vector<double>>& wgcca);

/// Objective sum_i w_i ||G - X_i U_i||_F^2 with each U_i chosen optimally
/// (ridge included) for the given orthonormal G.
double wgcca_objective(std::span<const Eigen::MatrixXd, kViewCount> centered, const ViewWeights& weights,
                       std::span<const double, kViewCount> ridge, const Eigen::MatrixXd& g);

void save_wgcca_model(const std::filesystem::path& path, const WgccaModel& model);
WgccaModel load_wgcca_model(const std::filesystem::path& path);

}  // namespace icd
