#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "icd/error.hpp"
#include "icd/imputation.hpp"
#include "temp_dir.hpp"

using namespace icd;

namespace {

/// n draws from N(0, sigma) pushed through exp for even columns and the
/// identity for odd ones; oracle generator independent of the library RNG.
Eigen::MatrixXd gaussian_sample(const Eigen::MatrixXd& sigma, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  const Eigen::MatrixXd l = sigma.llt().matrixL();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), sigma.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::VectorXd e(sigma.rows());
    for (Eigen::Index j = 0; j < e.size(); ++j) e(j) = normal(gen);
    z.row(i) = (l * e).transpose();
  }
  return z;
}

FeatureMatrix to_matrix(const Eigen::MatrixXd& z, bool transform = true) {
  FeatureMatrix m(static_cast<std::size_t>(z.rows()), static_cast<std::size_t>(z.cols()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double v = transform && j % 2 == 0 ? std::exp(z(i, j)) : z(i, j);
      m.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j), v);
    }
  }
  return m;
}

Eigen::MatrixXd bivariate(double rho) {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, rho, rho, 1.0;
  return s;
}

FeatureMatrix with_mcar(const FeatureMatrix& full, double rate, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution hide(rate);
  FeatureMatrix m = full;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (hide(gen) && m.observed_in_row(i) > 1) m.hide(i, j);
    }
  }
  return m;
}

void expect_observed_unchanged(const FeatureMatrix& in, const FeatureMatrix& out) {
  for (std::size_t i = 0; i < in.rows(); ++i) {
    for (std::size_t j = 0; j < in.cols(); ++j) {
      ASSERT_TRUE(out.observed(i, j));
      if (in.observed(i, j)) {
        ASSERT_EQ(in.value(i, j), out.value(i, j));
      }
    }
  }
}

FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (!std::isnan(rows[i][j])) m.set(i, j, rows[i][j]);
    }
  }
  return m;
}

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST(NormalFunctions, QuantileInvertsCdf) {
  for (double p : {1e-10, 0.001, 0.2, 0.5, 0.77, 0.999999}) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 * 10);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_DOUBLE_EQ(normal_quantile(0.5), 0.0);
}

TEST(NormalFunctions, TruncatedMomentsReference) {
  // Standard normal on [0, inf): mean sqrt(2/pi), variance 1 - 2/pi.
  const auto half = truncated_normal_moments(0.0, 1.0, 0.0, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(half.mean, std::sqrt(2.0 / M_PI), 1e-12);
  EXPECT_NEAR(half.variance, 1.0 - 2.0 / M_PI, 1e-12);
  const auto whole = truncated_normal_moments(0.3, 2.0, -std::numeric_limits<double>::infinity(),
                                              std::numeric_limits<double>::infinity());
  EXPECT_NEAR(whole.mean, 0.3, 1e-12);
  EXPECT_NEAR(whole.variance, 4.0, 1e-12);
  // Far tail interval stays finite and inside the bounds.
  const auto tail = truncated_normal_moments(0.0, 1.0, 8.0, 9.0);
  EXPECT_GT(tail.mean, 8.0);
  EXPECT_LT(tail.mean, 9.0);
}

TEST(Marginal, ContinuousQuantileMappingIsMonotone) {
  std::vector<double> obs;
  for (int i = 0; i < 101; ++i) obs.push_back(std::pow(i * 0.1, 3));
  const MarginalTransform t = MarginalTransform::fit(obs);
  EXPECT_EQ(t.kind(), MarginalKind::kContinuous);
  EXPECT_DOUBLE_EQ(t.from_latent(0.0), obs[50]);
  double prev = -1.0;
  for (double z = -4; z <= 4; z += 0.25) {
    const double x = t.from_latent(z);
    EXPECT_GE(x, prev);
    prev = x;
  }
  EXPECT_LT(t.to_latent(obs[10]), t.to_latent(obs[90]));
}

TEST(Marginal, OrdinalIntervalsPartitionTheLine) {
  const std::vector<double> obs{0, 0, 0, 1, 1, 2, 2, 2, 2, 3};
  const MarginalTransform t = MarginalTransform::fit(obs);
  ASSERT_EQ(t.kind(), MarginalKind::kOrdinal);
  ASSERT_EQ(t.levels().size(), 4u);
  EXPECT_TRUE(std::isinf(t.latent_interval(0).first));
  EXPECT_TRUE(std::isinf(t.latent_interval(3).second));
  EXPECT_DOUBLE_EQ(t.latent_interval(0).second, t.latent_interval(1).first);
  EXPECT_NEAR(t.latent_interval(0).second, normal_quantile(0.3), 1e-12);
  EXPECT_EQ(t.from_latent(t.latent_interval(2).first + 1e-6), 2.0);
}

TEST(CopulaEm, RecoversStrongCorrelation) {
  const FeatureMatrix data = to_matrix(gaussian_sample(bivariate(0.9), 2000, 1));
  const CopulaModel model = fit_copula_em(data);
  EXPECT_NEAR(model.sigma(0, 1), 0.9, 0.05);
}

TEST(CopulaEm, IndependentFeaturesNearIdentity) {
  const FeatureMatrix data = to_matrix(gaussian_sample(Eigen::MatrixXd::Identity(4, 4), 2000, 2));
  const CopulaModel model = fit_copula_em(data);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) {
        EXPECT_NEAR(model.sigma(i, j), 0.0, 0.1);
      }
    }
  }
}

TEST(CopulaEm, SingleFeatureIsUnitCorrelation) {
  const FeatureMatrix data = to_matrix(gaussian_sample(Eigen::MatrixXd::Identity(1, 1), 50, 3));
  const CopulaModel model = fit_copula_em(data);
  ASSERT_EQ(model.sigma.rows(), 1);
  EXPECT_EQ(model.sigma(0, 0), 1.0);
}

TEST(CopulaEm, SigmaStaysACorrelationAndStopsBelowTolerance) {
  Eigen::MatrixXd s(3, 3);
  s << 1, 0.6, 0.3, 0.6, 1, 0.5, 0.3, 0.5, 1;
  const FeatureMatrix data = with_mcar(to_matrix(gaussian_sample(s, 800, 4)), 0.3, 5);
  CopulaEmOptions opts;
  opts.record_sigma_trace = true;
  CopulaFitInfo info;
  const CopulaModel model = fit_copula_em(data, opts, &info);
  ASSERT_FALSE(info.sigma_trace.empty());
  for (const auto& sig : info.sigma_trace) {
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(sig(i, i), 1.0, 1e-12);
    EXPECT_NEAR((sig - sig.transpose()).norm(), 0.0, 1e-12);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sig).eigenvalues().minCoeff(), -1e-10);
  }
  EXPECT_LE(info.iterations, opts.max_iter);
  ASSERT_TRUE(info.converged);
  EXPECT_LT(info.relative_changes.back(), opts.tol);
  EXPECT_EQ(info.relative_changes.size(), info.iterations);
  EXPECT_LT((model.sigma - s).norm(), 0.2);
}

TEST(CopulaEm, MixedOrdinalFeatures) {
  Eigen::MatrixXd s(3, 3);
  s << 1, 0.7, 0.5, 0.7, 1, 0.6, 0.5, 0.6, 1;
  const Eigen::MatrixXd z = gaussian_sample(s, 1500, 6);
  FeatureMatrix data(1500, 3);
  for (std::size_t i = 0; i < 1500; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data.set(i, 0, z(r, 0) > 0.3 ? 1.0 : 0.0);
    data.set(i, 1, std::floor(std::clamp(z(r, 1) * 1.5 + 3.0, 0.0, 6.0)));
    data.set(i, 2, std::exp(z(r, 2)));
  }
  const CopulaModel model = fit_copula_em(with_mcar(data, 0.2, 7));
  EXPECT_EQ(model.marginals[0].kind(), MarginalKind::kOrdinal);
  EXPECT_EQ(model.marginals[2].kind(), MarginalKind::kContinuous);
  EXPECT_NEAR(model.sigma(0, 2), 0.5, 0.12);
  EXPECT_NEAR(model.sigma(1, 2), 0.6, 0.12);
}

TEST(CopulaEm, RejectsEmptyColumnOrRow) {
  FeatureMatrix data = from_rows({{1, 2}, {3, kNa}, {5, kNa}});
  EXPECT_THROW(fit_copula_em(data), DataError);
  FeatureMatrix rows = from_rows({{1, 2}, {kNa, kNa}, {5, 6}, {7, 1}});
  EXPECT_THROW(fit_copula_em(rows), DataError);
}

TEST(CopulaImpute, CompleteInputUnchanged) {
  const FeatureMatrix data = to_matrix(gaussian_sample(bivariate(0.5), 300, 8));
  const CopulaModel model = fit_copula_em(data);
  EXPECT_EQ(impute_copula(model, data), data);
}

TEST(CopulaImpute, ConditionalMeanBeatsColumnMean) {
  const FeatureMatrix full = to_matrix(gaussian_sample(bivariate(0.9), 2000, 9), false);
  FeatureMatrix masked = full;
  for (std::size_t i = 0; i < 500; ++i) masked.hide(i, 1);
  const CopulaModel model = fit_copula_em(masked);
  const FeatureMatrix imputed = impute_copula(model, masked);
  const double mean = observed_column_means(masked)[1];
  double err_copula = 0, err_mean = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    err_copula += std::abs(imputed.value(i, 1) - full.value(i, 1));
    err_mean += std::abs(mean - full.value(i, 1));
  }
  EXPECT_LT(err_copula, 0.7 * err_mean);
}

TEST(CopulaImpute, IdentitySigmaGivesMarginalMedian) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 101; ++i) rows.push_back({static_cast<double>(i * i), static_cast<double>(100 - i) * 0.5});
  rows.push_back({kNa, 3.0});
  const FeatureMatrix data = from_rows(rows);
  CopulaModel model = fit_copula_em(data);
  model.sigma = Eigen::MatrixXd::Identity(2, 2);
  const FeatureMatrix imputed = impute_copula(model, data);
  EXPECT_DOUBLE_EQ(imputed.value(101, 0), 50.0 * 50.0);
}

TEST(CopulaImpute, ObservedCellsNeverChangeAndThreadsAgree) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(5, 5, 0.4);
  s.diagonal().setOnes();
  const FeatureMatrix data = with_mcar(to_matrix(gaussian_sample(s, 700, 10)), 0.35, 11);
  CopulaEmOptions one;
  CopulaEmOptions four;
  four.threads = 4;
  const CopulaModel m1 = fit_copula_em(data, one);
  const CopulaModel m4 = fit_copula_em(data, four);
  EXPECT_TRUE(m1.sigma == m4.sigma);
  const FeatureMatrix a = impute_copula(m1, data, nullptr, 1);
  EXPECT_TRUE(a == impute_copula(m1, data, nullptr, 3));
  expect_observed_unchanged(data, a);
}

TEST(CopulaImpute, SaveLoadRoundTrip) {
  const FeatureMatrix data = with_mcar(to_matrix(gaussian_sample(bivariate(0.7), 300, 12)), 0.2, 13);
  const CopulaModel model = fit_copula_em(data);
  testutil::TempDir dir;
  save_copula_model(dir / "c.txt", model);
  const CopulaModel back = load_copula_model(dir / "c.txt");
  EXPECT_TRUE(back.sigma == model.sigma);
  EXPECT_TRUE(impute_copula(back, data) == impute_copula(model, data));
}

TEST(MeanImpute, HandExamples) {
  const FeatureMatrix a = impute_mean(from_rows({{1}, {kNa}, {3}}));
  EXPECT_EQ(a.value(1, 0), 2.0);
  const FeatureMatrix b = impute_mean(from_rows({{5}, {kNa}}));
  EXPECT_EQ(b.value(1, 0), 5.0);
  const FeatureMatrix full = from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(impute_mean(full), full);
}

TEST(MeanImpute, UsesReferenceStatistics) {
  const FeatureMatrix ref = from_rows({{10}, {20}});
  const FeatureMatrix a = impute_mean(from_rows({{1}, {kNa}}), &ref);
  EXPECT_EQ(a.value(1, 0), 15.0);
}

TEST(KnnImpute, CopiesZeroDistanceNeighbour) {
  const FeatureMatrix data = from_rows({{1, 2, 3}, {1, 2, kNa}, {9, 9, 9}, {5, 7, 1}});
  EXPECT_EQ(impute_knn(data, 1).value(1, 2), 3.0);
}

TEST(KnnImpute, SymmetricNeighboursEqualMean) {
  const FeatureMatrix data = from_rows({{1, 10}, {1, 20}, {1, 60}, {1, kNa}});
  EXPECT_EQ(impute_knn(data, 3).value(3, 1), impute_mean(data).value(3, 1));
}

TEST(KnnImpute, HandDatasetAgainstDistanceTable) {
  // Row 4 observes columns 0 and 1. Scaled distances sqrt(sum * 3 / shared):
  //   row0 (0,0): sqrt((1 + 1) * 3/2) = 1.732
  //   row1 (2,1): sqrt((1 + 0) * 3/2) = 1.225
  //   row2 (5,5): sqrt((16 + 16) * 3/2) = 6.928
  //   row3 (1,1) lacks column 2 so cannot serve it.
  // The two nearest with column 2 are rows 1 and 0: (20 + 10) / 2.
  const FeatureMatrix data =
      from_rows({{0, 0, 10}, {2, 1, 20}, {5, 5, 30}, {1, 1, kNa}, {1, 1, kNa}});
  const FeatureMatrix out = impute_knn(data, 2);
  EXPECT_EQ(out.value(4, 2), 15.0);
  EXPECT_EQ(out.value(3, 2), 15.0);
}

TEST(KnnImpute, TiesGoToLowerIndex) {
  const FeatureMatrix data = from_rows({{0, 1}, {2, 3}, {1, kNa}});
  // Rows 0 and 1 are equidistant from row 2; k = 1 picks row 0.
  EXPECT_EQ(impute_knn(data, 1).value(2, 1), 1.0);
}

TEST(Baselines, ObservedEntriesPreservedOnRandomMasks) {
  std::mt19937_64 gen(14);
  std::normal_distribution<double> normal;
  FeatureMatrix full(120, 6);
  for (std::size_t i = 0; i < 120; ++i) {
    for (std::size_t j = 0; j < 6; ++j) full.set(i, j, normal(gen));
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeatureMatrix data = with_mcar(full, 0.4, seed);
    expect_observed_unchanged(data, impute_mean(data));
    expect_observed_unchanged(data, impute_knn(data, 5));
    expect_observed_unchanged(data, impute_zero(data));
    expect_observed_unchanged(data, impute_copula(fit_copula_em(data), data));
  }
}

TEST(Baselines, ZeroFillsZero) {
  const FeatureMatrix out = impute_zero(from_rows({{1, kNa}, {kNa, 4}}));
  EXPECT_EQ(out.value(0, 1), 0.0);
  EXPECT_EQ(out.value(1, 0), 0.0);
  EXPECT_EQ(out.value(1, 1), 4.0);
}
