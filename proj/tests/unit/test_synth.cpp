#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "icd/error.hpp"
#include "icd/synth.hpp"
#include "icd/textsim.hpp"
#include "temp_dir.hpp"

using namespace icd;

namespace {

SynthConfig config(std::size_t n, std::uint64_t seed) {
  SynthConfig c;
  c.n_accounts = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(SyntheticSigma, IsAValidCorrelation) {
  for (double strength : {0.0, 0.5, 1.0}) {
    const Eigen::MatrixXd s = synthetic_sigma(strength);
    ASSERT_EQ(s.rows(), 16);
    EXPECT_NEAR((s - s.transpose()).norm(), 0.0, 1e-15);
    for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(s(i, i), 1.0);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().minCoeff(), 0.0);
  }
  EXPECT_TRUE(synthetic_sigma(0.0).isIdentity(1e-15));
}

TEST(PerturbName, OneEditAboveThreshold) {
  for (const std::string name : {"johnsmith", "alice_w", "marta", "xq_91z", "d\xC3\xA9sir\xC3\xA9"}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const std::string p = perturb_name(name, seed);
      EXPECT_NE(p, name);
      EXPECT_GE(jaro_winkler(name, p).value(), 0.8) << name << " -> " << p;
    }
  }
  EXPECT_EQ(perturb_name("johnsmith", 4), perturb_name("johnsmith", 4));
  EXPECT_THROW(perturb_name("bob", 1), std::invalid_argument);
}

TEST(Synth, CountsAndLabels) {
  const SynthDataset s = generate_synthetic_dataset(config(600, 1));
  EXPECT_EQ(s.dataset.accounts.size(), 600u);
  EXPECT_EQ(s.clone_ids.size(), 30u);
  EXPECT_EQ(s.ground_truth.rows(), 600u);
  EXPECT_EQ(s.ground_truth.masked_count(), 0u);
  std::size_t positives = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : s.dataset.pairs) {
    EXPECT_LT(p.id_a, p.id_b);
    EXPECT_TRUE(seen.insert({p.id_a, p.id_b}).second);
    ASSERT_TRUE(s.dataset.accounts.index_of(p.id_a));
    ASSERT_TRUE(s.dataset.accounts.index_of(p.id_b));
    if (p.label == PairLabel::kCloned) ++positives;
  }
  EXPECT_EQ(positives, 30u);
  EXPECT_GT(s.dataset.pairs.size(), positives);
}

TEST(Synth, ClonePairsHaveSimilarUsernames) {
  const SynthDataset s = generate_synthetic_dataset(config(1000, 2));
  for (const auto& p : s.dataset.pairs) {
    if (p.label != PairLabel::kCloned) continue;
    const auto& a = *s.dataset.accounts.find(p.id_a);
    const auto& b = *s.dataset.accounts.find(p.id_b);
    EXPECT_GE(jaro_winkler(a.username, b.username).value(), 0.8);
    EXPECT_NE(a.username, b.username);
  }
}

TEST(Synth, ZeroCloneRateHasNoPositives) {
  SynthConfig c = config(300, 3);
  c.clone_rate = 0.0;
  const SynthDataset s = generate_synthetic_dataset(c);
  EXPECT_TRUE(s.clone_ids.empty());
  for (const auto& p : s.dataset.pairs) EXPECT_EQ(p.label, PairLabel::kGenuine);
}

TEST(Synth, NegativeCapLimitsGenuinePairs) {
  SynthConfig c = config(600, 1);
  c.max_negative_ratio = 2;
  const SynthDataset s = generate_synthetic_dataset(c);
  std::size_t negatives = 0;
  for (const auto& p : s.dataset.pairs) negatives += p.label == PairLabel::kGenuine;
  EXPECT_EQ(negatives, 60u);
}

TEST(Synth, ViewsCoverAccountsWithExpectedDims) {
  const SynthDataset s = generate_synthetic_dataset(config(400, 4));
  for (ViewId v : kAllViews) {
    EXPECT_EQ(s.dataset.view(v).dim(), default_view_dim(v));
    if (v != ViewId::kPost) {
      EXPECT_EQ(s.dataset.view(v).size(), 400u);
    }
  }
}

TEST(Synth, SameSeedGivesIdenticalFiles) {
  testutil::TempDir a, b;
  write_synthetic_dataset(a.path(), generate_synthetic_dataset(config(300, 9)));
  write_synthetic_dataset(b.path(), generate_synthetic_dataset(config(300, 9)));
  for (const char* f : {"accounts.jsonl", "labels.csv", "ground_truth.csv", "view_post.txt", "view_profile.txt"}) {
    EXPECT_EQ(testutil::read_file(a / f), testutil::read_file(b / f)) << f;
  }
  const Dataset loaded = load_dataset(a.path());
  EXPECT_EQ(loaded.accounts.size(), 300u);
  write_synthetic_dataset(b.path(), generate_synthetic_dataset(config(300, 10)));
  EXPECT_NE(testutil::read_file(a / "accounts.jsonl"), testutil::read_file(b / "accounts.jsonl"));
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig c = config(100, 1);
  c.clone_rate = 0.9;
  EXPECT_THROW(generate_synthetic_dataset(c), std::invalid_argument);
}

TEST(CopulaFeatures, EmRecoversGeneratorCorrelationEntrywise) {
  const Eigen::MatrixXd sigma = synthetic_sigma();
  const FeatureMatrix data = sample_copula_features(sigma, 2000, 11);
  EXPECT_EQ(data.masked_count(), 0u);
  const CopulaModel model = fit_copula_em(data);
  for (Eigen::Index i = 0; i < 16; ++i) {
    for (Eigen::Index j = 0; j < 16; ++j) {
      EXPECT_NEAR(model.sigma(i, j), sigma(i, j), 0.2) << i << "," << j;
      if (std::abs(sigma(i, j)) > 0.3) {
        EXPECT_GT(model.sigma(i, j) * sigma(i, j), 0.0) << i << "," << j;
      }
    }
  }
}

TEST(CopulaFeatures, ContinuousBlockNearLatentSampleCorrelation) {
  // Continuous columns carry the full latent rank, so only ties in the
  // rounded counts separate the fit from the latent sample correlation.
  const Eigen::MatrixXd sigma = synthetic_sigma();
  Rng rng(11);
  const Eigen::MatrixXd z = sample_latent_gaussian(sigma, 2000, rng);
  const Eigen::MatrixXd centered = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd sample = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  const CopulaModel model = fit_copula_em(sample_copula_features(sigma, 2000, 11));
  const std::vector<Eigen::Index> continuous{0, 1, 2, 3, 4, 5, 10, 12, 13, 14, 15};
  const Eigen::MatrixXd gap = model.sigma(continuous, continuous) - sample(continuous, continuous);
  EXPECT_LE(gap.cwiseAbs().maxCoeff(), 0.05);
}
