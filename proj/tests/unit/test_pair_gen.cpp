#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "icd/pair_gen.hpp"
#include "oracles.hpp"

using namespace icd;

namespace {

AccountRecord account(std::string id, std::string username, std::string screen) {
  AccountRecord r;
  r.account_id = std::move(id);
  r.username = std::move(username);
  r.screen_name = std::move(screen);
  return r;
}

}  // namespace

TEST(PairGen, OneEditUsernamesArePaired) {
  ASSERT_GE(oracle::jaro_winkler("john_smith", "john_smlth"), 0.8);
  const AccountTable t({account("1", "john_smith", "Alpha"), account("2", "john_smlth", "Omega")});
  const auto pairs = generate_candidate_pairs(t);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_NEAR(pairs[0].name_score.value(), oracle::jaro_winkler("john_smith", "john_smlth"), 1e-12);
}

TEST(PairGen, IdenticalScreenNamesScoreOne) {
  const AccountTable t({account("b", "qqq", "Same Name"), account("a", "zzzzzz", "Same Name")});
  const auto pairs = generate_candidate_pairs(t);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].id_a, "a");
  EXPECT_EQ(pairs[0].id_b, "b");
  EXPECT_DOUBLE_EQ(pairs[0].name_score.value(), 1.0);
}

TEST(PairGen, DissimilarNamesAbsent) {
  ASSERT_LT(oracle::jaro_winkler("alice", "zorro"), 0.8);
  const AccountTable t({account("1", "alice", "alice"), account("2", "zorro", "zorro")});
  EXPECT_TRUE(generate_candidate_pairs(t).empty());
}

TEST(PairGen, TranspositionWithoutSharedTrigramIsFound) {
  // "john" and "jhon" share no character trigram yet score above 0.9.
  const AccountTable t({account("1", "john", "p"), account("2", "jhon", "q")});
  EXPECT_EQ(generate_candidate_pairs(t).size(), 1u);
}

TEST(PairGen, MatchesBruteForce) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const AccountTable t = testutil::random_accounts(400, seed);
    for (double threshold : {0.7, 0.8, 0.9}) {
      PairGenOptions opts;
      opts.threshold = threshold;
      const auto blocked = generate_candidate_pairs(t, opts);
      const auto truth = testutil::brute_force_pairs(t, threshold);
      ASSERT_EQ(blocked.size(), truth.size()) << "seed " << seed << " t " << threshold;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        EXPECT_EQ(blocked[i].id_a, truth[i].first.first);
        EXPECT_EQ(blocked[i].id_b, truth[i].first.second);
        EXPECT_NEAR(blocked[i].name_score.value(), truth[i].second, 1e-12);
      }
    }
  }
}

TEST(PairGen, ExhaustiveModeEqualsBlocked) {
  const AccountTable t = testutil::random_accounts(300, 8);
  PairGenOptions opts;
  const auto blocked = generate_candidate_pairs(t, opts);
  opts.exhaustive = true;
  EXPECT_EQ(generate_candidate_pairs(t, opts), blocked);
}

TEST(PairGen, NoSelfOrDuplicatePairs) {
  const AccountTable t = testutil::random_accounts(500, 21);
  const auto pairs = generate_candidate_pairs(t);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : pairs) {
    EXPECT_NE(p.id_a, p.id_b);
    EXPECT_LT(p.id_a, p.id_b);
    EXPECT_TRUE(seen.insert({p.id_a, p.id_b}).second);
  }
}

TEST(PairGen, MinimumMatchBound) {
  // The bound never exceeds what identical strings provide and is tight
  // enough to exclude strings with no common characters.
  for (std::size_t la = 1; la < 15; ++la) {
    for (std::size_t lb = 1; lb < 15; ++lb) {
      const std::size_t m = min_matching_characters(la, lb, 0.8);
      EXPECT_GE(m, 1u);
      if (la == lb) {
        EXPECT_LE(m, la);
      }
    }
  }
}
