#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "icd/data_model.hpp"
#include "icd/textsim.hpp"

namespace icd {

/// Two accounts with similar usernames or screen names, ids in canonical order.
struct CandidatePair {
  std::string id_a;
  std::string id_b;
  /// max(JW(usernames), JW(screen names)).
  SimilarityScore name_score;

  bool operator==(const CandidatePair&) const = default;
};

struct PairGenOptions {
  double threshold = 0.8;
  /// Skip the blocking index and score every pair.
  bool exhaustive = false;
};

/// Every unordered pair whose username or screen-name Jaro-Winkler similarity
/// reaches the threshold, sorted by (id_a, id_b).
///
/// Blocking uses an inverted index over per-name character tokens with prefix
/// filtering. JW >= t bounds the Jaro score from below, which in turn bounds
/// the number of matching characters m from below; two names can only share
/// that many characters if their frequency-ordered token prefixes intersect.
/// The index therefore never drops a qualifying pair.
std::vector<CandidatePair> generate_candidate_pairs(const AccountTable& accounts,
                                                    const PairGenOptions& options = {});

/// Smallest number of matching characters two names of these code-point
/// lengths need for Jaro-Winkler (p = 0.1, prefix cap 4) to reach `threshold`.
std::size_t min_matching_characters(std::size_t len_a, std::size_t len_b, double threshold);

}  // namespace icd
