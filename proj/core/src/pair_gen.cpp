#include "icd/pair_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace icd {

namespace {

using Token = std::uint64_t;

struct Posting {
  std::uint32_t row;
  std::uint32_t position;
  std::uint32_t length;
};

struct NameIndex {
  std::vector<std::vector<Token>> tokens;  // per row, frequency ordered
  std::unordered_map<Token, std::vector<Posting>> postings;
  std::size_t min_length = 0;
};

/// Multiset of code points as (code point, occurrence number) tokens.
std::vector<Token> name_tokens(const std::u32string& name) {
  std::unordered_map<char32_t, std::uint32_t> seen;
  std::vector<Token> out;
  out.reserve(name.size());
  for (char32_t c : name) {
    const std::uint32_t k = seen[c]++;
    out.push_back((static_cast<Token>(c) << 24) | k);
  }
  return out;
}

NameIndex build_index(const std::vector<std::u32string>& names) {
  NameIndex index;
  index.tokens.resize(names.size());
  std::unordered_map<Token, std::size_t> frequency;
  for (std::size_t i = 0; i < names.size(); ++i) {
    index.tokens[i] = name_tokens(names[i]);
    for (Token t : index.tokens[i]) ++frequency[t];
  }
  index.min_length = SIZE_MAX;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto& toks = index.tokens[i];
    std::sort(toks.begin(), toks.end(), [&](Token a, Token b) {
      const auto fa = frequency[a];
      const auto fb = frequency[b];
      return fa != fb ? fa < fb : a < b;
    });
    if (!toks.empty()) index.min_length = std::min(index.min_length, toks.size());
    for (std::size_t p = 0; p < toks.size(); ++p) {
      index.postings[toks[p]].push_back(
          {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(toks.size())});
    }
  }
  return index;
}

/// Appends (i, j), i < j, for every pair the prefix filter cannot rule out.
void blocked_candidates(const NameIndex& index, double threshold, std::vector<std::pair<std::uint32_t, std::uint32_t>>& out) {
  const std::size_t n = index.tokens.size();
  std::vector<std::uint32_t> stamp(n, UINT32_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& toks = index.tokens[i];
    const std::size_t la = toks.size();
    if (la == 0) continue;
    const std::size_t loosest = min_matching_characters(la, index.min_length, threshold);
    const std::size_t max_prefix = la - std::min(la, loosest) + 1;
    for (std::size_t pa = 0; pa < std::min(max_prefix, la); ++pa) {
      const auto& list = index.postings.at(toks[pa]);
      auto it = std::upper_bound(list.begin(), list.end(), static_cast<std::uint32_t>(i),
                                 [](std::uint32_t row, const Posting& p) { return row < p.row; });
      for (; it != list.end(); ++it) {
        if (stamp[it->row] == i) continue;
        const std::size_t lb = it->length;
        const std::size_t tau = min_matching_characters(la, lb, threshold);
        if (tau > std::min(la, lb)) continue;
        if (pa < la - tau + 1 && it->position < lb - tau + 1) {
          stamp[it->row] = static_cast<std::uint32_t>(i);
          out.emplace_back(static_cast<std::uint32_t>(i), it->row);
        }
      }
    }
  }
}

}  // namespace

std::size_t min_matching_characters(std::size_t len_a, std::size_t len_b, double threshold) {
  // JW <= J + 0.4 (1 - J), so JW >= t needs J >= (t - 0.4) / 0.6. Since
  // (m - t)/m <= 1, J >= j_min needs m (1/|a| + 1/|b|) >= 3 j_min - 1.
  const double j_min = std::max(0.0, (threshold - 0.4) / 0.6);
  const double c = 3.0 * j_min - 1.0;
  std::size_t tau = 1;
  if (c > 0.0 && len_a > 0 && len_b > 0) {
    const double la = static_cast<double>(len_a);
    const double lb = static_cast<double>(len_b);
    const double bound = c * la * lb / (la + lb);
    tau = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bound - 1e-9)));
  }
  return tau;
}

std::vector<CandidatePair> generate_candidate_pairs(const AccountTable& accounts, const PairGenOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold <= 1.0)) {
    throw std::invalid_argument("pairing threshold must lie in (0, 1]");
  }
  const std::size_t n = accounts.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> candidates;

  if (options.exhaustive) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        candidates.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  } else {
    std::vector<std::u32string> usernames;
    std::vector<std::u32string> screen_names;
    usernames.reserve(n);
    screen_names.reserve(n);
    for (const auto& a : accounts) {
      usernames.push_back(decode_utf8(a.username));
      screen_names.push_back(decode_utf8(a.screen_name));
    }
    blocked_candidates(build_index(usernames), options.threshold, candidates);
    blocked_candidates(build_index(screen_names), options.threshold, candidates);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }

  std::vector<CandidatePair> out;
  for (const auto& [i, j] : candidates) {
    const auto& a = accounts[i];
    const auto& b = accounts[j];
    const double user = jaro_winkler(a.username, b.username).value();
    const double screen = jaro_winkler(a.screen_name, b.screen_name).value();
    if (user < options.threshold && screen < options.threshold) continue;
    CandidatePair p{a.account_id, b.account_id, SimilarityScore(std::max(user, screen))};
    if (p.id_b < p.id_a) std::swap(p.id_a, p.id_b);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
    return std::tie(x.id_a, x.id_b) < std::tie(y.id_a, y.id_b);
  });
  return out;
}

}  // namespace icd
