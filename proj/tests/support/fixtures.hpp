#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "icd/data_model.hpp"
#include "icd/pair_gen.hpp"
#include "oracles.hpp"

namespace testutil {

inline std::string random_name(std::mt19937_64& gen, std::size_t min_len, std::size_t max_len) {
  static const std::string alphabet = "abcdeilmnorstu_";
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s(len(gen), 'a');
  for (auto& c : s) c = alphabet[pick(gen)];
  return s;
}

/// One random edit of `s`: substitution, transposition, insertion or deletion.
inline std::string mutate(std::mt19937_64& gen, std::string s) {
  const std::size_t pos = gen() % s.size();
  switch (gen() % 4) {
    case 0: s[pos] = "xyz"[gen() % 3]; break;
    case 1:
      if (pos + 1 < s.size()) std::swap(s[pos], s[pos + 1]);
      break;
    case 2: s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos), 'q'); break;
    default:
      if (s.size() > 1) s.erase(pos, 1);
      break;
  }
  return s;
}

/// Random accounts where roughly a quarter of the names are one-edit
/// variants of an earlier name, so near-duplicates are plentiful.
inline icd::AccountTable random_accounts(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<icd::AccountRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    icd::AccountRecord r;
    r.account_id = "a" + std::to_string(i);
    if (i > 0 && gen() % 4 == 0) {
      const auto& src = records[gen() % records.size()];
      r.username = mutate(gen, src.username);
      r.screen_name = gen() % 2 ? src.screen_name : mutate(gen, src.screen_name);
    } else {
      r.username = random_name(gen, 3, 12);
      r.screen_name = random_name(gen, 3, 14);
    }
    records.push_back(std::move(r));
  }
  return icd::AccountTable(std::move(records));
}

/// Every pair scoring at least `threshold` by the reference Jaro-Winkler,
/// sorted by ids, with the best of the username and screen-name scores.
inline std::vector<std::pair<std::pair<std::string, std::string>, double>> brute_force_pairs(
    const icd::AccountTable& t, double threshold) {
  std::vector<std::pair<std::pair<std::string, std::string>, double>> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const double s = std::max(oracle::jaro_winkler(t[i].username, t[j].username),
                                oracle::jaro_winkler(t[i].screen_name, t[j].screen_name));
      if (s >= threshold) {
        auto a = t[i].account_id;
        auto b = t[j].account_id;
        if (b < a) std::swap(a, b);
        out.push_back({{a, b}, s});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Four views over accounts "v0".."v{n-1}" driven by a shared latent signal.
inline std::array<icd::ViewMatrix, icd::kViewCount> random_views(std::size_t n, const std::array<std::size_t, 4>& dims,
                                                                  std::uint64_t seed, std::size_t shared_rank = 3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd latent(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(shared_rank));
  for (Eigen::Index i = 0; i < latent.size(); ++i) latent.data()[i] = normal(gen);
  std::array<icd::ViewMatrix, icd::kViewCount> views;
  for (std::size_t v = 0; v < icd::kViewCount; ++v) {
    views[v] = icd::ViewMatrix(static_cast<icd::ViewId>(v), dims[v]);
    Eigen::MatrixXd load(static_cast<Eigen::Index>(shared_rank), static_cast<Eigen::Index>(dims[v]));
    for (Eigen::Index i = 0; i < load.size(); ++i) load.data()[i] = normal(gen);
    const Eigen::MatrixXd signal = latent * load;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(dims[v]);
      for (std::size_t d = 0; d < dims[v]; ++d) {
        row[d] = signal(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) + normal(gen);
      }
      views[v].set_row("v" + std::to_string(1000 + i), row);
    }
  }
  return views;
}

}  // namespace testutil
