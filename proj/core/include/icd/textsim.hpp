#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace icd {

/// A similarity value in [0, 1].
class SimilarityScore {
 public:
  constexpr SimilarityScore() = default;
  /// Values within 1e-12 of the range are clamped; anything further out throws.
  explicit SimilarityScore(double value);

  constexpr double value() const { return value_; }
  friend constexpr auto operator<=>(const SimilarityScore&, const SimilarityScore&) = default;

 private:
  double value_ = 0.0;
};

/// The shipped English stop-word list, sorted.
std::span<const std::string_view> stop_words();
bool is_stop_word(std::string_view token);

/// Lowercases ASCII letters, deletes ASCII punctuation, drops stop words and
/// collapses whitespace to single spaces.
std::string normalize_text(std::string_view text);
std::vector<std::string> tokenize(std::string_view normalized);

/// Decodes UTF-8 into code points; invalid bytes map to themselves.
std::u32string decode_utf8(std::string_view s);

/// Jaro similarity over Unicode code points.
double jaro(std::string_view s1, std::string_view s2);

struct JaroWinklerOptions {
  double prefix_scale = 0.1;
  std::size_t max_prefix = 4;
};

/// Standard Jaro-Winkler: JS + l * p * (1 - JS).
SimilarityScore jaro_winkler(std::string_view s1, std::string_view s2, const JaroWinklerOptions& options = {});

using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// Smoothed TF-IDF vocabulary fitted on a corpus of normalized documents.
class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(std::map<std::string, std::size_t, std::less<>> vocabulary, std::vector<double> idf,
             std::vector<std::size_t> document_frequency, std::size_t corpus_size);

  const std::map<std::string, std::size_t, std::less<>>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<std::size_t>& document_frequency() const { return df_; }
  std::size_t corpus_size() const { return corpus_size_; }

  /// Raw-count TF times IDF, sorted by column. Out-of-vocabulary terms are dropped.
  SparseVector vectorize(std::string_view normalized) const;
  std::size_t column_of(std::string_view term) const;

 private:
  std::map<std::string, std::size_t, std::less<>> vocabulary_;
  std::vector<double> idf_;
  std::vector<std::size_t> df_;
  std::size_t corpus_size_ = 0;
};

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1; vocabulary in lexicographic order.
TfidfModel tfidf_fit(std::span<const std::string> corpus);

/// Cosine of the two TF-IDF vectors; 0 when either is all-zero.
SimilarityScore tfidf_cosine(const TfidfModel& model, std::string_view d1, std::string_view d2);

}  // namespace icd
