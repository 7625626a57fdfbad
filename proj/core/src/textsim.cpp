#include "icd/textsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace icd {

namespace detail {
const std::vector<std::string_view>& embedded_stop_words();
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0 && c <= 0xF7) { len = 4; cp = c & 0x07; }
    else if (c >= 0xE0 && c < 0xF0) { len = 3; cp = c & 0x0F; }
    else if (c >= 0xC0 && c < 0xE0) { len = 2; cp = c & 0x1F; }
    bool ok = len == 1 || i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      ok = (cc & 0xC0) == 0x80;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      len = 1;
      cp = c;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

namespace {

std::vector<std::string_view> sorted_stop_words() {
  std::vector<std::string_view> words = detail::embedded_stop_words();
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

double jaro_codepoints(const std::u32string& a, const std::u32string& b) {
  const std::size_t la = a.size();
  const std::size_t lb = b.size();
  if (la == 0 || lb == 0) return 0.0;
  const std::size_t longest = std::max(la, lb);
  const std::size_t window = longest / 2 > 0 ? longest / 2 - 1 : 0;

  std::vector<char> matched_a(la, 0);
  std::vector<char> matched_b(lb, 0);
  std::size_t m = 0;
  for (std::size_t i = 0; i < la; ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(lb, i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!matched_b[j] && a[i] == b[j]) {
        matched_a[i] = 1;
        matched_b[j] = 1;
        ++m;
        break;
      }
    }
  }
  if (m == 0) return 0.0;

  std::size_t transposed = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < la; ++i) {
    if (!matched_a[i]) continue;
    while (!matched_b[j]) ++j;
    if (a[i] != b[j]) ++transposed;
    ++j;
  }
  const double md = static_cast<double>(m);
  const double t = static_cast<double>(transposed) / 2.0;
  return (md / static_cast<double>(la) + md / static_cast<double>(lb) + (md - t) / md) / 3.0;
}

}  // namespace

SimilarityScore::SimilarityScore(double value) {
  constexpr double kSlack = 1e-12;
  if (!(value >= -kSlack && value <= 1.0 + kSlack)) {
    throw std::invalid_argument("similarity score outside [0,1]");
  }
  value_ = std::clamp(value, 0.0, 1.0);
}

std::span<const std::string_view> stop_words() {
  static const std::vector<std::string_view> words = sorted_stop_words();
  return words;
}

bool is_stop_word(std::string_view token) {
  const auto words = stop_words();
  return std::binary_search(words.begin(), words.end(), token);
}

std::string normalize_text(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    if (c < 0x80 && std::isspace(c)) {
      cleaned.push_back(' ');
      continue;
    }
    cleaned.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  std::string out;
  for (const auto& token : tokenize(cleaned)) {
    if (is_stop_word(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && normalized[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < normalized.size() && normalized[i] != ' ') ++i;
    if (i > start) tokens.emplace_back(normalized.substr(start, i - start));
  }
  return tokens;
}

double jaro(std::string_view s1, std::string_view s2) {
  return jaro_codepoints(decode_utf8(s1), decode_utf8(s2));
}

SimilarityScore jaro_winkler(std::string_view s1, std::string_view s2, const JaroWinklerOptions& options) {
  const auto a = decode_utf8(s1);
  const auto b = decode_utf8(s2);
  const double js = jaro_codepoints(a, b);
  std::size_t prefix = 0;
  const std::size_t cap = std::min({options.max_prefix, a.size(), b.size()});
  while (prefix < cap && a[prefix] == b[prefix]) ++prefix;
  return SimilarityScore(js + static_cast<double>(prefix) * options.prefix_scale * (1.0 - js));
}

// ---------------------------------------------------------------------------

TfidfModel::TfidfModel(std::map<std::string, std::size_t, std::less<>> vocabulary, std::vector<double> idf,
                       std::vector<std::size_t> document_frequency, std::size_t corpus_size)
    : vocabulary_(std::move(vocabulary)),
      idf_(std::move(idf)),
      df_(std::move(document_frequency)),
      corpus_size_(corpus_size) {
  if (idf_.size() != vocabulary_.size() || df_.size() != vocabulary_.size()) {
    throw std::invalid_argument("tfidf: vocabulary and idf sizes differ");
  }
}

std::size_t TfidfModel::column_of(std::string_view term) const {
  auto it = vocabulary_.find(term);
  if (it == vocabulary_.end()) throw std::out_of_range("term not in vocabulary");
  return it->second;
}

SparseVector TfidfModel::vectorize(std::string_view normalized) const {
  std::map<std::size_t, double> counts;
  for (const auto& token : tokenize(normalized)) {
    auto it = vocabulary_.find(token);
    if (it != vocabulary_.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  v.reserve(counts.size());
  for (const auto& [col, tf] : counts) v.emplace_back(col, tf * idf_[col]);
  return v;
}

TfidfModel tfidf_fit(std::span<const std::string> corpus) {
  if (corpus.empty()) throw std::invalid_argument("tfidf_fit: empty corpus");
  std::map<std::string, std::size_t, std::less<>> df_by_term;
  for (const auto& doc : corpus) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df_by_term[std::move(t)];
  }
  std::map<std::string, std::size_t, std::less<>> vocabulary;
  std::vector<double> idf;
  std::vector<std::size_t> df;
  const double n = static_cast<double>(corpus.size());
  for (const auto& [term, count] : df_by_term) {
    vocabulary.emplace(term, vocabulary.size());
    df.push_back(count);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfidfModel(std::move(vocabulary), std::move(idf), std::move(df), corpus.size());
}

SimilarityScore tfidf_cosine(const TfidfModel& model, std::string_view d1, std::string_view d2) {
  const auto a = model.vectorize(d1);
  const auto b = model.vectorize(d2);
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [col, w] : a) na += w * w;
  for (const auto& [col, w] : b) nb += w * w;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first == b[j].first) {
      dot += a[i].second * b[j].second;
      ++i;
      ++j;
    } else if (a[i].first < b[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  if (na <= 0.0 || nb <= 0.0) return SimilarityScore(0.0);
  return SimilarityScore(dot / (std::sqrt(na) * std::sqrt(nb)));
}

}  // namespace icd
