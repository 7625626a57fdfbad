#include "icd/pair_features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "icd/error.hpp"
#include "icd/parallel.hpp"
#include "icd/text_io.hpp"

namespace icd {

namespace {

constexpr std::array<std::string_view, kPairFeatureCount> kPairNames = {
    "username_similarity",   "screen_name_similarity", "location_similarity",  "description_similarity",
    "followers_ratio",       "followers_difference",   "friends_difference",   "tweets_difference",
    "favorites_difference",  "account_age_difference",
};

double followers_ratio(double a, double b) {
  a = std::max(a, 0.0);
  b = std::max(b, 0.0);
  return (1.0 + std::min(a, b)) / (1.0 + std::max(a, b));
}

void put_difference(PairFeatureVector& pf, PairFeature f, const std::optional<std::int64_t>& a,
                    const std::optional<std::int64_t>& b) {
  if (a && b) pf.set(f, static_cast<double>(*a > *b ? *a - *b : *b - *a));
}

void put_text_similarities(PairFeatureVector& pf, const AccountRecord& a, const AccountRecord& b,
                           const TfidfModel& tfidf) {
  pf.set(PairFeature::kUsernameSimilarity, jaro_winkler(a.username, b.username).value());
  pf.set(PairFeature::kScreenNameSimilarity, jaro_winkler(a.screen_name, b.screen_name).value());
  if (a.location && b.location) {
    pf.set(PairFeature::kLocationSimilarity, jaro_winkler(*a.location, *b.location).value());
  }
  if (a.description && b.description) {
    pf.set(PairFeature::kDescriptionSimilarity,
           tfidf_cosine(tfidf, normalize_text(*a.description), normalize_text(*b.description)).value());
  }
}

}  // namespace

std::string_view pair_feature_name(std::size_t feature) {
  if (feature >= kPairFeatureCount) throw std::out_of_range("pair feature index out of range");
  return kPairNames[feature];
}

void PairFeatureVector::set(PairFeature f, double v) {
  values[index_of(f)] = v;
  mask[index_of(f)] = true;
}

PairFeatureVector compute_pair_features(const AccountRecord& a, const AccountRecord& b, const TfidfModel& tfidf) {
  PairFeatureVector pf;
  put_text_similarities(pf, a, b, tfidf);
  if (a.follower_count && b.follower_count) {
    pf.set(PairFeature::kFollowersRatio,
           followers_ratio(static_cast<double>(*a.follower_count), static_cast<double>(*b.follower_count)));
  }
  put_difference(pf, PairFeature::kFollowersDifference, a.follower_count, b.follower_count);
  put_difference(pf, PairFeature::kFriendsDifference, a.friend_count, b.friend_count);
  put_difference(pf, PairFeature::kTweetsDifference, a.tweet_count, b.tweet_count);
  put_difference(pf, PairFeature::kFavoritesDifference, a.favorite_count, b.favorite_count);
  put_difference(pf, PairFeature::kAccountAgeDifference, a.created_at_months, b.created_at_months);
  return pf;
}

PairFeatureVector compute_pair_features(const AccountRecord& a, const AccountRecord& b,
                                        const SingleAccountFeatures& fa, const SingleAccountFeatures& fb,
                                        const TfidfModel& tfidf) {
  PairFeatureVector pf;
  put_text_similarities(pf, a, b, tfidf);
  const auto value = [](const SingleAccountFeatures& f, SingleFeature which) {
    const std::size_t i = index_of(which);
    if (!f.observed(i)) throw DataError("pair features: single-account feature '" +
                                        std::string(single_feature_name(i)) + "' is masked");
    return f.values[i];
  };
  const auto diff = [&](PairFeature out, SingleFeature which) {
    pf.set(out, std::abs(value(fa, which) - value(fb, which)));
  };
  pf.set(PairFeature::kFollowersRatio,
         followers_ratio(value(fa, SingleFeature::kFollowerCount), value(fb, SingleFeature::kFollowerCount)));
  diff(PairFeature::kFollowersDifference, SingleFeature::kFollowerCount);
  diff(PairFeature::kFriendsDifference, SingleFeature::kFriendCount);
  diff(PairFeature::kTweetsDifference, SingleFeature::kTweetCount);
  diff(PairFeature::kFavoritesDifference, SingleFeature::kFavoriteCount);
  diff(PairFeature::kAccountAgeDifference, SingleFeature::kAccountAge);
  return pf;
}

const std::vector<std::string>& classifier_column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    n.reserve(kClassifierInputSize);
    for (const char* side : {"a_", "b_"}) {
      for (std::size_t i = 0; i < kSingleFeatureCount; ++i) n.push_back(side + std::string(single_feature_name(i)));
    }
    for (auto name : kPairNames) n.emplace_back(name);
    return n;
  }();
  return names;
}

ClassifierInput assemble_classifier_input(std::string id_a, std::string id_b, const SingleAccountFeatures& fa,
                                          const SingleAccountFeatures& fb, const PairFeatureVector& pf,
                                          std::optional<PairLabel> label) {
  if (!fa.complete() || !fb.complete()) {
    throw DataError("classifier input for (" + id_a + ", " + id_b + "): single-account features not fully imputed");
  }
  const bool swap = id_b < id_a;
  const SingleAccountFeatures& first = swap ? fb : fa;
  const SingleAccountFeatures& second = swap ? fa : fb;
  if (swap) std::swap(id_a, id_b);

  ClassifierInput in;
  in.id_a = std::move(id_a);
  in.id_b = std::move(id_b);
  in.label = label;
  std::copy(first.values.begin(), first.values.end(), in.values.begin());
  std::copy(second.values.begin(), second.values.end(), in.values.begin() + kSingleFeatureCount);
  for (std::size_t i = 0; i < kPairFeatureCount; ++i) {
    in.values[2 * kSingleFeatureCount + i] = pf.observed(i) ? pf.values[i] : kMaskedPairValue;
  }
  return in;
}

std::vector<ClassifierInput> build_classifier_inputs(const AccountTable& accounts,
                                                     std::span<const SingleAccountFeatures> features,
                                                     std::span<const LabeledPair> pairs, const TfidfModel& tfidf,
                                                     std::size_t threads) {
  return build_classifier_inputs(accounts, accounts.records(), features, pairs, tfidf, threads);
}

std::vector<ClassifierInput> build_classifier_inputs(const AccountTable& accounts,
                                                     std::span<const AccountRecord> visible,
                                                     std::span<const SingleAccountFeatures> features,
                                                     std::span<const LabeledPair> pairs, const TfidfModel& tfidf,
                                                     std::size_t threads) {
  if (visible.size() != accounts.size()) throw DataError("classifier inputs: visible records do not match accounts");
  if (features.size() != accounts.size()) {
    throw DataError("classifier inputs: " + std::to_string(features.size()) + " feature rows for " +
                    std::to_string(accounts.size()) + " accounts");
  }
  std::vector<std::pair<std::size_t, std::size_t>> index(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto a = accounts.index_of(pairs[i].id_a);
    const auto b = accounts.index_of(pairs[i].id_b);
    if (!a || !b) {
      throw DataError("pair (" + pairs[i].id_a + ", " + pairs[i].id_b + ") names an unknown account");
    }
    index[i] = {*a, *b};
  }
  std::vector<ClassifierInput> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto [a, b] = index[i];
    const auto pf = compute_pair_features(visible[a], visible[b], features[a], features[b], tfidf);
    out[i] = assemble_classifier_input(pairs[i].id_a, pairs[i].id_b, features[a], features[b], pf, pairs[i].label);
  });
  return out;
}

void write_feature_matrix(const std::filesystem::path& path, std::span<const ClassifierInput> rows) {
  auto out = open_output(path);
  out << "id_a,id_b";
  for (const auto& name : classifier_column_names()) out << ',' << name;
  out << ",label\n";
  for (const auto& row : rows) {
    if (row.id_a.find(',') != std::string::npos || row.id_b.find(',') != std::string::npos) {
      throw DataError("feature matrix: account id contains a comma");
    }
    out << row.id_a << ',' << row.id_b;
    for (double v : row.values) out << ',' << format_double(v);
    out << ',' << (row.label ? label_name(*row.label) : "") << '\n';
  }
}

std::vector<ClassifierInput> load_feature_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty feature matrix");
  {
    const auto header = split(trim(line), ',');
    const auto& names = classifier_column_names();
    bool ok = header.size() == kClassifierInputSize + 3 && header.front() == "id_a" && header[1] == "id_b" &&
              header.back() == "label";
    for (std::size_t i = 0; ok && i < kClassifierInputSize; ++i) ok = header[i + 2] == names[i];
    if (!ok) throw DataError(path.string() + ": unexpected feature matrix header");
  }
  std::vector<ClassifierInput> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    const std::string where = path.string() + " line " + std::to_string(line_no);
    if (fields.size() != kClassifierInputSize + 3) {
      throw DataError(where + ": expected " + std::to_string(kClassifierInputSize + 3) + " fields, got " +
                      std::to_string(fields.size()));
    }
    ClassifierInput row;
    row.id_a = std::string(fields[0]);
    row.id_b = std::string(fields[1]);
    try {
      for (std::size_t i = 0; i < kClassifierInputSize; ++i) row.values[i] = parse_double(fields[i + 2], "feature");
      if (!trim(fields.back()).empty()) row.label = parse_label(fields.back());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace icd
