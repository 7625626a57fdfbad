#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icd/data_model.hpp"
#include "icd/textsim.hpp"

namespace icd {

enum class PairFeature : std::size_t {
  kUsernameSimilarity = 0,
  kScreenNameSimilarity,
  kLocationSimilarity,
  kDescriptionSimilarity,
  kFollowersRatio,
  kFollowersDifference,
  kFriendsDifference,
  kTweetsDifference,
  kFavoritesDifference,
  kAccountAgeDifference,
};

inline constexpr std::size_t kPairFeatureCount = 10;
inline constexpr std::size_t kClassifierInputSize = 2 * kSingleFeatureCount + kPairFeatureCount;
/// Encoding of a masked pair feature in the classifier input.
inline constexpr double kMaskedPairValue = -1.0;

constexpr std::size_t index_of(PairFeature f) { return static_cast<std::size_t>(f); }
std::string_view pair_feature_name(std::size_t feature);

struct PairFeatureVector {
  std::array<double, kPairFeatureCount> values{};
  std::array<bool, kPairFeatureCount> mask{};

  bool observed(std::size_t i) const { return mask[i]; }
  bool observed(PairFeature f) const { return mask[index_of(f)]; }
  double operator[](PairFeature f) const { return values[index_of(f)]; }
  void set(PairFeature f, double v);
};

/// Pair features from the raw records. Text similarities use the raw strings
/// (Jaro-Winkler) or normalized descriptions (TF-IDF cosine); a similarity is
/// masked when either text is absent, a count feature when either count is.
PairFeatureVector compute_pair_features(const AccountRecord& a, const AccountRecord& b, const TfidfModel& tfidf);

/// As above, but the followers ratio and the five differences are taken from
/// the completed single-account vectors `fa` and `fb`, so they are always
/// observed. Counts below 0 are treated as 0 in the ratio.
PairFeatureVector compute_pair_features(const AccountRecord& a, const AccountRecord& b,
                                        const SingleAccountFeatures& fa, const SingleAccountFeatures& fb,
                                        const TfidfModel& tfidf);

struct ClassifierInput {
  std::string id_a;
  std::string id_b;
  std::array<double, kClassifierInputSize> values{};
  std::optional<PairLabel> label;

  bool operator==(const ClassifierInput&) const = default;
};

/// Column names of the 42 classifier inputs: a_<feature>, b_<feature>, then
/// the pair features.
const std::vector<std::string>& classifier_column_names();

/// [fa | fb | pf] with the accounts ordered by id; masked pair entries become
/// kMaskedPairValue. Throws DataError when fa or fb has a masked entry.
ClassifierInput assemble_classifier_input(std::string id_a, std::string id_b, const SingleAccountFeatures& fa,
                                          const SingleAccountFeatures& fb, const PairFeatureVector& pf,
                                          std::optional<PairLabel> label = std::nullopt);

/// Classifier inputs for every pair. `features[i]` is the completed vector of
/// `accounts[i]`. Throws DataError when a pair names an unknown account.
std::vector<ClassifierInput> build_classifier_inputs(const AccountTable& accounts,
                                                     std::span<const SingleAccountFeatures> features,
                                                     std::span<const LabeledPair> pairs, const TfidfModel& tfidf,
                                                     std::size_t threads = 1);

/// As above, with text features taken from `visible[i]`, a copy of
/// `accounts[i]` that may have fields removed.
std::vector<ClassifierInput> build_classifier_inputs(const AccountTable& accounts,
                                                     std::span<const AccountRecord> visible,
                                                     std::span<const SingleAccountFeatures> features,
                                                     std::span<const LabeledPair> pairs, const TfidfModel& tfidf,
                                                     std::size_t threads = 1);

/// CSV with header id_a,id_b,<42 columns>,label. The label cell is
/// cloned, genuine or empty.
void write_feature_matrix(const std::filesystem::path& path, std::span<const ClassifierInput> rows);
std::vector<ClassifierInput> load_feature_matrix(const std::filesystem::path& path);

}  // namespace icd
