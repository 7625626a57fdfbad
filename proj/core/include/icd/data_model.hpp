#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace icd {

// ---------------------------------------------------------------------------
// Single-account feature layout
// ---------------------------------------------------------------------------

inline constexpr std::size_t kProfileFeatureCount = 12;
inline constexpr std::size_t kWgccaFeatureCount = 4;
inline constexpr std::size_t kSingleFeatureCount = kProfileFeatureCount + kWgccaFeatureCount;

/// Column order of the 16-entry single-account vector.
enum class SingleFeature : std::size_t {
  kFriendCount = 0,
  kFollowerCount,
  kAccountAge,
  kTweetCount,
  kListCount,
  kFavoriteCount,
  kHasUrl,
  kHasProfileImage,
  kHasProfileBackground,
  kHasDescription,
  kDescriptionLength,
  kScreenNameLength,
  kWgccaA,
  kWgccaB,
  kWgccaC,
  kWgccaD,
};

constexpr std::size_t index_of(SingleFeature f) { return static_cast<std::size_t>(f); }

/// Zero-based indices of the features that may be missing. The remaining six
/// (account age, the four profile flags, screen-name length) are always known.
inline constexpr std::array<std::size_t, 10> kMissableFeatures = {0, 1, 3, 4, 5, 10, 12, 13, 14, 15};

constexpr bool is_missable(std::size_t feature) {
  for (std::size_t f : kMissableFeatures) {
    if (f == feature) return true;
  }
  return false;
}

std::string_view single_feature_name(std::size_t feature);

/// A 16-entry feature vector and its observation mask. Masked entries hold NaN.
struct SingleAccountFeatures {
  std::array<double, kSingleFeatureCount> values{};
  std::array<bool, kSingleFeatureCount> mask{};

  SingleAccountFeatures();

  bool observed(std::size_t i) const { return mask[i]; }
  void set(std::size_t i, double v);
  void hide(std::size_t i);
  bool complete() const;
};

// ---------------------------------------------------------------------------
// Accounts
// ---------------------------------------------------------------------------

struct AccountRecord {
  std::string account_id;
  std::string username;
  std::string screen_name;
  std::optional<std::string> description;
  std::optional<std::string> location;
  std::int64_t created_at_months = 0;
  std::optional<std::int64_t> friend_count;
  std::optional<std::int64_t> follower_count;
  std::optional<std::int64_t> tweet_count;
  std::optional<std::int64_t> list_count;
  std::optional<std::int64_t> favorite_count;
  bool has_url = false;
  bool has_profile_image = false;
  bool has_profile_background = false;
  bool has_description = false;

  bool operator==(const AccountRecord&) const = default;
};

/// Immutable collection of accounts with unique ids.
///
/// Construction validates every record: nonempty unique ids, nonnegative
/// counters, and `has_description` agreeing with the description text.
class AccountTable {
 public:
  AccountTable() = default;
  explicit AccountTable(std::vector<AccountRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const AccountRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }
  std::span<const AccountRecord> records() const { return records_; }

  const AccountRecord* find(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  bool operator==(const AccountTable& other) const { return records_ == other.records_; }

 private:
  std::vector<AccountRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Calendar date used to turn a registration date into an age in months.
struct CalendarDate {
  int year = 2024;
  int month = 1;
  int day = 1;
};

struct AccountLoadOptions {
  /// Anchor for `created_at` dates. Fixed, never wall-clock time.
  CalendarDate reference_date{};
};

/// Whole months elapsed from `from` to `to`, clamped at zero.
std::int64_t months_between(const CalendarDate& from, const CalendarDate& to);

/// Parses one JSON-lines account record. `line_no` is used in error text.
AccountRecord parse_account_line(std::string_view line, std::size_t line_no,
                                 const AccountLoadOptions& options = {});
std::string format_account_line(const AccountRecord& record);

AccountTable load_accounts(const std::filesystem::path& path, const AccountLoadOptions& options = {});
void write_accounts(const std::filesystem::path& path, const AccountTable& table);

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

enum class ViewId : std::size_t { kPost = 0, kFriendNet, kFollowerNet, kProfile };
inline constexpr std::size_t kViewCount = 4;
inline constexpr std::array<ViewId, kViewCount> kAllViews = {ViewId::kPost, ViewId::kFriendNet,
                                                             ViewId::kFollowerNet, ViewId::kProfile};

std::string_view view_name(ViewId view);
ViewId parse_view_id(std::string_view name);
/// 385 for posts, 128 for each network view, 12 for the profile view.
std::size_t default_view_dim(ViewId view);

/// Per-view embedding rows keyed by account id. An account is available in
/// the view exactly when a row is stored for it.
class ViewMatrix {
 public:
  ViewMatrix() = default;
  ViewMatrix(ViewId view, std::size_t dim);

  ViewId view() const { return view_; }
  std::size_t dim() const { return dim_; }

  /// Throws DataError on wrong length or non-finite entries.
  void set_row(const std::string& account_id, std::vector<double> row);
  bool available(std::string_view account_id) const;
  /// Empty span when unavailable.
  std::span<const double> row(std::string_view account_id) const;

  std::size_t size() const { return rows_.size(); }
  const std::map<std::string, std::vector<double>, std::less<>>& rows() const { return rows_; }

  bool operator==(const ViewMatrix&) const = default;

 private:
  ViewId view_ = ViewId::kPost;
  std::size_t dim_ = 1;
  std::map<std::string, std::vector<double>, std::less<>> rows_;
};

struct ViewLoadReport {
  std::size_t rows_loaded = 0;
  /// Ids present in the file but not in the known account table; not stored.
  std::vector<std::string> unknown_ids;
};

/// Loads "account_id v1 ... v_dim" lines. When `known` is given, rows for ids
/// outside it are skipped and reported.
ViewMatrix load_view_matrix(const std::filesystem::path& path, ViewId view, std::size_t expected_dim,
                            const AccountTable* known = nullptr, ViewLoadReport* report = nullptr);
void write_view_matrix(const std::filesystem::path& path, const ViewMatrix& matrix);

// ---------------------------------------------------------------------------
// Labeled pairs
// ---------------------------------------------------------------------------

enum class PairLabel : std::uint8_t { kGenuine = 0, kCloned = 1 };

std::string_view label_name(PairLabel label);
PairLabel parse_label(std::string_view token);

struct LabeledPair {
  std::string id_a;
  std::string id_b;
  PairLabel label = PairLabel::kGenuine;

  bool operator==(const LabeledPair&) const = default;
};

/// Canonical pair: ids in lexicographic order. Throws DataError on a self-pair.
LabeledPair make_labeled_pair(std::string a, std::string b, PairLabel label);

/// Parses "id_a,id_b,label" (optionally wrapped in parentheses).
LabeledPair parse_pair_line(std::string_view line, std::size_t line_no);
std::vector<LabeledPair> load_pair_labels(const std::filesystem::path& path);
void write_pair_labels(const std::filesystem::path& path, std::span<const LabeledPair> pairs);

// ---------------------------------------------------------------------------
// Dataset bundle and profile features
// ---------------------------------------------------------------------------

/// Accounts, their four views, and labeled pairs. Views are indexed by ViewId.
struct Dataset {
  AccountTable accounts;
  std::array<ViewMatrix, kViewCount> views;
  std::vector<LabeledPair> pairs;

  const ViewMatrix& view(ViewId v) const { return views[static_cast<std::size_t>(v)]; }
};

/// Fixed file names inside a dataset directory.
struct DatasetFiles {
  static constexpr std::string_view kAccounts = "accounts.jsonl";
  static constexpr std::string_view kLabels = "labels.csv";
  static std::string view_file(ViewId view);
};

Dataset load_dataset(const std::filesystem::path& dir, const AccountLoadOptions& options = {});
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Number of Unicode code points in a UTF-8 string (invalid bytes count as one).
std::size_t utf8_length(std::string_view s);

/// Fills entries 1-12 of the single-account vector; 13-16 stay masked. Absent
/// counters stay masked and an absent description has length 0.
SingleAccountFeatures extract_profile_features(const AccountRecord& account);

}  // namespace icd
