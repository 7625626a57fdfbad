#include "icd/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "icd/error.hpp"
#include "icd/text_io.hpp"

namespace icd {

namespace {

constexpr std::array<std::string_view, kSingleFeatureCount> kFeatureNames = {
    "friend_count",       "follower_count",     "account_age",        "tweet_count",
    "list_count",         "favorite_count",     "has_url",            "has_profile_image",
    "has_profile_background", "has_description", "description_length", "screen_name_length",
    "wgcca_a",            "wgcca_b",            "wgcca_c",            "wgcca_d",
};

const std::set<std::string, std::less<>>& known_account_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "account_id",  "username",       "screen_name",  "description",
      "location",    "created_at_months", "created_at", "friend_count",
      "follower_count", "tweet_count", "list_count",   "favorite_count",
      "has_url",     "has_profile_image", "has_profile_background", "has_description",
  };
  return keys;
}

CalendarDate parse_date(std::string_view text, std::size_t line_no) {
  // YYYY-MM-DD, optionally followed by a time part which is ignored.
  const auto bad = [&] {
    return DataError("line " + std::to_string(line_no) + ": invalid created_at date '" +
                     std::string(text) + "'");
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw bad();
  CalendarDate d;
  try {
    d.year = static_cast<int>(parse_int(text.substr(0, 4), "year"));
    d.month = static_cast<int>(parse_int(text.substr(5, 2), "month"));
    d.day = static_cast<int>(parse_int(text.substr(8, 2), "day"));
  } catch (const DataError&) {
    throw bad();
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) throw bad();
  return d;
}

std::optional<std::int64_t> optional_counter(const nlohmann::json& j, const char* key,
                                             std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) {
    throw DataError("line " + std::to_string(line_no) + ": field '" + key + "' must be an integer");
  }
  const auto v = it->get<std::int64_t>();
  if (v < 0) {
    throw DataError("line " + std::to_string(line_no) + ": field '" + key + "' is negative");
  }
  return v;
}

std::optional<std::string> optional_text(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw DataError("line " + std::to_string(line_no) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

bool optional_flag(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) return false;
  if (!it->is_boolean()) {
    throw DataError("line " + std::to_string(line_no) + ": field '" + key + "' must be a boolean");
  }
  return it->get<bool>();
}

std::string required_text(const nlohmann::json& j, const char* key, std::size_t line_no) {
  auto value = optional_text(j, key, line_no);
  if (!value) throw DataError("line " + std::to_string(line_no) + ": missing field '" + key + "'");
  return *value;
}

void validate_record(const AccountRecord& r) {
  if (r.account_id.empty()) throw DataError("account record with empty account_id");
  const auto negative = [](const std::optional<std::int64_t>& c) { return c && *c < 0; };
  if (r.created_at_months < 0 || negative(r.friend_count) || negative(r.follower_count) ||
      negative(r.tweet_count) || negative(r.list_count) || negative(r.favorite_count)) {
    throw DataError("account " + r.account_id + ": negative counter");
  }
  const bool text_present = r.description && !r.description->empty();
  if (r.has_description != text_present) {
    throw DataError("account " + r.account_id + ": has_description disagrees with description text");
  }
}

}  // namespace

std::string_view single_feature_name(std::size_t feature) { return kFeatureNames.at(feature); }

SingleAccountFeatures::SingleAccountFeatures() {
  values.fill(std::numeric_limits<double>::quiet_NaN());
  mask.fill(false);
}

void SingleAccountFeatures::set(std::size_t i, double v) {
  values[i] = v;
  mask[i] = true;
}

void SingleAccountFeatures::hide(std::size_t i) {
  values[i] = std::numeric_limits<double>::quiet_NaN();
  mask[i] = false;
}

bool SingleAccountFeatures::complete() const {
  return std::all_of(mask.begin(), mask.end(), [](bool m) { return m; });
}

// ---------------------------------------------------------------------------

AccountTable::AccountTable(std::vector<AccountRecord> records) : records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i]);
    if (!index_.emplace(records_[i].account_id, i).second) {
      throw DataError("duplicate account_id '" + records_[i].account_id + "'");
    }
  }
}

const AccountRecord* AccountTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::optional<std::size_t> AccountTable::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::int64_t months_between(const CalendarDate& from, const CalendarDate& to) {
  std::int64_t months = static_cast<std::int64_t>(to.year - from.year) * 12 + (to.month - from.month);
  if (to.day < from.day) --months;
  return std::max<std::int64_t>(months, 0);
}

AccountRecord parse_account_line(std::string_view line, std::size_t line_no,
                                 const AccountLoadOptions& options) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("line " + std::to_string(line_no) + ": malformed record (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError("line " + std::to_string(line_no) + ": record is not an object");
  for (const auto& [key, value] : j.items()) {
    if (!known_account_keys().contains(key)) {
      throw DataError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
  }

  AccountRecord r;
  r.account_id = required_text(j, "account_id", line_no);
  if (r.account_id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty account_id");
  r.username = required_text(j, "username", line_no);
  r.screen_name = required_text(j, "screen_name", line_no);
  r.description = optional_text(j, "description", line_no);
  if (r.description && r.description->empty()) r.description.reset();
  r.location = optional_text(j, "location", line_no);
  if (r.location && r.location->empty()) r.location.reset();

  const bool has_months = j.contains("created_at_months");
  const bool has_date = j.contains("created_at");
  if (has_months == has_date) {
    throw DataError("line " + std::to_string(line_no) +
                    ": exactly one of created_at_months or created_at is required");
  }
  if (has_months) {
    auto months = optional_counter(j, "created_at_months", line_no);
    if (!months) throw DataError("line " + std::to_string(line_no) + ": created_at_months is null");
    r.created_at_months = *months;
  } else {
    const auto text = required_text(j, "created_at", line_no);
    r.created_at_months = months_between(parse_date(text, line_no), options.reference_date);
  }

  r.friend_count = optional_counter(j, "friend_count", line_no);
  r.follower_count = optional_counter(j, "follower_count", line_no);
  r.tweet_count = optional_counter(j, "tweet_count", line_no);
  r.list_count = optional_counter(j, "list_count", line_no);
  r.favorite_count = optional_counter(j, "favorite_count", line_no);
  r.has_url = optional_flag(j, "has_url", line_no);
  r.has_profile_image = optional_flag(j, "has_profile_image", line_no);
  r.has_profile_background = optional_flag(j, "has_profile_background", line_no);

  const bool text_present = r.description.has_value();
  if (j.contains("has_description") && optional_flag(j, "has_description", line_no) != text_present) {
    throw DataError("line " + std::to_string(line_no) + ": has_description disagrees with description");
  }
  r.has_description = text_present;
  return r;
}

std::string format_account_line(const AccountRecord& r) {
  nlohmann::ordered_json j;
  j["account_id"] = r.account_id;
  j["username"] = r.username;
  j["screen_name"] = r.screen_name;
  if (r.description) j["description"] = *r.description;
  if (r.location) j["location"] = *r.location;
  j["created_at_months"] = r.created_at_months;
  if (r.friend_count) j["friend_count"] = *r.friend_count;
  if (r.follower_count) j["follower_count"] = *r.follower_count;
  if (r.tweet_count) j["tweet_count"] = *r.tweet_count;
  if (r.list_count) j["list_count"] = *r.list_count;
  if (r.favorite_count) j["favorite_count"] = *r.favorite_count;
  j["has_url"] = r.has_url;
  j["has_profile_image"] = r.has_profile_image;
  j["has_profile_background"] = r.has_profile_background;
  j["has_description"] = r.has_description;
  return j.dump();
}

AccountTable load_accounts(const std::filesystem::path& path, const AccountLoadOptions& options) {
  auto in = open_input(path);
  std::vector<AccountRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto record = parse_account_line(line, line_no, options);
    if (auto [it, inserted] = seen.emplace(record.account_id, line_no); !inserted) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate account_id '" +
                      record.account_id + "' (first seen on line " + std::to_string(it->second) + ")");
    }
    records.push_back(std::move(record));
  }
  return AccountTable(std::move(records));
}

void write_accounts(const std::filesystem::path& path, const AccountTable& table) {
  auto out = open_output(path);
  for (const auto& r : table) out << format_account_line(r) << '\n';
}

// ---------------------------------------------------------------------------

std::string_view view_name(ViewId view) {
  switch (view) {
    case ViewId::kPost: return "post";
    case ViewId::kFriendNet: return "friend_net";
    case ViewId::kFollowerNet: return "follower_net";
    case ViewId::kProfile: return "profile";
  }
  return "unknown";
}

ViewId parse_view_id(std::string_view name) {
  for (ViewId v : kAllViews) {
    if (view_name(v) == name) return v;
  }
  throw DataError("unknown view '" + std::string(name) + "'");
}

std::size_t default_view_dim(ViewId view) {
  switch (view) {
    case ViewId::kPost: return 385;
    case ViewId::kFriendNet:
    case ViewId::kFollowerNet: return 128;
    case ViewId::kProfile: return 12;
  }
  return 0;
}

ViewMatrix::ViewMatrix(ViewId view, std::size_t dim) : view_(view), dim_(dim) {
  if (dim == 0) throw std::invalid_argument("view dimension must be positive");
}

void ViewMatrix::set_row(const std::string& account_id, std::vector<double> row) {
  if (row.size() != dim_) {
    throw DataError("view " + std::string(view_name(view_)) + ": row for '" + account_id + "' has " +
                    std::to_string(row.size()) + " entries, expected " + std::to_string(dim_));
  }
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw DataError("view " + std::string(view_name(view_)) + ": non-finite entry for '" +
                      account_id + "'");
    }
  }
  rows_[account_id] = std::move(row);
}

bool ViewMatrix::available(std::string_view account_id) const {
  return rows_.find(account_id) != rows_.end();
}

std::span<const double> ViewMatrix::row(std::string_view account_id) const {
  auto it = rows_.find(account_id);
  if (it == rows_.end()) return {};
  return it->second;
}

ViewMatrix load_view_matrix(const std::filesystem::path& path, ViewId view, std::size_t expected_dim,
                            const AccountTable* known, ViewLoadReport* report) {
  if (expected_dim == 0) throw std::invalid_argument("expected_dim must be positive");
  auto in = open_input(path);
  ViewMatrix matrix(view, expected_dim);
  ViewLoadReport local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    const std::string id(fields[0]);
    if (fields.size() - 1 != expected_dim) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": row for '" + id + "' has " +
                      std::to_string(fields.size() - 1) + " values, expected " +
                      std::to_string(expected_dim));
    }
    std::vector<double> row(expected_dim);
    for (std::size_t k = 0; k < expected_dim; ++k) {
      row[k] = parse_double(fields[k + 1], "view entry");
      if (!std::isfinite(row[k])) {
        throw DataError(path.string() + " line " + std::to_string(line_no) + ": non-finite entry");
      }
    }
    if (matrix.available(id)) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": duplicate row for '" + id + "'");
    }
    if (known != nullptr && !known->contains(id)) {
      local.unknown_ids.push_back(id);
      continue;
    }
    matrix.set_row(id, std::move(row));
    ++local.rows_loaded;
  }
  if (report != nullptr) *report = std::move(local);
  return matrix;
}

void write_view_matrix(const std::filesystem::path& path, const ViewMatrix& matrix) {
  auto out = open_output(path);
  std::string line;
  for (const auto& [id, row] : matrix.rows()) {
    line = id;
    for (double v : row) {
      line += ' ';
      line += format_double(v);
    }
    line += '\n';
    out << line;
  }
}

// ---------------------------------------------------------------------------

std::string_view label_name(PairLabel label) {
  return label == PairLabel::kCloned ? "cloned" : "genuine";
}

PairLabel parse_label(std::string_view token) {
  token = trim(token);
  if (token == "cloned") return PairLabel::kCloned;
  if (token == "genuine") return PairLabel::kGenuine;
  throw DataError("unknown label '" + std::string(token) + "'");
}

LabeledPair make_labeled_pair(std::string a, std::string b, PairLabel label) {
  if (a == b) throw DataError("self-pair for account '" + a + "'");
  if (b < a) std::swap(a, b);
  return LabeledPair{std::move(a), std::move(b), label};
}

LabeledPair parse_pair_line(std::string_view line, std::size_t line_no) {
  line = trim(line);
  if (line.size() >= 2 && line.front() == '(' && line.back() == ')') {
    line = line.substr(1, line.size() - 2);
  }
  const auto fields = split(line, ',');
  if (fields.size() != 3) {
    throw DataError("labels line " + std::to_string(line_no) + ": expected id_a,id_b,label");
  }
  const auto a = trim(fields[0]);
  const auto b = trim(fields[1]);
  if (a.empty() || b.empty()) throw DataError("labels line " + std::to_string(line_no) + ": empty id");
  try {
    return make_labeled_pair(std::string(a), std::string(b), parse_label(fields[2]));
  } catch (const DataError& e) {
    throw DataError("labels line " + std::to_string(line_no) + ": " + e.what());
  }
}

std::vector<LabeledPair> load_pair_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    pairs.push_back(parse_pair_line(line, line_no));
  }
  return pairs;
}

void write_pair_labels(const std::filesystem::path& path, std::span<const LabeledPair> pairs) {
  auto out = open_output(path);
  for (const auto& p : pairs) out << p.id_a << ',' << p.id_b << ',' << label_name(p.label) << '\n';
}

// ---------------------------------------------------------------------------

std::string DatasetFiles::view_file(ViewId view) { return "view_" + std::string(view_name(view)) + ".txt"; }

Dataset load_dataset(const std::filesystem::path& dir, const AccountLoadOptions& options) {
  Dataset d;
  d.accounts = load_accounts(dir / DatasetFiles::kAccounts, options);
  for (ViewId v : kAllViews) {
    const auto path = dir / DatasetFiles::view_file(v);
    // View dimension is taken from the first row so reduced-size views load too.
    std::size_t dim = default_view_dim(v);
    {
      auto in = open_input(path);
      std::string line;
      while (std::getline(in, line)) {
        const auto fields = split_whitespace(line);
        if (!fields.empty()) {
          dim = fields.size() - 1;
          break;
        }
      }
    }
    if (dim == 0) throw DataError(path.string() + ": rows carry no values");
    d.views[static_cast<std::size_t>(v)] = load_view_matrix(path, v, dim, &d.accounts);
  }
  d.pairs = load_pair_labels(dir / DatasetFiles::kLabels);
  for (const auto& p : d.pairs) {
    if (!d.accounts.contains(p.id_a) || !d.accounts.contains(p.id_b)) {
      throw DataError("labels reference unknown account in pair " + p.id_a + "," + p.id_b);
    }
  }
  return d;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  write_accounts(dir / DatasetFiles::kAccounts, dataset.accounts);
  for (ViewId v : kAllViews) write_view_matrix(dir / DatasetFiles::view_file(v), dataset.view(v));
  write_pair_labels(dir / DatasetFiles::kLabels, dataset.pairs);
}

// ---------------------------------------------------------------------------

std::size_t utf8_length(std::string_view s) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++count) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0 && c <= 0xF7) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (len > 1) {
      bool ok = i + len <= s.size();
      for (std::size_t k = 1; ok && k < len; ++k) {
        ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
      }
      if (!ok) len = 1;
    }
    i += len;
  }
  return count;
}

SingleAccountFeatures extract_profile_features(const AccountRecord& a) {
  SingleAccountFeatures f;
  const auto put = [&f](SingleFeature feature, const std::optional<std::int64_t>& v) {
    if (v) f.set(index_of(feature), static_cast<double>(*v));
  };
  put(SingleFeature::kFriendCount, a.friend_count);
  put(SingleFeature::kFollowerCount, a.follower_count);
  f.set(index_of(SingleFeature::kAccountAge), static_cast<double>(a.created_at_months));
  put(SingleFeature::kTweetCount, a.tweet_count);
  put(SingleFeature::kListCount, a.list_count);
  put(SingleFeature::kFavoriteCount, a.favorite_count);
  f.set(index_of(SingleFeature::kHasUrl), a.has_url ? 1.0 : 0.0);
  f.set(index_of(SingleFeature::kHasProfileImage), a.has_profile_image ? 1.0 : 0.0);
  f.set(index_of(SingleFeature::kHasProfileBackground), a.has_profile_background ? 1.0 : 0.0);
  const bool has_text = a.description && !a.description->empty();
  f.set(index_of(SingleFeature::kHasDescription), has_text ? 1.0 : 0.0);
  f.set(index_of(SingleFeature::kDescriptionLength), has_text ? static_cast<double>(utf8_length(*a.description)) : 0.0);
  f.set(index_of(SingleFeature::kScreenNameLength), static_cast<double>(utf8_length(a.screen_name)));
  return f;
}

}  // namespace icd
