#include "icd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "icd/error.hpp"
#include "icd/pair_gen.hpp"
#include "icd/text_io.hpp"
#include "icd/textsim.hpp"
#include "synth_lexicon.hpp"

namespace icd {

namespace {

// Random sub-streams of the generator.
enum Stream : std::uint64_t {
  kNames = 1,
  kLatent,
  kText,
  kViewWeights,
  kViewNoise,
  kClones,
  kNegatives,
  kIds,
  kLocations,
};

constexpr double kCloneLatentNoise = 0.3;
constexpr double kMissingPostViewRate = 0.02;
constexpr double kViewResolution = 1e-4;

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string encode_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::int64_t lognormal_count(double mu, double sigma, double z) {
  return static_cast<std::int64_t>(std::floor(std::exp(mu + sigma * z)));
}

std::int64_t scaled_count(std::int64_t base, double log_mean, double log_sd, Rng& rng) {
  const double f = std::exp(rng.normal(log_mean, log_sd));
  return static_cast<std::int64_t>(std::floor(static_cast<double>(base) * f));
}

std::size_t uniform_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng.below(n)); }

/// Text of exactly `length` code points built from lexicon words.
std::string description_text(std::size_t length, Rng& rng) {
  std::string text;
  while (text.size() < length) {
    if (!text.empty()) text.push_back(' ');
    text += detail::kWords[uniform_index(rng, detail::kWords.size())];
  }
  text.resize(length);
  if (text.back() == ' ') text.back() = 's';
  return text;
}

/// Handle in one of several common styles, unique within `taken`.
std::string make_username(std::string_view first, std::string_view last, double style_z, Rng& rng,
                          const std::set<std::string, std::less<>>& taken) {
  const std::string f = to_lower(first);
  const std::string l = to_lower(last);
  (void)style_z;
  std::string base;
  switch (rng.below(6)) {
    case 0: base = f + "_" + l; break;
    case 1: base = f + l; break;
    case 2: base = f.substr(0, 1) + l; break;
    case 3: base = f + l.substr(0, 1); break;
    case 4: base = l + "." + f; break;
    default: base = l + f.substr(0, 1); break;
  }
  std::string name = base;
  if (rng.bernoulli(0.5)) name += std::to_string(rng.below(100));
  while (taken.contains(name) || decode_utf8(name).size() < 4) name = base + std::to_string(rng.below(10000));
  return name;
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0 - 1e-12); }

}  // namespace

void SynthConfig::validate() const {
  if (n_accounts < 20) throw std::invalid_argument("synth: n_accounts must be at least 20");
  if (!(clone_rate >= 0.0 && clone_rate <= 0.5)) throw std::invalid_argument("synth: clone_rate must be in [0, 0.5]");
  if (!(latent_corr_strength >= 0.0 && latent_corr_strength <= 1.0)) {
    throw std::invalid_argument("synth: latent_corr_strength must be in [0, 1]");
  }
  if (!(view_noise >= 0.0) || !std::isfinite(view_noise)) throw std::invalid_argument("synth: view_noise must be >= 0");
}

Eigen::MatrixXd synthetic_sigma(double strength) {
  // Columns: activity factor, profile factor.
  Eigen::MatrixXd load = Eigen::MatrixXd::Zero(kSingleFeatureCount, 2);
  const auto set = [&](std::size_t f, double a, double b) {
    load(static_cast<Eigen::Index>(f), 0) = a;
    load(static_cast<Eigen::Index>(f), 1) = b;
  };
  set(0, 0.90, 0.10);   // friends
  set(1, 0.92, 0.10);   // followers
  set(2, 0.50, 0.20);   // account age
  set(3, 0.90, 0.00);   // tweets
  set(4, 0.88, 0.15);   // lists
  set(5, 0.88, 0.10);   // favorites
  set(6, 0.20, 0.60);   // has url
  set(7, 0.10, 0.60);   // has image
  set(8, 0.10, 0.55);   // has background
  set(9, 0.10, 0.92);   // has description
  set(10, 0.15, 0.92);  // description length
  set(11, 0.00, 0.50);  // screen-name length
  set(12, 0.95, 0.10);  // view factor
  set(13, 0.10, 0.95);
  set(14, 0.67, 0.67);
  set(15, 0.67, -0.67);
  load *= strength;
  Eigen::MatrixXd sigma = load * load.transpose();
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    const double communality = sigma(i, i);
    if (communality > 0.95) {
      const double s = std::sqrt(0.95 / communality);
      sigma.row(i) *= s;
      sigma.col(i) *= s;
    }
  }
  sigma.diagonal().setOnes();
  return sigma;
}

Eigen::MatrixXd sample_latent_gaussian(const Eigen::MatrixXd& sigma, std::size_t n, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("sample_latent_gaussian: sigma is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const auto p = sigma.rows();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd e(p);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < p; ++c) e(c) = rng.normal();
    out.row(r) = (l * e).transpose();
  }
  return out;
}

SingleAccountFeatures latent_to_features(std::span<const double> z) {
  if (z.size() != kSingleFeatureCount) throw std::invalid_argument("latent_to_features: expected 16 values");
  SingleAccountFeatures f;
  const auto put = [&f](SingleFeature which, double v) { f.set(index_of(which), v); };
  put(SingleFeature::kFriendCount, static_cast<double>(lognormal_count(5.0, 1.0, z[0])));
  put(SingleFeature::kFollowerCount, static_cast<double>(lognormal_count(5.5, 1.5, z[1])));
  put(SingleFeature::kAccountAge, std::floor(121.0 * clamp01(normal_cdf(z[2]))));
  put(SingleFeature::kTweetCount, static_cast<double>(lognormal_count(7.0, 1.5, z[3])));
  put(SingleFeature::kListCount, static_cast<double>(lognormal_count(1.0, 1.2, z[4])));
  put(SingleFeature::kFavoriteCount, static_cast<double>(lognormal_count(6.0, 1.8, z[5])));
  put(SingleFeature::kHasUrl, z[6] > normal_quantile(0.60) ? 1.0 : 0.0);
  put(SingleFeature::kHasProfileImage, z[7] > normal_quantile(0.12) ? 1.0 : 0.0);
  put(SingleFeature::kHasProfileBackground, z[8] > 0.0 ? 1.0 : 0.0);
  const bool has_description = z[9] > normal_quantile(0.16);
  put(SingleFeature::kHasDescription, has_description ? 1.0 : 0.0);
  put(SingleFeature::kDescriptionLength,
      has_description ? 10.0 + std::floor(150.0 * clamp01(normal_cdf(z[10]))) : 0.0);
  put(SingleFeature::kScreenNameLength, 5.0 + std::floor(20.0 * clamp01(normal_cdf(z[11]))));
  for (std::size_t k = 0; k < kWgccaFeatureCount; ++k) f.set(kProfileFeatureCount + k, z[kProfileFeatureCount + k]);
  return f;
}

FeatureMatrix sample_copula_features(const Eigen::MatrixXd& sigma, std::size_t n, std::uint64_t seed) {
  if (sigma.rows() != static_cast<Eigen::Index>(kSingleFeatureCount) || sigma.cols() != sigma.rows()) {
    throw std::invalid_argument("sample_copula_features: sigma must be 16 x 16");
  }
  Rng rng(seed);
  const Eigen::MatrixXd z = sample_latent_gaussian(sigma, n, rng);
  std::vector<SingleAccountFeatures> rows(n);
  std::vector<double> buf(kSingleFeatureCount);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < kSingleFeatureCount; ++c) {
      buf[c] = z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    rows[r] = latent_to_features(buf);
  }
  return FeatureMatrix::from_features(rows);
}

std::string perturb_name(std::string_view name, std::uint64_t seed) {
  const std::u32string s = decode_utf8(name);
  if (s.size() < 4) throw std::invalid_argument("perturb_name: '" + std::string(name) + "' is shorter than 4 characters");
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  Rng rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::u32string out = s;
    switch (rng.below(3)) {
      case 0: {
        std::vector<std::size_t> spots;
        for (std::size_t i = 0; i + 1 < out.size(); ++i) {
          if (out[i] != out[i + 1]) spots.push_back(i);
        }
        if (spots.empty()) continue;
        const std::size_t i = spots[uniform_index(rng, spots.size())];
        std::swap(out[i], out[i + 1]);
        break;
      }
      case 1: {
        const std::size_t i = uniform_index(rng, out.size());
        char32_t c;
        do {
          c = static_cast<char32_t>(kAlphabet[uniform_index(rng, kAlphabet.size())]);
        } while (c == out[i]);
        out[i] = c;
        break;
      }
      default:
        out.push_back(static_cast<char32_t>(kAlphabet[uniform_index(rng, kAlphabet.size())]));
        break;
    }
    std::string result = encode_utf8(out);
    if (result != name && jaro_winkler(name, result).value() >= 0.8) return result;
  }
  throw std::logic_error("perturb_name: no admissible edit found for '" + std::string(name) + "'");
}

SynthDataset generate_synthetic_dataset(const SynthConfig& config) {
  config.validate();
  const Rng root(config.seed);
  const std::size_t n = config.n_accounts;
  const auto n_clones = static_cast<std::size_t>(std::llround(config.clone_rate * static_cast<double>(n)));
  const std::size_t n_genuine = n - n_clones;
  const std::size_t capacity = detail::kFirstNames.size() * detail::kLastNames.size();
  if (n_genuine > capacity) {
    throw DataError("synth: name lexicon supports " + std::to_string(capacity) + " genuine accounts, " +
                    std::to_string(n_genuine) + " requested");
  }

  SynthDataset out;
  out.sigma = synthetic_sigma(config.latent_corr_strength);

  // Ids are a random permutation so that id order carries no information.
  std::vector<std::size_t> id_numbers(n);
  std::iota(id_numbers.begin(), id_numbers.end(), 0);
  {
    Rng rng = root.split(kIds);
    rng.shuffle(std::span<std::size_t>(id_numbers));
  }
  const auto make_id = [&](std::size_t k) {
    std::string digits = std::to_string(id_numbers[k]);
    return "acct" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
  };

  std::vector<std::size_t> combos(capacity);
  std::iota(combos.begin(), combos.end(), 0);
  {
    Rng rng = root.split(kNames);
    for (std::size_t k = 0; k < n_genuine; ++k) {
      std::swap(combos[k], combos[k + uniform_index(rng, capacity - k)]);
    }
  }

  Rng latent_rng = root.split(kLatent);
  const Eigen::MatrixXd z = sample_latent_gaussian(out.sigma, n_genuine, latent_rng);
  Rng text_rng = root.split(kText);
  Rng location_rng = root.split(kLocations);

  std::vector<AccountRecord> records;
  records.reserve(n);
  std::vector<Eigen::VectorXd> factors;
  factors.reserve(n);
  std::vector<SingleAccountFeatures> truth;
  truth.reserve(n);
  std::set<std::string, std::less<>> usernames;
  std::vector<double> zr(kSingleFeatureCount);
  for (std::size_t k = 0; k < n_genuine; ++k) {
    for (std::size_t c = 0; c < kSingleFeatureCount; ++c) {
      zr[c] = z(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
    }
    const SingleAccountFeatures f = latent_to_features(zr);
    const auto first = detail::kFirstNames[combos[k] / detail::kLastNames.size()];
    const auto last = detail::kLastNames[combos[k] % detail::kLastNames.size()];
    const auto value = [&](SingleFeature which) { return f.values[index_of(which)]; };
    const auto count = [&](SingleFeature which) { return static_cast<std::int64_t>(value(which)); };

    AccountRecord r;
    r.account_id = make_id(k);
    r.username = make_username(first, last, zr[11], text_rng, usernames);
    // Screen-name style follows the latent screen-name coordinate.
    if (zr[11] < -0.6) r.screen_name = std::string(first) + std::string(last.substr(0, 1));
    else if (zr[11] < 0.6) r.screen_name = std::string(first) + " " + std::string(last);
    else r.screen_name = std::string(first) + " " + std::string(last) + " " + std::string(detail::kWords[uniform_index(text_rng, detail::kWords.size())]);
    r.created_at_months = count(SingleFeature::kAccountAge);
    r.friend_count = count(SingleFeature::kFriendCount);
    r.follower_count = count(SingleFeature::kFollowerCount);
    r.tweet_count = count(SingleFeature::kTweetCount);
    r.list_count = count(SingleFeature::kListCount);
    r.favorite_count = count(SingleFeature::kFavoriteCount);
    r.has_url = value(SingleFeature::kHasUrl) > 0.5;
    r.has_profile_image = value(SingleFeature::kHasProfileImage) > 0.5;
    r.has_profile_background = value(SingleFeature::kHasProfileBackground) > 0.5;
    r.has_description = value(SingleFeature::kHasDescription) > 0.5;
    if (r.has_description) {
      r.description = description_text(static_cast<std::size_t>(value(SingleFeature::kDescriptionLength)), text_rng);
    }
    if (location_rng.bernoulli(0.75)) {
      r.location = std::string(detail::kCities[uniform_index(location_rng, detail::kCities.size())]);
    }
    usernames.insert(r.username);
    factors.push_back(z.row(static_cast<Eigen::Index>(k)).tail(kWgccaFeatureCount).transpose());
    SingleAccountFeatures t = extract_profile_features(r);
    for (std::size_t c = kProfileFeatureCount; c < kSingleFeatureCount; ++c) t.set(c, zr[c]);
    truth.push_back(t);
    records.push_back(std::move(r));
  }

  // Negative pairs: name-similar genuine accounts.
  std::vector<LabeledPair> pairs;
  {
    const AccountTable genuine(records);
    const auto candidates = generate_candidate_pairs(genuine);
    std::vector<LabeledPair> negatives;
    negatives.reserve(candidates.size());
    for (const auto& c : candidates) negatives.push_back(LabeledPair{c.id_a, c.id_b, PairLabel::kGenuine});
    const std::size_t cap = config.max_negative_ratio * std::max<std::size_t>(n_clones, 1);
    if (config.max_negative_ratio > 0 && negatives.size() > cap) {
      Rng rng = root.split(kNegatives);
      for (std::size_t k = 0; k < cap; ++k) {
        std::swap(negatives[k], negatives[k + uniform_index(rng, negatives.size() - k)]);
      }
      negatives.resize(cap);
    }
    pairs = std::move(negatives);
  }

  // Clones of distinct random victims.
  Rng clone_rng = root.split(kClones);
  std::vector<std::size_t> victims(n_genuine);
  std::iota(victims.begin(), victims.end(), 0);
  for (std::size_t k = 0; k < n_clones; ++k) {
    std::swap(victims[k], victims[k + uniform_index(clone_rng, n_genuine - k)]);
  }
  for (std::size_t k = 0; k < n_clones; ++k) {
    const AccountRecord& v = records[victims[k]];
    AccountRecord c;
    c.account_id = make_id(n_genuine + k);
    std::string username;
    for (std::uint64_t attempt = 0;; ++attempt) {
      username = perturb_name(v.username, clone_rng.next_u64());
      if (!usernames.contains(username)) break;
      if (attempt > 64) throw DataError("synth: no free clone username for '" + v.username + "'");
    }
    if (jaro_winkler(v.username, username).value() < 0.8) {
      throw std::logic_error("synth: clone username similarity below 0.8");
    }
    usernames.insert(username);
    c.username = username;
    c.screen_name = clone_rng.bernoulli(0.5) || decode_utf8(v.screen_name).size() < 4
                        ? v.screen_name
                        : perturb_name(v.screen_name, clone_rng.next_u64());
    if (v.description && clone_rng.bernoulli(0.7)) c.description = v.description;
    c.has_description = c.description.has_value();
    if (v.location && clone_rng.bernoulli(0.5)) c.location = v.location;
    c.created_at_months = static_cast<std::int64_t>(clone_rng.below(25));
    c.friend_count = scaled_count(*v.friend_count, 0.0, 0.25, clone_rng);
    c.follower_count = scaled_count(*v.follower_count, -0.3, 0.3, clone_rng);
    c.tweet_count = scaled_count(*v.tweet_count, -0.5, 0.4, clone_rng);
    c.list_count = scaled_count(*v.list_count, -0.3, 0.3, clone_rng);
    c.favorite_count = scaled_count(*v.favorite_count, -0.3, 0.4, clone_rng);
    c.has_url = clone_rng.bernoulli(0.9) ? v.has_url : !v.has_url;
    c.has_profile_image = clone_rng.bernoulli(0.9) ? v.has_profile_image : !v.has_profile_image;
    c.has_profile_background = clone_rng.bernoulli(0.9) ? v.has_profile_background : !v.has_profile_background;

    Eigen::VectorXd factor = factors[victims[k]];
    for (Eigen::Index j = 0; j < factor.size(); ++j) factor(j) += clone_rng.normal(0.0, kCloneLatentNoise);
    SingleAccountFeatures t = extract_profile_features(c);
    for (std::size_t j = 0; j < kWgccaFeatureCount; ++j) t.set(kProfileFeatureCount + j, factor(static_cast<Eigen::Index>(j)));
    pairs.push_back(make_labeled_pair(c.account_id, v.account_id, PairLabel::kCloned));
    out.clone_ids.push_back(c.account_id);
    factors.push_back(std::move(factor));
    truth.push_back(t);
    records.push_back(std::move(c));
  }

  // Views are noisy linear images of the shared factor.
  Rng weight_rng = root.split(kViewWeights);
  Rng noise_rng = root.split(kViewNoise);
  std::array<Eigen::MatrixXd, kViewCount> weights;
  for (ViewId view : kAllViews) {
    const auto d = static_cast<Eigen::Index>(default_view_dim(view));
    Eigen::MatrixXd& w = weights[static_cast<std::size_t>(view)];
    w.resize(static_cast<Eigen::Index>(kWgccaFeatureCount), d);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) w(i, j) = weight_rng.normal(0.0, 0.5);
    }
    out.dataset.views[static_cast<std::size_t>(view)] = ViewMatrix(view, static_cast<std::size_t>(d));
  }
  for (std::size_t k = 0; k < records.size(); ++k) {
    const bool missing_post = noise_rng.bernoulli(kMissingPostViewRate);
    for (ViewId view : kAllViews) {
      const Eigen::VectorXd x = (factors[k].transpose() * weights[static_cast<std::size_t>(view)]).transpose();
      std::vector<double> row(static_cast<std::size_t>(x.size()));
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double v = x(j) + noise_rng.normal(0.0, config.view_noise);
        row[static_cast<std::size_t>(j)] = std::round(v / kViewResolution) * kViewResolution;
      }
      if (view == ViewId::kPost && missing_post) continue;
      out.dataset.views[static_cast<std::size_t>(view)].set_row(records[k].account_id, std::move(row));
    }
  }

  // Table order is id order.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].account_id < records[b].account_id; });
  std::vector<AccountRecord> sorted;
  std::vector<SingleAccountFeatures> sorted_truth;
  sorted.reserve(records.size());
  for (std::size_t k : order) {
    sorted.push_back(std::move(records[k]));
    sorted_truth.push_back(truth[k]);
  }
  out.dataset.accounts = AccountTable(std::move(sorted));
  out.ground_truth = FeatureMatrix::from_features(sorted_truth);
  std::sort(pairs.begin(), pairs.end(), [](const LabeledPair& a, const LabeledPair& b) {
    return std::tie(a.id_a, a.id_b) < std::tie(b.id_a, b.id_b);
  });
  out.dataset.pairs = std::move(pairs);
  std::sort(out.clone_ids.begin(), out.clone_ids.end());
  return out;
}

void write_synthetic_dataset(const std::filesystem::path& dir, const SynthDataset& synth) {
  write_dataset(dir, synth.dataset);
  auto out = open_output(dir / "ground_truth.csv");
  out << "account_id";
  for (std::size_t c = 0; c < kSingleFeatureCount; ++c) out << ',' << single_feature_name(c);
  out << '\n';
  for (std::size_t r = 0; r < synth.ground_truth.rows(); ++r) {
    out << synth.dataset.accounts[r].account_id;
    for (std::size_t c = 0; c < kSingleFeatureCount; ++c) out << ',' << format_double(synth.ground_truth.value(r, c));
    out << '\n';
  }
}

}  // namespace icd
