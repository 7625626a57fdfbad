#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "icd/error.hpp"
#include "icd/imputation.hpp"

namespace icd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_pdf(double z) {
  if (!std::isfinite(z)) return 0.0;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double normal_cdf(double z) {
  if (z == kInf) return 1.0;
  if (z == -kInf) return 0.0;
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

TruncatedMoments truncated_normal_moments(double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) return {std::clamp(mu, lo, hi), 0.0};
  double a = (lo - mu) / sigma;
  double b = (hi - mu) / sigma;
  bool flipped = false;
  if (a > 0.0) {
    // Work in the lower tail where Phi differences keep relative accuracy.
    std::swap(a, b);
    a = -a;
    b = -b;
    flipped = true;
  }
  const double z = normal_cdf(b) - normal_cdf(a);
  double m1 = 0.0;
  double var = 0.0;
  if (z > 1e-14) {
    const double pa = normal_pdf(a);
    const double pb = normal_pdf(b);
    const double apa = std::isfinite(a) ? a * pa : 0.0;
    const double bpb = std::isfinite(b) ? b * pb : 0.0;
    m1 = (pa - pb) / z;
    var = std::max(0.0, 1.0 + (apa - bpb) / z - m1 * m1);
  } else if (std::isfinite(a) && std::isfinite(b)) {
    m1 = 0.5 * (a + b);
    var = (b - a) * (b - a) / 12.0;
  } else {
    // One-sided far tail: Mills-ratio limit; b is finite and very negative here.
    const double t = std::isfinite(b) ? b : a;
    m1 = t + 1.0 / t;
    var = 1.0 / (t * t);
  }
  if (flipped) m1 = -m1;
  return {mu + sigma * m1, sigma * sigma * var};
}

// ---------------------------------------------------------------------------

MarginalTransform MarginalTransform::fit(std::span<const double> observed, std::size_t ordinal_max_levels) {
  if (observed.size() < 2) throw DataError("marginal needs at least two observed values");
  std::vector<double> sorted(observed.begin(), observed.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw DataError("marginal: non-finite observed value");
  }
  std::sort(sorted.begin(), sorted.end());
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) distinct += sorted[i] != sorted[i - 1];
  const MarginalKind kind = distinct <= ordinal_max_levels ? MarginalKind::kOrdinal : MarginalKind::kContinuous;
  return from_table(kind, std::move(sorted));
}

MarginalTransform MarginalTransform::from_table(MarginalKind kind, std::vector<double> sorted_values) {
  if (sorted_values.size() < 2) throw DataError("marginal table needs at least two values");
  if (!std::is_sorted(sorted_values.begin(), sorted_values.end())) {
    throw DataError("marginal table is not sorted");
  }
  MarginalTransform t;
  t.kind_ = kind;
  t.sorted_ = std::move(sorted_values);
  t.build();
  return t;
}

void MarginalTransform::build() {
  const double m = static_cast<double>(sorted_.size());
  winsor_ = 1.0 / (4.0 * std::pow(m, 0.25));
  levels_.clear();
  cuts_.clear();
  if (kind_ != MarginalKind::kOrdinal) return;
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    if (i == 0 || sorted_[i] != sorted_[i - 1]) levels_.push_back(sorted_[i]);
  }
  for (std::size_t k = 0; k + 1 < levels_.size(); ++k) {
    const auto upper = std::upper_bound(sorted_.begin(), sorted_.end(), levels_[k]);
    cuts_.push_back(static_cast<double>(upper - sorted_.begin()) / m);
  }
}

double MarginalTransform::cdf_position(double x) const {
  const auto lower = std::lower_bound(sorted_.begin(), sorted_.end(), x);
  const auto upper = std::upper_bound(lower, sorted_.end(), x);
  const double less = static_cast<double>(lower - sorted_.begin());
  const double equal = static_cast<double>(upper - lower);
  const double m = static_cast<double>(sorted_.size());
  const double pos = (less + 0.5 * equal + 0.5) / (m + 1.0);
  return std::clamp(pos, winsor_, 1.0 - winsor_);
}

double MarginalTransform::to_latent(double x) const { return normal_quantile(cdf_position(x)); }

std::pair<double, double> MarginalTransform::latent_interval(double x) const {
  if (kind_ != MarginalKind::kOrdinal) {
    const double z = to_latent(x);
    return {z, z};
  }
  // Nearest level; unseen values snap to the closest one (lower on ties).
  auto it = std::lower_bound(levels_.begin(), levels_.end(), x);
  std::size_t k = static_cast<std::size_t>(it - levels_.begin());
  if (k == levels_.size()) {
    k = levels_.size() - 1;
  } else if (*it != x && k > 0 && (x - levels_[k - 1]) <= (levels_[k] - x)) {
    --k;
  }
  const double lo = k == 0 ? -kInf : normal_quantile(cuts_[k - 1]);
  const double hi = k + 1 == levels_.size() ? kInf : normal_quantile(cuts_[k]);
  return {lo, hi};
}

double MarginalTransform::from_latent(double z) const {
  const double u = normal_cdf(z);
  if (kind_ == MarginalKind::kOrdinal) {
    for (std::size_t k = 0; k < cuts_.size(); ++k) {
      if (u <= cuts_[k]) return levels_[k];
    }
    return levels_.back();
  }
  const double m = static_cast<double>(sorted_.size());
  const double h = std::clamp(u * (m + 1.0) - 1.0, 0.0, m - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted_.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted_[lo] + frac * (sorted_[hi] - sorted_[lo]);
}

}  // namespace icd
