#include "icd/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "icd/error.hpp"
#include "icd/parallel.hpp"
#include "icd/text_io.hpp"

namespace icd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kJitter = 1e-6;
// Rows are reduced in fixed blocks so the accumulation order never depends on
// the thread count.
constexpr std::size_t kRowBlock = 256;

using Pattern = std::vector<bool>;

/// Matrices shared by all rows with the same observed set.
struct PatternCache {
  std::vector<Eigen::Index> obs;
  std::vector<Eigen::Index> mis;
  Eigen::MatrixXd q;        // Sigma_OO^-1
  Eigen::MatrixXd b;        // Sigma_MO Sigma_OO^-1
  Eigen::MatrixXd schur;    // Sigma_MM - B Sigma_OM
  bool jittered = false;
};

PatternCache make_cache(const Eigen::MatrixXd& sigma, const Pattern& pattern) {
  PatternCache c;
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    (pattern[j] ? c.obs : c.mis).push_back(static_cast<Eigen::Index>(j));
  }
  const auto o = static_cast<Eigen::Index>(c.obs.size());
  const auto m = static_cast<Eigen::Index>(c.mis.size());
  Eigen::MatrixXd s_oo = sigma(c.obs, c.obs);
  Eigen::LLT<Eigen::MatrixXd> llt(s_oo);
  if (llt.info() != Eigen::Success) {
    s_oo.diagonal().array() += kJitter;
    llt.compute(s_oo);
    c.jittered = true;
    if (llt.info() != Eigen::Success) throw NumericalError("copula: observed block of Sigma is singular");
  }
  c.q = llt.solve(Eigen::MatrixXd::Identity(o, o));
  if (m > 0) {
    const Eigen::MatrixXd s_mo = sigma(c.mis, c.obs);
    c.b = s_mo * c.q;
    c.schur = sigma(c.mis, c.mis) - c.b * s_mo.transpose();
  }
  return c;
}

struct RowState {
  std::size_t pattern = 0;
  // Latent estimates and variances for the observed coordinates, in the
  // pattern's observed order.
  Eigen::VectorXd z;
  Eigen::VectorXd var;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<Eigen::Index> ordinal;  // positions within the observed list
};

struct PreparedData {
  std::vector<Pattern> patterns;
  std::vector<RowState> rows;
};

PreparedData prepare(const CopulaModel& model, const FeatureMatrix& data) {
  PreparedData prep;
  std::map<Pattern, std::size_t> pattern_ids;
  prep.rows.resize(data.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    Pattern pat(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) pat[j] = data.observed(r, j);
    auto [it, inserted] = pattern_ids.emplace(pat, prep.patterns.size());
    if (inserted) prep.patterns.push_back(pat);
    RowState& st = prep.rows[r];
    st.pattern = it->second;
    const auto o = static_cast<Eigen::Index>(data.observed_in_row(r));
    st.z = Eigen::VectorXd::Zero(o);
    st.var = Eigen::VectorXd::Zero(o);
    st.lo.resize(static_cast<std::size_t>(o));
    st.hi.resize(static_cast<std::size_t>(o));
    Eigen::Index pos = 0;
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (!data.observed(r, j)) continue;
      const auto& marginal = model.marginals[j];
      const auto [lo, hi] = marginal.latent_interval(data.value(r, j));
      st.lo[pos] = lo;
      st.hi[pos] = hi;
      if (marginal.kind() == MarginalKind::kOrdinal) {
        st.ordinal.push_back(pos);
        const auto m = truncated_normal_moments(0.0, 1.0, lo, hi);
        st.z(pos) = m.mean;
        st.var(pos) = m.variance;
      } else {
        st.z(pos) = lo;
      }
      ++pos;
    }
  }
  return prep;
}

/// Coordinate sweeps updating the ordinal latent moments of one row.
void update_ordinal(RowState& st, const PatternCache& cache, std::size_t sweeps) {
  if (st.ordinal.empty()) return;
  const auto o = st.z.size();
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (Eigen::Index a : st.ordinal) {
      const double qaa = cache.q(a, a);
      double acc = 0.0;
      for (Eigen::Index b = 0; b < o; ++b) {
        if (b != a) acc += cache.q(a, b) * st.z(b);
      }
      const double mu = -acc / qaa;
      const double sd = std::sqrt(1.0 / qaa);
      const auto m = truncated_normal_moments(mu, sd, st.lo[a], st.hi[a]);
      st.z(a) = m.mean;
      st.var(a) = m.variance;
    }
  }
}

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd d = cov.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd corr = d.asDiagonal() * cov * d.asDiagonal();
  corr = 0.5 * (corr + corr.transpose());
  corr.diagonal().setOnes();
  return corr;
}

/// Clips negative eigenvalues and restores the unit diagonal.
Eigen::MatrixXd nearest_psd_correlation(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw NumericalError("copula: eigensolve of Sigma failed");
  if (eig.eigenvalues().minCoeff() >= 0.0) return sigma;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd psd = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return to_correlation(psd);
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, kNaN), observed_(rows * cols, 0) {}

FeatureMatrix FeatureMatrix::from_features(std::span<const SingleAccountFeatures> rows) {
  FeatureMatrix m(rows.size(), kSingleFeatureCount);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < kSingleFeatureCount; ++c) {
      if (rows[r].observed(c)) m.set(r, c, rows[r].values[c]);
    }
  }
  return m;
}

void FeatureMatrix::set(std::size_t r, std::size_t c, double v) {
  values_[r * cols_ + c] = v;
  observed_[r * cols_ + c] = 1;
}

void FeatureMatrix::hide(std::size_t r, std::size_t c) {
  values_[r * cols_ + c] = kNaN;
  observed_[r * cols_ + c] = 0;
}

std::size_t FeatureMatrix::observed_in_column(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows_; ++r) n += observed(r, c);
  return n;
}

std::size_t FeatureMatrix::observed_in_row(std::size_t r) const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < cols_; ++c) n += observed(r, c);
  return n;
}

std::size_t FeatureMatrix::masked_count() const {
  return static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), 0));
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < cols_; ++c) {
      if (observed(rows[i], c)) out.set(i, c, value(rows[i], c));
    }
  }
  return out;
}

SingleAccountFeatures FeatureMatrix::to_single(std::size_t r) const {
  if (cols_ != kSingleFeatureCount) throw std::invalid_argument("to_single: matrix must have 16 columns");
  SingleAccountFeatures f;
  for (std::size_t c = 0; c < cols_; ++c) {
    if (observed(r, c)) f.set(c, value(r, c));
  }
  return f;
}

bool FeatureMatrix::operator==(const FeatureMatrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_ || observed_ != other.observed_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (observed_[i] && values_[i] != other.values_[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

CopulaModel fit_copula_em(const FeatureMatrix& data, const CopulaEmOptions& options, CopulaFitInfo* info) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n == 0 || p == 0) throw DataError("copula: empty data matrix");
  if (!(options.tol > 0.0)) throw std::invalid_argument("copula: tol must be positive");
  for (std::size_t r = 0; r < n; ++r) {
    if (data.observed_in_row(r) == 0) throw DataError("copula: row " + std::to_string(r) + " is fully masked");
  }

  CopulaModel model;
  model.marginals.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> obs;
    for (std::size_t r = 0; r < n; ++r) {
      if (data.observed(r, j)) obs.push_back(data.value(r, j));
    }
    if (obs.size() < 2) {
      throw DataError("copula: feature " + std::to_string(j) + " has fewer than two observed values");
    }
    model.marginals.push_back(MarginalTransform::fit(obs, options.ordinal_max_levels));
  }

  CopulaFitInfo local;
  if (p == 1) {
    model.sigma = Eigen::MatrixXd::Ones(1, 1);
    local.converged = true;
    if (info != nullptr) *info = std::move(local);
    return model;
  }

  PreparedData prep = prepare(model, data);

  // Initial Sigma: correlation of the starting latent estimates, missing at 0.
  {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::VectorXd z(static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < n; ++r) {
      z.setZero();
      Eigen::VectorXd var = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
      Eigen::Index pos = 0;
      for (std::size_t j = 0; j < p; ++j) {
        if (!data.observed(r, j)) {
          var(static_cast<Eigen::Index>(j)) = 1.0;
          continue;
        }
        z(static_cast<Eigen::Index>(j)) = prep.rows[r].z(pos);
        var(static_cast<Eigen::Index>(j)) = prep.rows[r].var(pos);
        ++pos;
      }
      s.noalias() += z * z.transpose();
      s.diagonal() += var;
    }
    model.sigma = nearest_psd_correlation(to_correlation(s / static_cast<double>(n)));
  }

  const auto pi = static_cast<Eigen::Index>(p);
  const std::size_t blocks = (n + kRowBlock - 1) / kRowBlock;
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    std::vector<PatternCache> caches;
    caches.reserve(prep.patterns.size());
    for (const auto& pat : prep.patterns) {
      caches.push_back(make_cache(model.sigma, pat));
      local.jittered_patterns += caches.back().jittered;
    }

    std::vector<Eigen::MatrixXd> partial(blocks, Eigen::MatrixXd::Zero(pi, pi));
    parallel_for(blocks, options.threads, [&](std::size_t blk) {
      Eigen::MatrixXd& acc = partial[blk];
      Eigen::VectorXd full(pi);
      const std::size_t end = std::min(n, (blk + 1) * kRowBlock);
      for (std::size_t r = blk * kRowBlock; r < end; ++r) {
        RowState& st = prep.rows[r];
        const PatternCache& c = caches[st.pattern];
        update_ordinal(st, c, options.ordinal_sweeps);
        for (std::size_t a = 0; a < c.obs.size(); ++a) full(c.obs[a]) = st.z(static_cast<Eigen::Index>(a));
        for (std::size_t a = 0; a < c.obs.size(); ++a) {
          acc(c.obs[a], c.obs[a]) += st.var(static_cast<Eigen::Index>(a));
        }
        if (!c.mis.empty()) {
          const Eigen::VectorXd zm = c.b * st.z;
          for (std::size_t a = 0; a < c.mis.size(); ++a) full(c.mis[a]) = zm(static_cast<Eigen::Index>(a));
          // Cov(z_O, z_M) = diag(var_O) B' and Cov(z_M) = Schur + B diag(var_O) B'.
          const Eigen::MatrixXd vb = st.var.asDiagonal() * c.b.transpose();
          const Eigen::MatrixXd cmm = c.schur + c.b * vb;
          for (std::size_t a = 0; a < c.mis.size(); ++a) {
            for (std::size_t b = 0; b < c.mis.size(); ++b) {
              acc(c.mis[a], c.mis[b]) += cmm(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
            for (std::size_t o = 0; o < c.obs.size(); ++o) {
              const double v = vb(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(a));
              acc(c.obs[o], c.mis[a]) += v;
              acc(c.mis[a], c.obs[o]) += v;
            }
          }
        }
        acc.noalias() += full * full.transpose();
      }
    });
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(pi, pi);
    for (const auto& part : partial) s += part;
    s /= static_cast<double>(n);

    Eigen::MatrixXd next = nearest_psd_correlation(to_correlation(s));
    const double change = (next - model.sigma).norm() / model.sigma.norm();
    model.sigma = std::move(next);
    local.relative_changes.push_back(change);
    local.iterations = iter + 1;
    if (options.record_sigma_trace) local.sigma_trace.push_back(model.sigma);
    if (change < options.tol) {
      local.converged = true;
      break;
    }
  }
  if (info != nullptr) *info = std::move(local);
  return model;
}

FeatureMatrix impute_copula(const CopulaModel& model, const FeatureMatrix& data, ImputeReport* report,
                            std::size_t threads) {
  if (data.cols() != model.p() || model.sigma.rows() != static_cast<Eigen::Index>(model.p())) {
    throw DataError("impute_copula: data has " + std::to_string(data.cols()) + " columns, model expects " +
                    std::to_string(model.p()));
  }
  FeatureMatrix out = data;
  ImputeReport local;
  if (data.masked_count() == 0) {
    if (report != nullptr) *report = local;
    return out;
  }
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (data.observed_in_row(r) == 0) throw DataError("impute_copula: row " + std::to_string(r) + " is fully masked");
  }
  PreparedData prep = prepare(model, data);
  std::vector<PatternCache> caches;
  caches.reserve(prep.patterns.size());
  for (const auto& pat : prep.patterns) caches.push_back(make_cache(model.sigma, pat));

  const CopulaEmOptions defaults;
  parallel_for(data.rows(), threads, [&](std::size_t r) {
    RowState& st = prep.rows[r];
    const PatternCache& c = caches[st.pattern];
    if (c.mis.empty()) return;
    update_ordinal(st, c, defaults.ordinal_sweeps);
    const Eigen::VectorXd zm = c.b * st.z;
    for (std::size_t a = 0; a < c.mis.size(); ++a) {
      const auto j = static_cast<std::size_t>(c.mis[a]);
      out.set(r, j, model.marginals[j].from_latent(zm(static_cast<Eigen::Index>(a))));
    }
  });
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const PatternCache& c = caches[prep.rows[r].pattern];
    local.imputed_cells += c.mis.size();
    local.jittered_rows += c.jittered && !c.mis.empty();
  }
  if (report != nullptr) *report = local;
  return out;
}

void save_copula_model(const std::filesystem::path& path, const CopulaModel& model) {
  auto out = open_output(path);
  out << "icd-copula-model v1\n";
  out << "p " << model.p() << '\n';
  out << "sigma\n";
  for (Eigen::Index r = 0; r < model.sigma.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.sigma.cols(); ++c) {
      out << (c ? " " : "") << format_double(model.sigma(r, c));
    }
    out << '\n';
  }
  for (std::size_t j = 0; j < model.p(); ++j) {
    const auto& m = model.marginals[j];
    out << "marginal " << j << ' ' << (m.kind() == MarginalKind::kOrdinal ? "ordinal" : "continuous") << ' '
        << m.quantile_table().size();
    for (double v : m.quantile_table()) out << ' ' << format_double(v);
    out << '\n';
  }
}

CopulaModel load_copula_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string a;
  std::string b;
  in >> a >> b;
  if (a != "icd-copula-model" || b != "v1") throw DataError(path.string() + ": not a v1 copula model");
  in >> a >> b;
  if (a != "p") throw DataError("copula model: expected p");
  const auto p = static_cast<std::size_t>(parse_int(b, "p"));
  in >> a;
  if (a != "sigma") throw DataError("copula model: expected sigma");
  CopulaModel model;
  const auto pi = static_cast<Eigen::Index>(p);
  model.sigma.resize(pi, pi);
  for (Eigen::Index r = 0; r < pi; ++r) {
    for (Eigen::Index c = 0; c < pi; ++c) {
      in >> a;
      model.sigma(r, c) = parse_double(a, "sigma entry");
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    std::string tag;
    std::string idx;
    std::string kind;
    std::string count;
    in >> tag >> idx >> kind >> count;
    if (tag != "marginal" || parse_int(idx, "marginal index") != static_cast<long long>(j)) {
      throw DataError("copula model: marginals out of order");
    }
    const auto m = static_cast<std::size_t>(parse_int(count, "table size"));
    std::vector<double> table(m);
    for (auto& v : table) {
      in >> a;
      v = parse_double(a, "table entry");
    }
    MarginalKind k;
    if (kind == "ordinal") k = MarginalKind::kOrdinal;
    else if (kind == "continuous") k = MarginalKind::kContinuous;
    else throw DataError("copula model: unknown marginal kind '" + kind + "'");
    model.marginals.push_back(MarginalTransform::from_table(k, std::move(table)));
  }
  return model;
}

// ---------------------------------------------------------------------------

std::vector<double> observed_column_means(const FeatureMatrix& data) {
  std::vector<double> means(data.cols(), 0.0);
  for (std::size_t c = 0; c < data.cols(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      if (data.observed(r, c)) {
        sum += data.value(r, c);
        ++count;
      }
    }
    if (count == 0) throw DataError("column " + std::to_string(c) + " has no observed entries");
    means[c] = sum / static_cast<double>(count);
  }
  return means;
}

FeatureMatrix impute_mean(const FeatureMatrix& data, const FeatureMatrix* reference) {
  const FeatureMatrix& ref = reference != nullptr ? *reference : data;
  if (ref.cols() != data.cols()) throw DataError("impute_mean: reference column count differs");
  FeatureMatrix out = data;
  if (data.masked_count() == 0) return out;
  const auto means = observed_column_means(ref);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (!data.observed(r, c)) out.set(r, c, means[c]);
    }
  }
  return out;
}

FeatureMatrix impute_knn(const FeatureMatrix& data, std::size_t k, const FeatureMatrix* reference) {
  if (k < 1) throw std::invalid_argument("impute_knn: k must be at least 1");
  const bool self = reference == nullptr;
  const FeatureMatrix& ref = self ? data : *reference;
  if (ref.cols() != data.cols()) throw DataError("impute_knn: reference column count differs");
  FeatureMatrix out = data;
  if (data.masked_count() == 0) return out;
  const auto means = observed_column_means(ref);
  const std::size_t p = data.cols();

  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(ref.rows());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (data.observed_in_row(r) == p) continue;
    dist.clear();
    for (std::size_t q = 0; q < ref.rows(); ++q) {
      if (self && q == r) continue;
      double sum = 0.0;
      std::size_t shared = 0;
      for (std::size_t c = 0; c < p; ++c) {
        if (data.observed(r, c) && ref.observed(q, c)) {
          const double d = data.value(r, c) - ref.value(q, c);
          sum += d * d;
          ++shared;
        }
      }
      if (shared == 0) continue;
      dist.emplace_back(std::sqrt(sum * static_cast<double>(p) / static_cast<double>(shared)), q);
    }
    std::sort(dist.begin(), dist.end());
    for (std::size_t c = 0; c < p; ++c) {
      if (data.observed(r, c)) continue;
      double sum = 0.0;
      std::size_t used = 0;
      for (const auto& [d, q] : dist) {
        if (!ref.observed(q, c)) continue;
        sum += ref.value(q, c);
        if (++used == k) break;
      }
      out.set(r, c, used > 0 ? sum / static_cast<double>(used) : means[c]);
    }
  }
  return out;
}

FeatureMatrix impute_zero(const FeatureMatrix& data) {
  FeatureMatrix out = data;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < data.cols(); ++c) {
      if (!data.observed(r, c)) out.set(r, c, 0.0);
    }
  }
  return out;
}

}  // namespace icd
