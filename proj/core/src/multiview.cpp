#include "icd/multiview.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "icd/error.hpp"
#include "icd/text_io.hpp"

namespace icd {

namespace {

constexpr std::string_view kModelMagic = "icd-wgcca-model";
constexpr int kModelVersion = 1;

std::vector<std::string> complete_ids(std::span<const ViewMatrix, kViewCount> views,
                                      const std::vector<std::string>* restrict_to) {
  std::vector<std::string> ids;
  for (const auto& [id, row] : views[0].rows()) {
    bool all = true;
    for (std::size_t v = 1; v < kViewCount && all; ++v) all = views[v].available(id);
    if (all) ids.push_back(id);
  }
  if (restrict_to != nullptr) {
    std::set<std::string, std::less<>> allowed(restrict_to->begin(), restrict_to->end());
    std::erase_if(ids, [&](const std::string& id) { return !allowed.contains(id); });
  }
  return ids;
}

void fix_column_signs(Eigen::MatrixXd& g) {
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double a = std::abs(g(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (g(best, c) < 0.0) g.col(c) *= -1.0;
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  std::string token;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(in >> token)) throw DataError("wgcca model: truncated matrix");
      m(r, c) = parse_double(token, "wgcca model entry");
    }
  }
  return m;
}

void expect(std::istream& in, std::string_view word) {
  std::string token;
  if (!(in >> token) || token != word) {
    throw DataError("wgcca model: expected '" + std::string(word) + "', got '" + token + "'");
  }
}

}  // namespace

ViewWeights default_view_weights(double mask_rate) {
  if (mask_rate < 0.45) return {0.25, 1.0, 1.0, 0.25};
  if (mask_rate < 0.55) return {1.0, 1.0, 0.5, 0.25};
  return {0.25, 0.5, 0.5, 0.25};
}

AccountViews gather_views(std::span<const ViewMatrix, kViewCount> views, std::string_view account_id) {
  AccountViews out;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    const auto row = views[v].row(account_id);
    if (!row.empty()) out[v] = std::vector<double>(row.begin(), row.end());
  }
  return out;
}

Eigen::MatrixXd centered_view_matrix(const ViewMatrix& view, std::span<const std::string> ids,
                                     Eigen::VectorXd* means) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto d = static_cast<Eigen::Index>(view.dim());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = view.row(ids[static_cast<std::size_t>(r)]);
    if (row.empty()) throw DataError("view " + std::string(view_name(view.view())) + " has no row for " + ids[r]);
    x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), d);
  }
  Eigen::VectorXd mu = x.colwise().mean().transpose();
  x.rowwise() -= mu.transpose();
  if (means != nullptr) *means = std::move(mu);
  return x;
}

WgccaModel fit_wgcca(std::span<const ViewMatrix, kViewCount> views, const WgccaOptions& options,
                     const std::vector<std::string>* fit_ids) {
  if (options.k < 1) throw std::invalid_argument("wgcca: k must be at least 1");
  double weight_sum = 0.0;
  for (double w : options.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("wgcca: weights must be nonnegative");
    weight_sum += w;
  }
  if (weight_sum <= 0.0) throw std::invalid_argument("wgcca: all view weights are zero");
  if (options.ridge && !(*options.ridge >= 0.0)) throw std::invalid_argument("wgcca: ridge must be >= 0");

  WgccaModel model;
  model.weights = options.weights;
  model.k = options.k;
  model.training_ids = complete_ids(views, fit_ids);
  const auto n = static_cast<Eigen::Index>(model.training_ids.size());
  const auto k = static_cast<Eigen::Index>(options.k);
  if (n < k + 1) {
    throw DataError("wgcca: need at least " + std::to_string(k + 1) + " accounts with all four views, have " +
                    std::to_string(n));
  }

  std::array<Eigen::MatrixXd, kViewCount> x;
  std::array<Eigen::LLT<Eigen::MatrixXd>, kViewCount> chol;
  Eigen::Index total_dim = 0;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    x[v] = centered_view_matrix(views[v], model.training_ids, &model.means[v]);
    const Eigen::Index d = x[v].cols();
    Eigen::MatrixXd gram = x[v].transpose() * x[v];
    double r = 0.0;
    if (options.ridge) {
      r = *options.ridge;
    } else {
      const double tr = gram.trace();
      r = tr > 0.0 ? 1e-6 * tr / static_cast<double>(d) : 1.0;
    }
    model.ridge[v] = r;
    gram.diagonal().array() += r;
    chol[v].compute(gram);
    if (chol[v].info() != Eigen::Success) {
      throw NumericalError("wgcca: X'X + ridge*I is not positive definite for view " +
                           std::string(view_name(static_cast<ViewId>(v))) + "; increase the ridge");
    }
    if (options.weights[v] > 0.0) total_dim += d;
  }

  Eigen::MatrixXd g(n, k);
  Eigen::VectorXd eigenvalues(k);
  if (n <= total_dim) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t v = 0; v < kViewCount; ++v) {
      if (options.weights[v] <= 0.0) continue;
      // B = L^-1 X', so B'B = X (X'X + rI)^-1 X'.
      const Eigen::MatrixXd b = chol[v].matrixL().solve(x[v].transpose());
      m.noalias() += options.weights[v] * (b.transpose() * b);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw NumericalError("wgcca: eigensolve did not converge");
    for (Eigen::Index c = 0; c < k; ++c) {
      g.col(c) = eig.eigenvectors().col(n - 1 - c);
      eigenvalues(c) = eig.eigenvalues()(n - 1 - c);
    }
  } else {
    Eigen::MatrixXd z(n, total_dim);
    Eigen::Index offset = 0;
    for (std::size_t v = 0; v < kViewCount; ++v) {
      if (options.weights[v] <= 0.0) continue;
      const Eigen::Index d = x[v].cols();
      z.middleCols(offset, d) =
          std::sqrt(options.weights[v]) * chol[v].matrixL().solve(x[v].transpose()).transpose();
      offset += d;
    }
    const Eigen::MatrixXd c = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw NumericalError("wgcca: eigensolve did not converge");
    const double top = eig.eigenvalues()(total_dim - 1);
    for (Eigen::Index col = 0; col < k; ++col) {
      const double lambda = eig.eigenvalues()(total_dim - 1 - col);
      if (!(lambda > 1e-12 * std::max(top, 1e-300))) {
        throw NumericalError("wgcca: fused views have rank below k");
      }
      g.col(col) = z * eig.eigenvectors().col(total_dim - 1 - col) / std::sqrt(lambda);
      eigenvalues(col) = lambda;
    }
    // Re-orthonormalize against round-off; the span is unchanged.
    for (Eigen::Index col = 0; col < k; ++col) {
      for (Eigen::Index prev = 0; prev < col; ++prev) g.col(col) -= g.col(prev).dot(g.col(col)) * g.col(prev);
      g.col(col).normalize();
    }
  }
  fix_column_signs(g);
  model.embedding = std::move(g);
  model.eigenvalues = std::move(eigenvalues);

  for (std::size_t v = 0; v < kViewCount; ++v) {
    model.projections[v] = chol[v].solve(x[v].transpose() * model.embedding);
  }
  return model;
}

std::optional<std::vector<double>> project_wgcca(const WgccaModel& model, const AccountViews& views) {
  for (const auto& v : views) {
    if (!v) return std::nullopt;
  }
  const auto k = static_cast<Eigen::Index>(model.k);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(k);
  double weight_sum = 0.0;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    const auto& row = *views[v];
    const auto d = model.means[v].size();
    if (static_cast<Eigen::Index>(row.size()) != d) {
      throw DataError("wgcca projection: view " + std::string(view_name(static_cast<ViewId>(v))) + " has " +
                      std::to_string(row.size()) + " entries, expected " + std::to_string(d));
    }
    if (model.weights[v] <= 0.0) continue;
    const Eigen::RowVectorXd centered =
        Eigen::Map<const Eigen::RowVectorXd>(row.data(), d) - model.means[v].transpose();
    acc.noalias() += model.weights[v] * (centered * model.projections[v]);
    weight_sum += model.weights[v];
  }
  acc /= weight_sum;
  return std::vector<double>(acc.data(), acc.data() + k);
}

SingleAccountFeatures assemble_single_features(const SingleAccountFeatures& profile,
                                               const std::optional<std::vector<double>>& wgcca) {
  SingleAccountFeatures out;
  for (std::size_t i = 0; i < kProfileFeatureCount; ++i) {
    if (profile.observed(i)) out.set(i, profile.values[i]);
  }
  if (wgcca) {
    if (wgcca->size() != kWgccaFeatureCount) {
      throw std::invalid_argument("assemble_single_features: WGCCA vector must have 4 entries");
    }
    for (std::size_t i = 0; i < kWgccaFeatureCount; ++i) out.set(kProfileFeatureCount + i, (*wgcca)[i]);
  }
  return out;
}

double wgcca_objective(std::span<const Eigen::MatrixXd, kViewCount> centered, const ViewWeights& weights,
                       std::span<const double, kViewCount> ridge, const Eigen::MatrixXd& g) {
  double total = 0.0;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    if (weights[v] <= 0.0) continue;
    const auto& x = centered[v];
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += ridge[v];
    const Eigen::MatrixXd u = gram.llt().solve(x.transpose() * g);
    total += weights[v] * ((g - x * u).squaredNorm() + ridge[v] * u.squaredNorm());
  }
  return total;
}

void save_wgcca_model(const std::filesystem::path& path, const WgccaModel& model) {
  auto out = open_output(path);
  out << kModelMagic << " v" << kModelVersion << '\n';
  out << "k " << model.k << '\n';
  out << "weights";
  for (double w : model.weights) out << ' ' << format_double(w);
  out << '\n';
  for (std::size_t v = 0; v < kViewCount; ++v) {
    const auto& u = model.projections[v];
    out << "view " << view_name(static_cast<ViewId>(v)) << " dim " << u.rows() << " ridge "
        << format_double(model.ridge[v]) << '\n';
    out << "mean";
    for (Eigen::Index i = 0; i < model.means[v].size(); ++i) out << ' ' << format_double(model.means[v](i));
    out << '\n';
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      out << "u";
      for (Eigen::Index c = 0; c < u.cols(); ++c) out << ' ' << format_double(u(r, c));
      out << '\n';
    }
  }
}

WgccaModel load_wgcca_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string magic;
  std::string version;
  in >> magic >> version;
  if (magic != kModelMagic || version != "v" + std::to_string(kModelVersion)) {
    throw DataError(path.string() + ": not a v1 wgcca model");
  }
  WgccaModel model;
  std::string token;
  expect(in, "k");
  in >> token;
  model.k = static_cast<std::size_t>(parse_int(token, "k"));
  expect(in, "weights");
  for (auto& w : model.weights) {
    in >> token;
    w = parse_double(token, "weight");
  }
  for (std::size_t v = 0; v < kViewCount; ++v) {
    expect(in, "view");
    in >> token;
    if (parse_view_id(token) != static_cast<ViewId>(v)) throw DataError("wgcca model: views out of order");
    expect(in, "dim");
    in >> token;
    const auto d = static_cast<Eigen::Index>(parse_int(token, "dim"));
    expect(in, "ridge");
    in >> token;
    model.ridge[v] = parse_double(token, "ridge");
    expect(in, "mean");
    model.means[v] = read_matrix(in, d, 1).col(0);
    model.projections[v].resize(d, static_cast<Eigen::Index>(model.k));
    for (Eigen::Index r = 0; r < d; ++r) {
      expect(in, "u");
      model.projections[v].row(r) = read_matrix(in, 1, static_cast<Eigen::Index>(model.k));
    }
  }
  return model;
}

}  // namespace icd
