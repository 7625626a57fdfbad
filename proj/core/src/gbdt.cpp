#include "icd/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "icd/error.hpp"
#include "icd/parallel.hpp"
#include "icd/random.hpp"
#include "icd/text_io.hpp"

namespace icd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHessianEpsilon = 1e-6;
constexpr double kTieTolerance = 1e-12;
constexpr std::size_t kMaxStepHalvings = 64;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double row_loss(double p, bool positive) {
  const double c = std::clamp(p, 1e-15, 1.0 - 1e-15);
  return positive ? -std::log(c) : -std::log1p(-c);
}

bool better(double gain, double best) { return gain > best + kTieTolerance * std::abs(best); }

std::size_t fraction_count(double f, std::size_t n) {
  const double raw = std::ceil(f * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, raw)));
}

struct SideSums {
  double g_left = 0.0, g_right = 0.0;
  double w_left = 0.0, w_right = 0.0;
  std::size_t n_left = 0, n_right = 0;

  void add(bool left, double g, double w) {
    if (left) {
      g_left += w * g;
      w_left += w;
      ++n_left;
    } else {
      g_right += w * g;
      w_right += w;
      ++n_right;
    }
  }

  std::optional<double> gain(std::size_t min_samples_leaf) const {
    const std::size_t need = std::max<std::size_t>(1, min_samples_leaf);
    if (n_left < need || n_right < need) return std::nullopt;
    return (g_left * g_left / w_left + g_right * g_right / w_right) / (w_left + w_right);
  }
};

// ---------------------------------------------------------------------------

struct Split {
  bool valid = false;
  int feature = 0;
  int bin = 0;
  double gain = 0.0;
  double improvement = 0.0;
};

struct Leaf {
  int node = 0;
  std::vector<std::size_t> all;
  std::vector<std::size_t> sampled;
  std::vector<double> weights;
  Split best;
};

/// Growth state shared by all leaves of one tree.
class TreeBuilder {
 public:
  TreeBuilder(const GbdtParams& params, const FeatureBins& bins, const std::vector<std::vector<std::uint8_t>>& binned,
              std::span<const double> g, std::size_t threads)
      : params_(params), bins_(bins), binned_(binned), g_(g), threads_(threads) {}

  void find_best(Leaf& leaf, int depth) const {
    leaf.best = Split{};
    if (depth >= static_cast<int>(params_.max_depth) || leaf.sampled.size() < 2) return;
    const std::size_t p = bins_.features();
    struct Hist {
      std::vector<double> g, w;
      std::vector<std::size_t> n;
    };
    std::vector<Hist> hist(p);
    parallel_for(p, threads_, [&](std::size_t j) {
      const std::size_t nb = bins_.bin_count(j);
      Hist& h = hist[j];
      h.g.assign(nb, 0.0);
      h.w.assign(nb, 0.0);
      h.n.assign(nb, 0);
      const auto& col = binned_[j];
      for (std::size_t k = 0; k < leaf.sampled.size(); ++k) {
        const std::size_t i = leaf.sampled[k];
        const double w = leaf.weights[k];
        h.g[col[i]] += w * g_[i];
        h.w[col[i]] += w;
        ++h.n[col[i]];
      }
    });
    double g_total = 0.0;
    double w_total = 0.0;
    for (std::size_t k = 0; k < leaf.sampled.size(); ++k) {
      g_total += leaf.weights[k] * g_[leaf.sampled[k]];
      w_total += leaf.weights[k];
    }
    const std::size_t n_total = leaf.sampled.size();
    const std::size_t need = std::max<std::size_t>(1, params_.min_samples_leaf);
    for (std::size_t j = 0; j < p; ++j) {
      const Hist& h = hist[j];
      double gl = 0.0;
      double wl = 0.0;
      std::size_t nl = 0;
      for (std::size_t s = 0; s + 1 < h.g.size(); ++s) {
        gl += h.g[s];
        wl += h.w[s];
        nl += h.n[s];
        if (nl < need) continue;
        if (n_total - nl < need) break;
        const double gr = g_total - gl;
        const double wr = w_total - wl;
        const double gain = (gl * gl / wl + gr * gr / wr) / w_total;
        if (!leaf.best.valid || better(gain, leaf.best.gain)) {
          leaf.best = Split{true, static_cast<int>(j), static_cast<int>(s), gain, 0.0};
        }
      }
    }
    if (leaf.best.valid) {
      const double children = leaf.best.gain * w_total;
      leaf.best.improvement = children - g_total * g_total / w_total;
      if (!(leaf.best.improvement > kTieTolerance * children)) leaf.best.valid = false;
    }
  }

 private:
  const GbdtParams& params_;
  const FeatureBins& bins_;
  const std::vector<std::vector<std::uint8_t>>& binned_;
  std::span<const double> g_;
  std::size_t threads_;
};

void check_finite(std::span<const double> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i])) throw DataError("gbdt: non-finite feature value at flat index " + std::to_string(i));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

GbdtParams GbdtParams::for_mask_rate(double q) {
  GbdtParams p;
  if (q < 0.45) {
    p.max_depth = 15;
    p.num_leaves = 40;
    p.reg_alpha = 0.01;
  } else if (q < 0.55) {
    p.max_depth = 18;
    p.num_leaves = 80;
    p.reg_alpha = 0.01;
  } else {
    p.max_depth = 10;
    p.num_leaves = 80;
    p.reg_alpha = 0.03;
  }
  return p;
}

void GbdtParams::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning_rate must be in (0, 1]");
  if (num_leaves < 2) throw std::invalid_argument("num_leaves must be at least 2");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  if (!(reg_alpha >= 0.0)) throw std::invalid_argument("reg_alpha must be nonnegative");
  if (!(goss_a >= 0.0 && goss_b >= 0.0 && goss_a + goss_b <= 1.0 + 1e-12)) {
    throw std::invalid_argument("goss fractions must satisfy 0 <= a, b and a + b <= 1");
  }
  if (goss_b == 0.0 && goss_a < 1.0) throw std::invalid_argument("goss_b must be positive unless goss_a = 1");
  if (max_bins < 2 || max_bins > 255) throw std::invalid_argument("max_bins must be in [2, 255]");
}

// ---------------------------------------------------------------------------

FeatureBins::FeatureBins(std::vector<std::vector<double>> edges) : edges_(std::move(edges)) {
  for (const auto& e : edges_) {
    if (e.empty() || e.size() > 255 || e.back() != kInf || !std::is_sorted(e.begin(), e.end()) ||
        std::adjacent_find(e.begin(), e.end()) != e.end()) {
      throw DataError("bin edges must be strictly increasing, at most 255, and end at +inf");
    }
  }
}

FeatureBins FeatureBins::fit(std::span<const double> rows, std::size_t p, std::size_t max_bins) {
  if (p == 0 || rows.size() % p != 0) throw std::invalid_argument("FeatureBins::fit: bad matrix shape");
  if (max_bins < 1 || max_bins > 255) throw std::invalid_argument("FeatureBins::fit: max_bins must be in [1, 255]");
  const std::size_t n = rows.size() / p;
  std::vector<std::vector<double>> edges(p);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = rows[i * p + j];
    std::sort(col.begin(), col.end());
    std::vector<double> distinct;
    std::vector<std::size_t> upto;  // rows <= distinct[k]
    for (std::size_t i = 0; i < n; ++i) {
      if (distinct.empty() || col[i] != distinct.back()) {
        distinct.push_back(col[i]);
        upto.push_back(0);
      }
      upto.back() = i + 1;
    }
    auto& e = edges[j];
    const auto boundary = [&](std::size_t k) {
      const double mid = distinct[k] + (distinct[k + 1] - distinct[k]) / 2.0;
      return mid < distinct[k + 1] ? mid : distinct[k];
    };
    if (distinct.size() <= max_bins) {
      for (std::size_t k = 0; k + 1 < distinct.size(); ++k) e.push_back(boundary(k));
    } else {
      std::size_t next = 1;
      for (std::size_t k = 0; k + 1 < distinct.size() && e.size() + 1 < max_bins; ++k) {
        if (static_cast<double>(upto[k]) * static_cast<double>(max_bins) >=
            static_cast<double>(next) * static_cast<double>(n)) {
          e.push_back(boundary(k));
          while (static_cast<double>(next) * static_cast<double>(n) <=
                 static_cast<double>(upto[k]) * static_cast<double>(max_bins)) {
            ++next;
          }
        }
      }
    }
    e.push_back(kInf);
  }
  return FeatureBins(std::move(edges));
}

std::uint8_t FeatureBins::bin(std::size_t j, double v) const {
  const auto& e = edges_[j];
  return static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), v) - e.begin());
}

std::vector<std::vector<std::uint8_t>> FeatureBins::apply(std::span<const double> rows) const {
  const std::size_t p = features();
  if (p == 0 || rows.size() % p != 0) throw std::invalid_argument("FeatureBins::apply: bad matrix shape");
  const std::size_t n = rows.size() / p;
  std::vector<std::vector<std::uint8_t>> out(p, std::vector<std::uint8_t>(n));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) out[j][i] = bin(j, rows[i * p + j]);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<double> variance_gain_exact(std::span<const double> gradients, std::span<const std::size_t> node_rows,
                                          std::span<const std::uint8_t> feature_bins, std::size_t split_bin,
                                          std::size_t min_samples_leaf) {
  SideSums sums;
  for (std::size_t i : node_rows) sums.add(feature_bins[i] <= split_bin, gradients[i], 1.0);
  return sums.gain(min_samples_leaf);
}

GossSample goss_sample(std::span<const double> gradients, double a, double b, std::uint64_t seed) {
  if (!(a >= 0.0 && b >= 0.0 && a + b <= 1.0 + 1e-12)) {
    throw std::invalid_argument("goss_sample: need 0 <= a, b and a + b <= 1");
  }
  if (b == 0.0 && a < 1.0) throw std::invalid_argument("goss_sample: b must be positive unless a = 1");
  const std::size_t n = gradients.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return std::abs(gradients[x]) > std::abs(gradients[y]); });
  GossSample s;
  const std::size_t top = fraction_count(a, n);
  s.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top), order.end());
  std::sort(rest.begin(), rest.end());
  const std::size_t draw = std::min(rest.size(), fraction_count(b, n));
  Rng rng(seed);
  for (std::size_t k = 0; k < draw; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(rest.size() - k));
    std::swap(rest[k], rest[pick]);
  }
  s.random.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(draw));
  std::sort(s.top.begin(), s.top.end());
  std::sort(s.random.begin(), s.random.end());
  s.amplification = s.random.empty() ? 1.0 : (1.0 - a) / b;
  return s;
}

std::optional<double> goss_variance_gain(std::span<const double> gradients, const GossSample& sample,
                                         std::span<const std::uint8_t> feature_bins, std::size_t split_bin,
                                         std::size_t min_samples_leaf, std::span<const std::size_t> node_rows) {
  // 0 = not sampled, 1 = top, 2 = random
  std::vector<unsigned char> member(gradients.size(), 0);
  for (std::size_t i : sample.top) member[i] = 1;
  for (std::size_t i : sample.random) member[i] = 2;
  SideSums sums;
  const auto visit = [&](std::size_t i) {
    if (member[i] == 0) return;
    sums.add(feature_bins[i] <= split_bin, gradients[i], member[i] == 1 ? 1.0 : sample.amplification);
  };
  if (node_rows.empty()) {
    for (std::size_t i = 0; i < gradients.size(); ++i) visit(i);
  } else {
    for (std::size_t i : node_rows) visit(i);
  }
  return sums.gain(min_samples_leaf);
}

// ---------------------------------------------------------------------------

double Tree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const TreeNode& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[k].value;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return static_cast<std::size_t>(d);
}

double logistic_loss(std::span<const double> probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size() || labels.empty()) {
    throw std::invalid_argument("logistic_loss: size mismatch or empty input");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) loss += row_loss(probabilities[i], labels[i] != 0);
  return loss / static_cast<double>(labels.size());
}

GbdtModel train_gbdt(std::span<const double> rows, std::size_t p, std::span<const int> labels,
                     const GbdtParams& params, std::uint64_t seed, const TrainOptions& options, TrainInfo* info) {
  params.validate();
  const std::size_t n = labels.size();
  if (p == 0 || rows.size() != n * p) throw DataError("gbdt: feature matrix shape does not match labels");
  check_finite(rows);
  const auto positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
  if (positives == 0 || positives == n) throw DataError("gbdt: training labels contain a single class");

  GbdtModel model;
  model.params = params;
  model.bins = FeatureBins::fit(rows, p, params.max_bins);
  const auto binned = model.bins.apply(rows);
  const double rate = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(rate / (1.0 - rate));

  std::vector<double> score(n, model.base_score);
  std::vector<double> prob(n);
  std::vector<double> g(n);
  std::vector<double> h(n);
  TrainInfo local;
  for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(score[i]);
  local.initial_loss = logistic_loss(prob, labels);

  const Rng root(seed);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = prob[i] - (labels[i] != 0 ? 1.0 : 0.0);
      h[i] = prob[i] * (1.0 - prob[i]);
    }
    const GossSample sample = goss_sample(g, params.goss_a, params.goss_b, root.split(t).next_u64());

    Leaf root_leaf;
    root_leaf.all.resize(n);
    std::iota(root_leaf.all.begin(), root_leaf.all.end(), 0);
    std::merge(sample.top.begin(), sample.top.end(), sample.random.begin(), sample.random.end(),
               std::back_inserter(root_leaf.sampled));
    root_leaf.weights.reserve(root_leaf.sampled.size());
    {
      std::size_t r = 0;
      for (std::size_t i : root_leaf.sampled) {
        const bool from_random = r < sample.random.size() && sample.random[r] == i;
        if (from_random) ++r;
        root_leaf.weights.push_back(from_random ? sample.amplification : 1.0);
      }
    }

    Tree tree;
    tree.nodes.push_back(TreeNode{});
    TreeBuilder builder(params, model.bins, binned, g, options.threads);
    std::vector<Leaf> leaves;
    leaves.push_back(std::move(root_leaf));
    builder.find_best(leaves[0], 0);

    while (leaves.size() < params.num_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        if (!leaves[k].best.valid) continue;
        if (pick == leaves.size() || better(leaves[k].best.improvement, leaves[pick].best.improvement)) pick = k;
      }
      if (pick == leaves.size()) break;

      Leaf parent = std::move(leaves[pick]);
      const Split split = parent.best;
      const int depth = tree.nodes[static_cast<std::size_t>(parent.node)].depth;
      if (options.on_split) {
        options.on_split(SplitEvent{t, parent.node, depth, split.feature, split.bin, split.gain, parent.sampled,
                                    parent.weights, g, &binned});
      }
      const auto& col = binned[static_cast<std::size_t>(split.feature)];
      const auto threshold = model.bins.edges(static_cast<std::size_t>(split.feature))[static_cast<std::size_t>(split.bin)];
      const int left_id = static_cast<int>(tree.nodes.size());
      {
        TreeNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
        node.feature = split.feature;
        node.bin = split.bin;
        node.threshold = threshold;
        node.left = left_id;
        node.right = left_id + 1;
      }
      TreeNode child;
      child.depth = depth + 1;
      tree.nodes.push_back(child);
      tree.nodes.push_back(child);

      Leaf left;
      Leaf right;
      left.node = left_id;
      right.node = left_id + 1;
      for (std::size_t i : parent.all) (col[i] <= split.bin ? left.all : right.all).push_back(i);
      for (std::size_t k = 0; k < parent.sampled.size(); ++k) {
        Leaf& side = col[parent.sampled[k]] <= split.bin ? left : right;
        side.sampled.push_back(parent.sampled[k]);
        side.weights.push_back(parent.weights[k]);
      }
      builder.find_best(left, depth + 1);
      builder.find_best(right, depth + 1);
      leaves[pick] = std::move(left);
      leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, std::move(right));
    }

    for (const Leaf& leaf : leaves) {
      double gs = 0.0;
      double hs = 0.0;
      for (std::size_t i : leaf.all) {
        gs += g[i];
        hs += h[i];
      }
      double value =
          -soft_threshold(gs, params.reg_alpha * static_cast<double>(leaf.all.size())) / (hs + kHessianEpsilon);
      // Newton steps on saturated leaves (hessian near 0) can overshoot; halve
      // until the leaf's training loss does not rise.
      const auto leaf_loss = [&](double step) {
        double sum = 0.0;
        for (std::size_t i : leaf.all) sum += row_loss(sigmoid(score[i] + step), labels[i] != 0);
        return sum;
      };
      const double before = leaf_loss(0.0);
      std::size_t halvings = 0;
      while (value != 0.0 && leaf_loss(params.learning_rate * value) > before) {
        value = ++halvings < kMaxStepHalvings ? 0.5 * value : 0.0;
      }
      tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
      for (std::size_t i : leaf.all) {
        score[i] += params.learning_rate * value;
        prob[i] = sigmoid(score[i]);
      }
    }
    model.trees.push_back(std::move(tree));
    local.train_loss.push_back(logistic_loss(prob, labels));
  }
  if (info != nullptr) *info = std::move(local);
  return model;
}

GbdtModel train_gbdt(std::span<const ClassifierInput> inputs, const GbdtParams& params, std::uint64_t seed,
                     const TrainOptions& options, TrainInfo* info) {
  std::vector<double> rows;
  rows.reserve(inputs.size() * kClassifierInputSize);
  std::vector<int> labels;
  labels.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (!in.label) throw DataError("gbdt: training pair (" + in.id_a + ", " + in.id_b + ") has no label");
    rows.insert(rows.end(), in.values.begin(), in.values.end());
    labels.push_back(*in.label == PairLabel::kCloned ? 1 : 0);
  }
  return train_gbdt(rows, kClassifierInputSize, labels, params, seed, options, info);
}

double predict_proba(const GbdtModel& model, std::span<const double> x) {
  if (x.size() != model.features()) {
    throw std::invalid_argument("predict_proba: expected " + std::to_string(model.features()) + " features, got " +
                                std::to_string(x.size()));
  }
  double s = 0.0;
  for (const auto& tree : model.trees) s += tree.predict(x);
  return sigmoid(model.base_score + model.params.learning_rate * s);
}

PairLabel classify(const GbdtModel& model, std::span<const double> x, double threshold) {
  return predict_proba(model, x) > threshold ? PairLabel::kCloned : PairLabel::kGenuine;
}

// ---------------------------------------------------------------------------

std::string serialize_gbdt_model(const GbdtModel& model) {
  std::ostringstream out;
  const GbdtParams& p = model.params;
  out << "icd-gbdt-model v1\n";
  out << "learning_rate " << format_double(p.learning_rate) << '\n';
  out << "max_depth " << p.max_depth << '\n';
  out << "num_leaves " << p.num_leaves << '\n';
  out << "reg_alpha " << format_double(p.reg_alpha) << '\n';
  out << "n_trees " << p.n_trees << '\n';
  out << "goss_a " << format_double(p.goss_a) << '\n';
  out << "goss_b " << format_double(p.goss_b) << '\n';
  out << "max_bins " << p.max_bins << '\n';
  out << "min_samples_leaf " << p.min_samples_leaf << '\n';
  out << "base_score " << format_double(model.base_score) << '\n';
  out << "features " << model.features() << '\n';
  for (std::size_t j = 0; j < model.features(); ++j) {
    const auto& e = model.bins.edges(j);
    out << "bins " << e.size();
    for (double v : e) out << ' ' << format_double(v);
    out << '\n';
  }
  out << "trees " << model.trees.size() << '\n';
  for (const auto& tree : model.trees) {
    out << "tree " << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
      out << n.feature << ' ' << n.bin << ' ' << format_double(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
          << format_double(n.value) << ' ' << n.depth << '\n';
    }
  }
  return out.str();
}

namespace {

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw DataError("gbdt model: unexpected end of input");
    return w;
  }
  void expect(std::string_view key) {
    const auto w = word();
    if (w != key) throw DataError("gbdt model: expected '" + std::string(key) + "', found '" + w + "'");
  }
  double real(std::string_view key) {
    expect(key);
    return real_value(key);
  }
  double real_value(std::string_view what) { return parse_double(word(), what); }
  long long integer(std::string_view key) {
    expect(key);
    return integer_value(key);
  }
  long long integer_value(std::string_view what) { return parse_int(word(), what); }
  std::size_t count(std::string_view key) {
    const auto v = integer(key);
    if (v < 0) throw DataError("gbdt model: negative " + std::string(key));
    return static_cast<std::size_t>(v);
  }

 private:
  std::istringstream in_;
};

}  // namespace

GbdtModel parse_gbdt_model(const std::string& text) {
  Reader r(text);
  r.expect("icd-gbdt-model");
  r.expect("v1");
  GbdtModel model;
  GbdtParams& p = model.params;
  p.learning_rate = r.real("learning_rate");
  p.max_depth = r.count("max_depth");
  p.num_leaves = r.count("num_leaves");
  p.reg_alpha = r.real("reg_alpha");
  p.n_trees = r.count("n_trees");
  p.goss_a = r.real("goss_a");
  p.goss_b = r.real("goss_b");
  p.max_bins = r.count("max_bins");
  p.min_samples_leaf = r.count("min_samples_leaf");
  model.base_score = r.real("base_score");
  const std::size_t features = r.count("features");
  std::vector<std::vector<double>> edges(features);
  for (auto& e : edges) {
    e.resize(r.count("bins"));
    for (double& v : e) v = r.real_value("bin edge");
  }
  model.bins = FeatureBins(std::move(edges));
  const std::size_t trees = r.count("trees");
  for (std::size_t t = 0; t < trees; ++t) {
    Tree tree;
    tree.nodes.resize(r.count("tree"));
    for (auto& n : tree.nodes) {
      n.feature = static_cast<int>(r.integer_value("feature"));
      n.bin = static_cast<int>(r.integer_value("bin"));
      n.threshold = r.real_value("threshold");
      n.left = static_cast<int>(r.integer_value("left"));
      n.right = static_cast<int>(r.integer_value("right"));
      n.value = r.real_value("value");
      n.depth = static_cast<int>(r.integer_value("depth"));
    }
    const auto size = static_cast<int>(tree.nodes.size());
    if (size == 0) throw DataError("gbdt model: empty tree");
    for (int k = 0; k < size; ++k) {
      const TreeNode& n = tree.nodes[static_cast<std::size_t>(k)];
      if (n.is_leaf()) continue;
      if (n.feature >= static_cast<int>(features) || n.left <= k || n.right <= k || n.left >= size ||
          n.right >= size) {
        throw DataError("gbdt model: node references out of range");
      }
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

void save_gbdt_model(const std::filesystem::path& path, const GbdtModel& model) {
  auto out = open_output(path);
  out << serialize_gbdt_model(model);
}

GbdtModel load_gbdt_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_gbdt_model(buf.str());
}

}  // namespace icd
