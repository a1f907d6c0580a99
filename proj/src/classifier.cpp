#include "leakaudit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leakaudit/rng.hpp"

namespace leakaudit::ml {

void TrainingData::validate() const {
  for (const auto& f : features) {
    if (f.size() != labels.size()) throw TrainingError("feature column length differs from label count");
    for (double v : f) {
      if (!std::isfinite(v)) throw TrainingError("training data must be complete and finite");
    }
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw TrainingError("labels must be 0 or 1");
  }
}

std::string_view to_string(ClassifierKind k) {
  return k == ClassifierKind::random_forest ? "random_forest" : "logistic_regression";
}

ClassifierKind parse_classifier(std::string_view s) {
  if (s == "rf" || s == "random_forest") return ClassifierKind::random_forest;
  if (s == "lr" || s == "logistic_regression") return ClassifierKind::logistic_regression;
  throw TrainingError("unknown classifier '" + std::string(s) + "' (expected rf or lr)");
}

void ClassifierConfig::validate() const {
  if (trees < 1 || max_depth < 1 || min_leaf < 1 || lr_iterations < 1 || !(lr_step > 0)) {
    throw TrainingError("classifier hyperparameters must be positive");
  }
}

namespace {

double gini(double pos, double n) {
  if (n <= 0) return 0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct Grower {
  const TrainingData& data;
  int max_depth, min_leaf, mtry;
  Rng rng;
  std::vector<DecisionTree::Node>& nodes;
  std::vector<std::size_t> feature_order;

  int grow(std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi, int depth) {
    const std::size_t n = hi - lo;
    double pos = 0;
    for (std::size_t i = lo; i < hi; ++i) pos += data.labels[rows[i]];
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({-1, 0, -1, -1, pos / static_cast<double>(n)});
    if (depth >= max_depth || n < 2 * static_cast<std::size_t>(min_leaf) || pos == 0 ||
        pos == static_cast<double>(n)) {
      return id;
    }

    // Draw mtry distinct candidate features.
    std::iota(feature_order.begin(), feature_order.end(), std::size_t{0});
    for (int k = 0; k < mtry; ++k) {
      const auto j = k + rng.below(feature_order.size() - k);
      std::swap(feature_order[k], feature_order[j]);
    }

    const double parent = gini(pos, static_cast<double>(n)) * static_cast<double>(n);
    double best_cost = parent;
    int best_feature = -1;
    double best_threshold = 0;
    for (int k = 0; k < mtry; ++k) {
      const auto f = feature_order[k];
      const auto& x = data.features[f];
      std::sort(rows.begin() + lo, rows.begin() + hi, [&](auto a, auto b) { return x[a] < x[b]; });
      double left_pos = 0;
      for (std::size_t i = lo; i + 1 < hi; ++i) {
        left_pos += data.labels[rows[i]];
        const std::size_t nl = i + 1 - lo, nr = n - nl;
        if (x[rows[i]] == x[rows[i + 1]]) continue;
        if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
        const double cost = gini(left_pos, double(nl)) * double(nl) + gini(pos - left_pos, double(nr)) * double(nr);
        if (cost < best_cost - 1e-12) {
          best_cost = cost;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (x[rows[i]] + x[rows[i + 1]]);
        }
      }
    }
    if (best_feature < 0) return id;

    const auto& x = data.features[best_feature];
    const auto mid = std::partition(rows.begin() + lo, rows.begin() + hi,
                                    [&](auto r) { return x[r] <= best_threshold; }) - rows.begin();
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int left = grow(rows, lo, static_cast<std::size_t>(mid), depth + 1);
    const int right = grow(rows, static_cast<std::size_t>(mid), hi, depth + 1);
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }
};

void require_two_classes(const TrainingData& d) {
  const auto pos = std::count(d.labels.begin(), d.labels.end(), 1);
  if (pos == 0 || pos == static_cast<long>(d.labels.size())) {
    throw TrainingError("training split contains a single class");
  }
}

}  // namespace

void DecisionTree::fit(const TrainingData& data, std::span<const std::size_t> rows, int max_depth, int min_leaf,
                       int features_per_split, std::uint64_t seed) {
  if (rows.empty()) throw TrainingError("cannot grow a tree on zero rows");
  nodes_.clear();
  const int p = static_cast<int>(data.feature_count());
  Grower g{data, max_depth, min_leaf, std::clamp(features_per_split, 1, std::max(p, 1)), Rng(seed), nodes_,
           std::vector<std::size_t>(data.feature_count())};
  std::vector<std::size_t> work(rows.begin(), rows.end());
  g.grow(work, 0, work.size(), 0);
}

double DecisionTree::predict_proba(std::span<const double> x) const {
  int i = 0;
  while (nodes_[i].feature >= 0) {
    i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  }
  return nodes_[i].positive_fraction;
}

void RandomForest::fit(const TrainingData& data, const ClassifierConfig& cfg, std::uint64_t seed) {
  data.validate();
  cfg.validate();
  require_two_classes(data);
  if (data.feature_count() == 0) throw TrainingError("no features to train on");
  const auto mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(double(data.feature_count())))));
  trees_.assign(static_cast<std::size_t>(cfg.trees), DecisionTree{});
  std::vector<std::size_t> sample(data.rows());
  for (int t = 0; t < cfg.trees; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t), 0}));
    for (auto& s : sample) s = rng.below(data.rows());
    trees_[t].fit(data, sample, cfg.max_depth, cfg.min_leaf, mtry, derive_seed(seed, {std::uint64_t(t), 1}));
  }
}

double RandomForest::vote_fraction(std::span<const double> x) const {
  int votes = 0;
  for (const auto& t : trees_) votes += t.predict_proba(x) > 0.5;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

void LogisticRegression::fit(const TrainingData& data, const ClassifierConfig& cfg) {
  data.validate();
  cfg.validate();
  require_two_classes(data);
  const std::size_t p = data.feature_count(), n = data.rows();
  mean_.assign(p, 0);
  scale_.assign(p, 1);
  for (std::size_t f = 0; f < p; ++f) {
    const auto& x = data.features[f];
    mean_[f] = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double ss = 0;
    for (double v : x) ss += (v - mean_[f]) * (v - mean_[f]);
    const double sd = std::sqrt(ss / double(n));
    scale_[f] = sd > 0 ? sd : 1.0;
  }
  weights_.assign(p, 0);
  bias_ = 0;
  std::vector<double> grad(p);
  for (int it = 0; it < cfg.lr_iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = bias_;
      for (std::size_t f = 0; f < p; ++f) z += weights_[f] * (data.features[f][i] - mean_[f]) / scale_[f];
      const double err = data.labels[i] - 1.0 / (1.0 + std::exp(-z));
      grad_bias += err;
      for (std::size_t f = 0; f < p; ++f) grad[f] += err * (data.features[f][i] - mean_[f]) / scale_[f];
    }
    bias_ += cfg.lr_step * grad_bias / double(n);
    for (std::size_t f = 0; f < p; ++f) weights_[f] += cfg.lr_step * grad[f] / double(n);
  }
}

double LogisticRegression::predict_proba(std::span<const double> x) const {
  double z = bias_;
  for (std::size_t f = 0; f < weights_.size(); ++f) z += weights_[f] * (x[f] - mean_[f]) / scale_[f];
  return 1.0 / (1.0 + std::exp(-z));
}

double train_and_eval(const TrainingData& train, const TrainingData& test, const ClassifierConfig& cfg,
                      std::uint64_t seed) {
  test.validate();
  if (test.feature_count() != train.feature_count()) throw TrainingError("train and test feature counts differ");
  if (test.rows() == 0) throw TrainingError("empty test split");
  std::vector<double> x(test.feature_count());
  std::size_t correct = 0;
  auto row = [&](std::size_t i) {
    for (std::size_t f = 0; f < x.size(); ++f) x[f] = test.features[f][i];
    return std::span<const double>(x);
  };
  if (cfg.kind == ClassifierKind::random_forest) {
    RandomForest rf;
    rf.fit(train, cfg, seed);
    for (std::size_t i = 0; i < test.rows(); ++i) correct += rf.predict(row(i)) == test.labels[i];
  } else {
    LogisticRegression lr;
    lr.fit(train, cfg);
    for (std::size_t i = 0; i < test.rows(); ++i) correct += lr.predict(row(i)) == test.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows());
}

}  // namespace leakaudit::ml
