#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace leakaudit::ml {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense, complete feature matrix stored column-major plus 0/1 labels.
struct TrainingData {
  std::vector<std::vector<double>> features;  // features[f][row]
  std::vector<int> labels;

  std::size_t rows() const { return labels.size(); }
  std::size_t feature_count() const { return features.size(); }
  void validate() const;
};

enum class ClassifierKind { random_forest, logistic_regression };
std::string_view to_string(ClassifierKind k);
ClassifierKind parse_classifier(std::string_view s);  // "rf" / "random_forest", "lr" / "logistic_regression"

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::random_forest;
  int trees = 50;
  int max_depth = 8;
  int min_leaf = 5;
  int lr_iterations = 500;
  double lr_step = 0.5;
  void validate() const;
};

/// Binary CART grown greedily on Gini impurity. Splits send x <= threshold left.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0;
    int left = -1, right = -1;
    double positive_fraction = 0;
  };

  /// Grows on the given row multiset. `features_per_split` features are drawn
  /// per node when smaller than the feature count.
  void fit(const TrainingData& data, std::span<const std::size_t> rows, int max_depth, int min_leaf,
           int features_per_split, std::uint64_t seed);
  double predict_proba(std::span<const double> x) const;
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

/// Bagged CART trees with a majority vote.
class RandomForest {
 public:
  void fit(const TrainingData& data, const ClassifierConfig& cfg, std::uint64_t seed);
  /// Fraction of trees voting positive.
  double vote_fraction(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return vote_fraction(x) > 0.5 ? 1 : 0; }

 private:
  std::vector<DecisionTree> trees_;
};

/// Maximum-likelihood logistic regression by batch gradient ascent on
/// standardized features.
class LogisticRegression {
 public:
  void fit(const TrainingData& data, const ClassifierConfig& cfg);
  double predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const { return predict_proba(x) > 0.5 ? 1 : 0; }

 private:
  std::vector<double> mean_, scale_, weights_;
  double bias_ = 0;
};

/// Trains the configured classifier on `train` and returns the fraction of
/// `test` rows predicted correctly at threshold 0.5.
double train_and_eval(const TrainingData& train, const TrainingData& test, const ClassifierConfig& cfg,
                      std::uint64_t seed);

}  // namespace leakaudit::ml
