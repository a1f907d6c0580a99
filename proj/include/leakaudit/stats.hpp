#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "leakaudit/dataset.hpp"

namespace leakaudit::stats {

/// Raised when a statistic is undefined for the given input (single-class
/// labels, zero variance, no discordant pairs).
class StatsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double normal_cdf(double x);
double normal_quantile(double p);
/// Upper tail P(X >= x) of a chi-square distribution.
double chi_square_upper_tail(double x, double dof);

struct ScoredPredictions {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1

  std::size_t size() const { return scores.size(); }
  std::size_t positives() const;
  /// Throws StatsError unless lengths match and labels are 0/1.
  void validate() const;
};

// ---------------------------------------------------------------------------
// ROC / AUC

/// Exact Mann-Whitney AUC as the ratio (2*concordant + ties) / (2*P*N).
struct AucRatio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

AucRatio auc_empirical_exact(const ScoredPredictions& p);
double auc_empirical(const ScoredPredictions& p);

struct BinormalFit {
  double mu_pos = 0, sigma_pos = 1, mu_neg = 0, sigma_neg = 1;
  double a() const { return (mu_pos - mu_neg) / sigma_pos; }
  double b() const { return sigma_neg / sigma_pos; }
  double auc() const;
  /// Smoothed ROC: sensitivity at false-positive rate t in (0, 1).
  double sensitivity(double fpr) const;
};

/// Method-of-moments fit: per-class sample mean and (n-1) standard deviation.
BinormalFit fit_binormal(const ScoredPredictions& p);

struct SmoothedAuc {
  BinormalFit fit;
  double auc = 0.5;
};
SmoothedAuc fit_binormal_smoothed_auc(const ScoredPredictions& p);

// ---------------------------------------------------------------------------
// Bootstrap

enum class AucEstimator { empirical, smoothed };
std::string_view to_string(AucEstimator e);

struct BootstrapConfig {
  std::uint32_t replicates = 2000;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  bool stratified = true;
  /// Worker threads; results do not depend on this.
  unsigned threads = 1;
};

struct ConfidenceInterval {
  double low = 0, high = 0, level = 0.95;
};

/// Percentile interval of a resampled AUC estimator. Replicate i draws from
/// its own stream derived from (seed, i).
ConfidenceInterval bootstrap_auc_ci(const ScoredPredictions& p, const BootstrapConfig& cfg,
                                    AucEstimator estimator);

enum class Alternative { one_tailed_greater, two_tailed };
std::string_view to_string(Alternative a);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  Alternative alternative = Alternative::two_tailed;
  std::string method;
  /// Extra named quantities (e.g. auc_a, auc_b, sd, b, c).
  std::vector<std::pair<std::string, double>> details;
};

/// Paired bootstrap Z test of AUC_A - AUC_B over shared rows. A difference
/// of zero with zero bootstrap spread is reported as Z = 0.
TestResult compare_auc_paired_bootstrap(const ScoredPredictions& a, const ScoredPredictions& b,
                                        const BootstrapConfig& cfg, AucEstimator estimator,
                                        Alternative alternative = Alternative::one_tailed_greater,
                                        double bonferroni_factor = 1.0);

/// Continuity-corrected McNemar test on discordant pairs.
TestResult mcnemar_test(std::span<const int> preds_a, std::span<const int> preds_b,
                        std::span<const int> labels);

// ---------------------------------------------------------------------------
// Baselines and thresholds

/// Predicts each row's outcome as the same unit's outcome at the preceding
/// timestamp; first observations (and rows lacking unit/time) predict 0.
std::vector<int> prior_outcome_baseline(const Dataset& ds);

enum class ThresholdCriterion { accuracy, youden };

struct ThresholdChoice {
  double threshold = 0;  // predict positive when score > threshold
  double value = 0;      // criterion value attained on the training data
};

ThresholdChoice select_threshold_on_train(const ScoredPredictions& train, ThresholdCriterion criterion);

// ---------------------------------------------------------------------------
// Distribution comparison

struct KsResult {
  double statistic = 0;
  double p_value = 1;
};

/// Asymptotic two-sample KS p-value with the effective-size correction.
double ks_pvalue(double d, std::size_t n1, std::size_t n2);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Pearson chi-square homogeneity test over a 2 x K table of counts.
/// Categories with zero total are dropped; fewer than two remaining gives p = 1.
TestResult chi_square_homogeneity(std::span<const std::uint64_t> first, std::span<const std::uint64_t> second);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace leakaudit::stats
