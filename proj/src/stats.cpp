#include "leakaudit/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "leakaudit/parallel.hpp"
#include "leakaudit/rng.hpp"

namespace leakaudit::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi_square_upper_tail(double x, double dof) {
  if (x <= 0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

std::size_t ScoredPredictions::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void ScoredPredictions::validate() const {
  if (scores.size() != labels.size()) throw StatsError("scores and labels differ in length");
  for (double s : scores) {
    if (!std::isfinite(s)) throw StatsError("non-finite score");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw StatsError("labels must be 0 or 1");
  }
}

namespace {

void require_both_classes(const ScoredPredictions& p) {
  p.validate();
  const auto pos = p.positives();
  if (pos == 0 || pos == p.size()) throw StatsError("ROC requires at least one positive and one negative");
}

// Scores sorted ascending, with tie groups, so any resample can be scored by
// one weighted sweep instead of a fresh sort.
struct SortedScores {
  std::vector<std::size_t> order;
  std::vector<std::size_t> group_end;  // exclusive end offsets into order

  explicit SortedScores(const ScoredPredictions& p) : order(p.size()) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return p.scores[x] < p.scores[y]; });
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i + 1 == order.size() || p.scores[order[i + 1]] != p.scores[order[i]]) group_end.push_back(i + 1);
    }
  }
};

template <typename Weight>
AucRatio weighted_auc(const ScoredPredictions& p, const SortedScores& s, Weight weight) {
  std::uint64_t neg_below = 0, conc = 0, ties = 0, pos_total = 0, neg_total = 0;
  std::size_t start = 0;
  for (auto end : s.group_end) {
    std::uint64_t pos = 0, neg = 0;
    for (std::size_t i = start; i < end; ++i) {
      const auto row = s.order[i];
      const std::uint64_t w = weight(row);
      (p.labels[row] == 1 ? pos : neg) += w;
    }
    conc += pos * neg_below;
    ties += pos * neg;
    neg_below += neg;
    pos_total += pos;
    neg_total += neg;
    start = end;
  }
  if (pos_total == 0 || neg_total == 0) throw StatsError("resample lacks one class");
  return {2 * conc + ties, 2 * pos_total * neg_total};
}

template <typename Weight>
BinormalFit weighted_binormal(const ScoredPredictions& p, Weight weight) {
  double w[2] = {0, 0}, sum[2] = {0, 0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double wi = static_cast<double>(weight(i));
    w[p.labels[i]] += wi;
    sum[p.labels[i]] += wi * p.scores[i];
  }
  if (w[0] < 2 || w[1] < 2) throw StatsError("binormal fit needs at least two scores per class");
  const double mean[2] = {sum[0] / w[0], sum[1] / w[1]};
  double ss[2] = {0, 0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p.scores[i] - mean[p.labels[i]];
    ss[p.labels[i]] += static_cast<double>(weight(i)) * d * d;
  }
  BinormalFit fit;
  fit.mu_pos = mean[1];
  fit.mu_neg = mean[0];
  fit.sigma_pos = std::sqrt(ss[1] / (w[1] - 1));
  fit.sigma_neg = std::sqrt(ss[0] / (w[0] - 1));
  if (!(fit.sigma_pos > 0) || !(fit.sigma_neg > 0)) throw StatsError("zero within-class variance");
  return fit;
}

double estimate(const ScoredPredictions& p, const SortedScores& s, AucEstimator est,
                const std::vector<std::uint32_t>& counts) {
  auto weight = [&](std::size_t i) { return counts[i]; };
  if (est == AucEstimator::empirical) return weighted_auc(p, s, weight).value();
  return weighted_binormal(p, weight).auc();
}

double estimate_full(const ScoredPredictions& p, const SortedScores& s, AucEstimator est) {
  auto one = [](std::size_t) { return 1u; };
  if (est == AucEstimator::empirical) return weighted_auc(p, s, one).value();
  return weighted_binormal(p, one).auc();
}

class Resampler {
 public:
  Resampler(const ScoredPredictions& p, bool stratified) : n_(p.size()), stratified_(stratified) {
    for (std::size_t i = 0; i < p.size(); ++i) (p.labels[i] == 1 ? pos_ : neg_).push_back(i);
  }

  void draw(Rng& rng, std::vector<std::uint32_t>& counts) const {
    counts.assign(n_, 0);
    if (stratified_) {
      for (std::size_t k = 0; k < pos_.size(); ++k) ++counts[pos_[rng.below(pos_.size())]];
      for (std::size_t k = 0; k < neg_.size(); ++k) ++counts[neg_[rng.below(neg_.size())]];
    } else {
      for (std::size_t k = 0; k < n_; ++k) ++counts[rng.below(n_)];
    }
  }

 private:
  std::size_t n_;
  bool stratified_;
  std::vector<std::size_t> pos_, neg_;
};

// Evaluates fn(counts) for each replicate, redrawing degenerate resamples.
// The total number of redraws is capped at 10x the replicate count.
template <typename Fn>
void run_replicates(const ScoredPredictions& p, const BootstrapConfig& cfg, Fn&& fn) {
  if (cfg.replicates < 100) throw StatsError("bootstrap needs at least 100 replicates");
  if (!(cfg.ci_level > 0 && cfg.ci_level < 1)) throw StatsError("ci_level must lie in (0, 1)");
  const Resampler resampler(p, cfg.stratified);
  const std::uint64_t cap = 10ull * cfg.replicates;
  std::atomic<std::uint64_t> redraws{0};
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, {i}));
    std::vector<std::uint32_t> counts;
    for (;;) {
      resampler.draw(rng, counts);
      try {
        fn(i, counts);
        return;
      } catch (const StatsError&) {
        if (++redraws > cap) throw StatsError("bootstrap redraw cap exceeded (degenerate resamples)");
      }
    }
  });
}

}  // namespace

AucRatio auc_empirical_exact(const ScoredPredictions& p) {
  require_both_classes(p);
  const SortedScores s(p);
  return weighted_auc(p, s, [](std::size_t) { return 1u; });
}

double auc_empirical(const ScoredPredictions& p) { return auc_empirical_exact(p).value(); }

double BinormalFit::auc() const { return normal_cdf(a() / std::sqrt(1.0 + b() * b())); }

double BinormalFit::sensitivity(double fpr) const { return normal_cdf(a() + b() * normal_quantile(fpr)); }

BinormalFit fit_binormal(const ScoredPredictions& p) {
  require_both_classes(p);
  return weighted_binormal(p, [](std::size_t) { return 1u; });
}

SmoothedAuc fit_binormal_smoothed_auc(const ScoredPredictions& p) {
  auto fit = fit_binormal(p);
  return {fit, fit.auc()};
}

std::string_view to_string(AucEstimator e) {
  return e == AucEstimator::empirical ? "empirical" : "smoothed";
}

std::string_view to_string(Alternative a) {
  return a == Alternative::one_tailed_greater ? "one_tailed_greater" : "two_tailed";
}

ConfidenceInterval bootstrap_auc_ci(const ScoredPredictions& p, const BootstrapConfig& cfg,
                                    AucEstimator estimator) {
  require_both_classes(p);
  const SortedScores s(p);
  estimate_full(p, s, estimator);  // surfaces an undefined estimator before resampling
  std::vector<double> values(cfg.replicates);
  run_replicates(p, cfg, [&](std::size_t i, const std::vector<std::uint32_t>& counts) {
    values[i] = estimate(p, s, estimator, counts);
  });
  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - cfg.ci_level;
  const auto r = static_cast<double>(values.size());
  auto lo = static_cast<std::size_t>(std::floor(alpha / 2 * r));
  auto hi = static_cast<std::size_t>(std::ceil((1 - alpha / 2) * r));
  lo = std::min(lo, values.size() - 1);
  hi = std::clamp<std::size_t>(hi, 1, values.size()) - 1;
  return {values[lo], values[hi], cfg.ci_level};
}

TestResult compare_auc_paired_bootstrap(const ScoredPredictions& a, const ScoredPredictions& b,
                                        const BootstrapConfig& cfg, AucEstimator estimator,
                                        Alternative alternative, double bonferroni_factor) {
  require_both_classes(a);
  require_both_classes(b);
  if (a.labels != b.labels) throw StatsError("paired comparison requires identical, index-aligned labels");
  if (bonferroni_factor < 1.0) throw StatsError("Bonferroni factor must be >= 1");
  const SortedScores sa(a), sb(b);
  const double auc_a = estimate_full(a, sa, estimator);
  const double auc_b = estimate_full(b, sb, estimator);

  std::vector<double> diffs(cfg.replicates);
  run_replicates(a, cfg, [&](std::size_t i, const std::vector<std::uint32_t>& counts) {
    diffs[i] = estimate(a, sa, estimator, counts) - estimate(b, sb, estimator, counts);
  });
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
  double ss = 0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(diffs.size() - 1));

  const double diff = auc_a - auc_b;
  double z;
  if (sd > 0) z = diff / sd;
  else if (diff == 0) z = 0;
  else z = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();

  TestResult t;
  t.statistic = z;
  t.alternative = alternative;
  t.p_value = alternative == Alternative::one_tailed_greater ? 1.0 - normal_cdf(z)
                                                             : 2.0 * (1.0 - normal_cdf(std::fabs(z)));
  t.p_value = std::min(1.0, t.p_value * bonferroni_factor);
  t.method = std::string("paired bootstrap Z test (") + std::string(to_string(estimator)) + " AUC)";
  t.details = {{"auc_a", auc_a}, {"auc_b", auc_b}, {"sd", sd}, {"replicates", double(cfg.replicates)}};
  return t;
}

TestResult mcnemar_test(std::span<const int> preds_a, std::span<const int> preds_b, std::span<const int> labels) {
  if (preds_a.size() != labels.size() || preds_b.size() != labels.size() || labels.empty()) {
    throw StatsError("McNemar inputs must be non-empty and of equal length");
  }
  std::uint64_t b = 0, c = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool a_ok = preds_a[i] == labels[i], b_ok = preds_b[i] == labels[i];
    b += a_ok && !b_ok;
    c += !a_ok && b_ok;
  }
  if (b + c == 0) throw StatsError("no discordant pairs: McNemar statistic undefined");
  const double diff = std::fabs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  TestResult t;
  t.statistic = diff * diff / static_cast<double>(b + c);
  t.p_value = chi_square_upper_tail(t.statistic, 1.0);
  t.alternative = Alternative::two_tailed;
  t.method = "McNemar chi-square (continuity corrected, 1 dof)";
  t.details = {{"b", double(b)}, {"c", double(c)}};
  return t;
}

std::vector<int> prior_outcome_baseline(const Dataset& ds) {
  const auto unit = ds.role_column(RoleKind::unit_id);
  const auto time = ds.role_column(RoleKind::timestamp);
  const auto target_col = ds.role_column(RoleKind::target);
  if (!unit || !time || !target_col) {
    throw InputError("prior-outcome baseline needs unit_id, timestamp and target columns");
  }
  const auto target = as_binary_target(ds.column(*target_col));
  if (!target) throw InputError("prior-outcome baseline needs a binary target");

  std::map<std::string, std::vector<std::pair<double, std::size_t>>> panels;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    const auto& u = ds.column(*unit).cells[r];
    const auto t = time_key(ds.column(*time).cells[r]);
    if (is_missing(u) || !t) continue;
    panels[cell_text(u)].emplace_back(*t, r);
  }
  std::vector<int> pred(ds.row_count(), 0);
  for (auto& [name, obs] : panels) {
    std::sort(obs.begin(), obs.end());
    for (std::size_t i = 1; i < obs.size(); ++i) {
      if (obs[i].first == obs[i - 1].first) {
        throw InputError("unit '" + name + "' has two rows at the same timestamp");
      }
      const auto& prev = target->positive[obs[i - 1].second];
      pred[obs[i].second] = prev.value_or(false) ? 1 : 0;
    }
  }
  return pred;
}

ThresholdChoice select_threshold_on_train(const ScoredPredictions& train, ThresholdCriterion criterion) {
  require_both_classes(train);
  const SortedScores s(train);
  const double pos = static_cast<double>(train.positives());
  const double neg = static_cast<double>(train.size()) - pos;

  auto score = [&](double tp, double tn) {
    return criterion == ThresholdCriterion::accuracy ? (tp + tn) / (pos + neg) : tp / pos + tn / neg - 1.0;
  };
  // Sweep thresholds from +inf downwards; rows above the threshold are
  // predicted positive. Only strict improvements move the choice, so ties
  // keep the larger threshold.
  double tp = 0, tn = neg;
  ThresholdChoice best{std::numeric_limits<double>::infinity(), score(tp, tn)};
  for (std::size_t g = s.group_end.size(); g-- > 0;) {
    const std::size_t start = g == 0 ? 0 : s.group_end[g - 1];
    for (std::size_t i = start; i < s.group_end[g]; ++i) {
      if (train.labels[s.order[i]] == 1) tp += 1;
      else tn -= 1;
    }
    const double threshold =
        g == 0 ? -std::numeric_limits<double>::infinity()
               : 0.5 * (train.scores[s.order[start - 1]] + train.scores[s.order[start]]);
    const double v = score(tp, tn);
    if (v > best.value) best = {threshold, v};
  }
  return best;
}

double ks_pvalue(double d, std::size_t n1, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw StatsError("KS test needs two non-empty samples");
  const double ne = static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(n1 + n2);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  if (lambda <= 0) return 1.0;
  const double pi = 3.14159265358979323846;
  double p;
  if (lambda < 1.18) {
    // Jacobi theta form of the same series; converges fast for small lambda.
    const double y = std::exp(-pi * pi / (8 * lambda * lambda));
    double sum = 0;
    for (int j = 1; j <= 50; ++j) {
      const double term = std::pow(y, (2 * j - 1) * (2 * j - 1));
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    p = 1.0 - std::sqrt(2 * pi) / lambda * sum;
  } else {
    double sum = 0;
    for (int j = 1; j <= 100; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      sum += (j % 2 == 1 ? term : -term);
      if (term < 1e-17) break;
    }
    p = 2.0 * sum;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw StatsError("KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_pvalue(d, a.size(), b.size())};
}

TestResult chi_square_homogeneity(std::span<const std::uint64_t> first, std::span<const std::uint64_t> second) {
  if (first.size() != second.size()) throw StatsError("contingency rows differ in length");
  std::vector<std::pair<double, double>> cols;
  double n1 = 0, n2 = 0;
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (first[k] + second[k] == 0) continue;
    cols.emplace_back(static_cast<double>(first[k]), static_cast<double>(second[k]));
    n1 += static_cast<double>(first[k]);
    n2 += static_cast<double>(second[k]);
  }
  TestResult t;
  t.method = "Pearson chi-square homogeneity";
  t.alternative = Alternative::two_tailed;
  if (cols.size() < 2 || n1 == 0 || n2 == 0) return t;
  const double n = n1 + n2;
  double x2 = 0;
  for (auto [o1, o2] : cols) {
    const double total = o1 + o2;
    const double e1 = n1 * total / n, e2 = n2 * total / n;
    x2 += (o1 - e1) * (o1 - e1) / e1 + (o2 - e2) * (o2 - e2) / e2;
  }
  const double dof = static_cast<double>(cols.size() - 1);
  t.statistic = x2;
  t.p_value = chi_square_upper_tail(x2, dof);
  t.details = {{"dof", dof}};
  return t;
}

namespace {
std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto l, auto r) { return x[l] < x[r]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw StatsError("spearman needs two equal-length samples");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace leakaudit::stats
