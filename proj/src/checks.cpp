#include "leakaudit/checks.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "leakaudit/fingerprint.hpp"
#include "leakaudit/parallel.hpp"
#include "leakaudit/stats.hpp"
#include "leakaudit/strings.hpp"

namespace leakaudit {

const std::vector<std::string>& all_check_ids() {
  static const std::vector<std::string> ids{
      std::string(check_id::no_test_set),        std::string(check_id::preprocessing_scope),
      std::string(check_id::feature_selection_scope), std::string(check_id::duplicates),
      std::string(check_id::feature_legitimacy), std::string(check_id::temporal_order),
      std::string(check_id::group_overlap),      std::string(check_id::sampling_bias)};
  return ids;
}

namespace {

void require_split(const Dataset& ds, const SplitSpec& split) {
  if (split.size() != ds.row_count()) {
    throw InputError("split covers " + std::to_string(split.size()) + " rows but dataset has " +
                     std::to_string(ds.row_count()));
  }
}

std::vector<std::string> canonical_rows(const Dataset& ds, const FingerprintConfig& config) {
  const auto cols = resolve_columns(ds, config);
  std::vector<std::string> rows(ds.row_count());
  for (std::size_t r = 0; r < ds.row_count(); ++r) rows[r] = canonical_row(ds, r, cols, config);
  return rows;
}

Finding make(TaxonomyCode code, Severity sev, std::string_view id, std::string message, json evidence) {
  return Finding{code, sev, std::move(message), std::move(evidence), std::string(id)};
}

}  // namespace

std::vector<Finding> check_no_test_set(const Dataset& ds, const SplitSpec& split, const CheckConfig& config) {
  require_split(ds, split);
  std::size_t n_test = 0;
  for (std::size_t r = 0; r < split.size(); ++r) n_test += split.is_test(r);
  const std::size_t n_train = split.size() - n_test;

  std::vector<Finding> out;
  if (n_test < config.min_test_rows) {
    out.push_back(make(TaxonomyCode::L1_1, Severity::error, check_id::no_test_set,
                       n_test == 0 ? "no test set: every row is assigned to training"
                                   : "test set smaller than the configured minimum",
                       {{"test_rows", n_test}, {"train_rows", n_train}, {"min_test_rows", config.min_test_rows}}));
    return out;
  }
  if (n_train == 0) return out;

  const auto rows = canonical_rows(ds, config.fingerprint);
  std::set<std::string_view> train, test;
  for (std::size_t r = 0; r < rows.size(); ++r) (split.is_test(r) ? test : train).insert(rows[r]);
  const bool test_in_train = std::includes(train.begin(), train.end(), test.begin(), test.end());
  const bool train_in_test = std::includes(test.begin(), test.end(), train.begin(), train.end());
  if (test_in_train && train_in_test) {
    out.push_back(make(TaxonomyCode::L1_1, Severity::error, check_id::no_test_set,
                       "test set is a relabeling of the training data: both contain exactly the same rows",
                       {{"distinct_rows", train.size()},
                        {"train_rows", n_train},
                        {"test_rows", n_test},
                        {"overlap_fraction", 1.0}}));
  }
  return out;
}

std::vector<Finding> check_manifest(const PipelineManifest& manifest) {
  std::vector<Finding> out;
  for (const auto& step : manifest.steps) {
    if (!step.learned || step.fit_scope != FitScope::all_data) continue;
    const bool selection = step.kind == StepKind::feature_selection;
    json ev{{"step", step.name}, {"kind", to_string(step.kind)}, {"fit_scope", to_string(step.fit_scope)}};
    std::string msg = "learned step '" + step.name + "' (" + std::string(to_string(step.kind)) +
                      ") is fitted on the entire dataset, including test rows";
    if (step.kind == StepKind::resampling) ev["note"] = "oversampled rows may appear in test";
    out.push_back(make(selection ? TaxonomyCode::L1_3 : TaxonomyCode::L1_2, Severity::error,
                       selection ? check_id::feature_selection_scope : check_id::preprocessing_scope,
                       std::move(msg), std::move(ev)));
  }
  return out;
}

std::vector<Finding> check_duplicates(const Dataset& ds, const SplitSpec& split, const CheckConfig& config) {
  require_split(ds, split);
  const auto rows = canonical_rows(ds, config.fingerprint);
  // Groups in order of first occurrence.
  std::unordered_map<std::string_view, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto [it, fresh] = group_of.try_emplace(rows[r], groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(r);
  }

  std::size_t dup_groups = 0, dup_rows = 0, pair_count = 0;
  json group_sample = json::array();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    ++dup_groups;
    dup_rows += g.size();
    if (group_sample.size() < config.evidence_sample_size) group_sample.push_back(g);
    std::vector<std::size_t> tr, te;
    for (auto r : g) (split.is_test(r) ? te : tr).push_back(r);
    pair_count += tr.size() * te.size();
    for (auto a : tr) {
      for (auto b : te) {
        if (pairs.size() < config.evidence_sample_size) pairs.emplace_back(a, b);
      }
    }
  }

  std::vector<Finding> out;
  if (pair_count > 0) {
    std::sort(pairs.begin(), pairs.end());
    json ev_pairs = json::array();
    for (auto [a, b] : pairs) ev_pairs.push_back({a, b});
    out.push_back(make(TaxonomyCode::L1_4, Severity::error, check_id::duplicates,
                       std::to_string(pair_count) + " (train, test) row pairs are duplicates across the split",
                       {{"pair_count", pair_count}, {"pairs", ev_pairs}, {"sample_cap", config.evidence_sample_size}}));
  }
  if (dup_groups > 0) {
    out.push_back(make(TaxonomyCode::L1_4, Severity::warning, check_id::duplicates,
                       std::to_string(dup_groups) + " groups of duplicate rows in the dataset",
                       {{"duplicate_groups", dup_groups}, {"rows_in_groups", dup_rows}, {"groups", group_sample}}));
  }
  return out;
}

std::vector<Finding> check_feature_legitimacy(const Dataset& ds, const CheckConfig& config) {
  const auto target_idx = ds.role_column(RoleKind::target);
  if (!target_idx) throw CheckSkipped("no target column assigned; feature legitimacy cannot be assessed");
  const auto target = as_binary_target(ds.column(*target_idx));

  std::vector<Finding> out;
  for (auto c : ds.columns_with_role(RoleKind::feature)) {
    const auto& col = ds.column(c);
    json triggered = json::array();

    if (target) {
      if (col.dtype == DType::numeric) {
        stats::ScoredPredictions p;
        for (std::size_t r = 0; r < ds.row_count(); ++r) {
          if (is_missing(col.cells[r]) || !target->positive[r]) continue;
          p.scores.push_back(std::get<double>(col.cells[r]));
          p.labels.push_back(*target->positive[r] ? 1 : 0);
        }
        const auto pos = p.positives();
        if (pos > 0 && pos < p.size()) {
          const double auc = stats::auc_empirical(p);
          const double strength = std::max(auc, 1.0 - auc);
          if (strength >= config.proxy_auc_threshold) {
            triggered.push_back({{"pattern", "single_feature_auc"}, {"auc", strength}, {"rows_used", p.size()}});
          }
        }
      }
      std::size_t rows = 0, aligned = 0, missing = 0;
      for (std::size_t r = 0; r < ds.row_count(); ++r) {
        if (!target->positive[r]) continue;
        ++rows;
        const bool miss = is_missing(col.cells[r]);
        missing += miss;
        aligned += miss != *target->positive[r];
      }
      if (missing > 0 && missing < rows) {
        const double frac = static_cast<double>(aligned) / static_cast<double>(rows);
        const double strength = std::max(frac, 1.0 - frac);
        if (strength >= config.proxy_missingness_alignment_threshold) {
          triggered.push_back({{"pattern", "missingness_alignment"},
                               {"alignment", strength},
                               {"missing_when", frac >= 0.5 ? "target negative" : "target positive"},
                               {"rows_used", rows}});
        }
      }
    }
    for (const auto& pat : config.denylist_feature_patterns) {
      if (glob_match(pat, col.name)) {
        triggered.push_back({{"pattern", "denylist"}, {"matched", pat}});
        break;
      }
    }
    if (!triggered.empty()) {
      out.push_back(make(TaxonomyCode::L2, Severity::warning, check_id::feature_legitimacy,
                         "feature '" + col.name + "' looks like a proxy for the target; justify its legitimacy",
                         {{"column", col.name}, {"signals", triggered}}));
    }
  }
  return out;
}

std::vector<Finding> check_temporal(const Dataset& ds, const SplitSpec& split) {
  require_split(ds, split);
  const auto tcol = ds.role_column(RoleKind::timestamp);
  if (!tcol) throw CheckSkipped("no timestamp column assigned; temporal order not checked");
  const auto& col = ds.column(*tcol);
  if (col.dtype != DType::timestamp && col.dtype != DType::numeric) {
    throw InputError("timestamp column '" + col.name + "' is neither a timestamp nor numeric");
  }

  std::vector<std::pair<double, std::size_t>> train, test;
  std::size_t missing = 0;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    const auto k = time_key(col.cells[r]);
    if (!k) {
      ++missing;
      continue;
    }
    (split.is_test(r) ? test : train).emplace_back(*k, r);
  }

  std::vector<Finding> out;
  if (!train.empty() && !test.empty()) {
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const auto& train_max = train.back();
    const auto& test_min = test.front();
    if (train_max.first > test_min.first) {
      std::uint64_t violating = 0, train_rows_after = 0;
      for (const auto& t : test) {
        auto it = std::upper_bound(train.begin(), train.end(), std::make_pair(t.first, SIZE_MAX));
        violating += static_cast<std::uint64_t>(train.end() - it);
      }
      auto it = std::upper_bound(train.begin(), train.end(), std::make_pair(test_min.first, SIZE_MAX));
      train_rows_after = static_cast<std::uint64_t>(train.end() - it);
      const double total = static_cast<double>(train.size()) * static_cast<double>(test.size());
      const auto max_text = cell_text(col.cells[train_max.second]);
      const auto min_text = cell_text(col.cells[test_min.second]);
      out.push_back(make(TaxonomyCode::L3_1, Severity::error, check_id::temporal_order,
                         "training data postdates test data (" + max_text + " > " + min_text + ")",
                         {{"train_max", max_text},
                          {"test_min", min_text},
                          {"violating_pairs", violating},
                          {"violating_fraction", static_cast<double>(violating) / total},
                          {"train_rows_after_test_start", train_rows_after}}));
    }
  }
  if (missing > 0) {
    out.push_back(make(TaxonomyCode::L3_1, Severity::info, check_id::temporal_order,
                       std::to_string(missing) + " rows have no timestamp and were excluded from the order check",
                       {{"missing_timestamps", missing}}));
  }
  if (split.temporal_caveat) {
    out.push_back(make(TaxonomyCode::L3_1, Severity::info, check_id::temporal_order,
                       "k-fold split shuffles temporal data; folds can train on rows dated after their test rows",
                       {{"folds", split.folds}, {"seed", split.seed.value_or(0)}}));
  }
  return out;
}

std::vector<Finding> check_group_overlap(const Dataset& ds, const SplitSpec& split) {
  require_split(ds, split);
  auto cols = ds.columns_with_role(RoleKind::group_id);
  for (auto c : ds.columns_with_role(RoleKind::unit_id)) cols.push_back(c);
  if (cols.empty()) {
    throw CheckSkipped(
        "no group_id or unit_id column; nonindependence between train and test cannot be assessed");
  }
  std::vector<Finding> out;
  for (auto c : cols) {
    const auto& col = ds.column(c);
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (std::size_t r = 0; r < ds.row_count(); ++r) {
      if (is_missing(col.cells[r])) continue;
      auto& e = counts[cell_text(col.cells[r])];
      (split.is_test(r) ? e.second : e.first) += 1;
    }
    json shared = json::array();
    for (const auto& [g, n] : counts) {
      if (n.first > 0 && n.second > 0) shared.push_back({{"group", g}, {"train_rows", n.first}, {"test_rows", n.second}});
    }
    if (!shared.empty()) {
      const auto n = shared.size();
      out.push_back(make(TaxonomyCode::L3_2, Severity::error, check_id::group_overlap,
                         std::to_string(n) + " values of '" + col.name + "' appear in both train and test",
                         {{"column", col.name}, {"shared_group_count", n}, {"groups", std::move(shared)}}));
    }
  }
  return out;
}

std::vector<Finding> check_sampling_bias(const DatasetView& test, const Dataset& reference, const CheckConfig& config) {
  const Dataset& ds = test.dataset();
  struct Pending {
    std::string column;
    bool is_target;
    std::string method;
    double statistic;
    double p_value;
    std::size_t n_test, n_ref;
  };
  std::vector<Pending> results;
  bool any_shared = false;

  auto categories = [](const Column& col, auto rows) {
    std::map<std::string, std::uint64_t> m;
    for (auto r : rows) {
      if (!is_missing(col.cells[r])) ++m[cell_text(col.cells[r])];
    }
    return m;
  };
  std::vector<std::size_t> ref_rows(reference.row_count());
  for (std::size_t i = 0; i < ref_rows.size(); ++i) ref_rows[i] = i;

  for (std::size_t c = 0; c < ds.column_count(); ++c) {
    const auto& col = ds.column(c);
    if (col.role != RoleKind::feature && col.role != RoleKind::target) continue;
    const auto rc = reference.find(col.name);
    if (!rc || reference.column(*rc).dtype != col.dtype) continue;
    const auto& rcol = reference.column(*rc);
    const bool is_target = col.role == RoleKind::target;
    any_shared = true;
    if (test.empty()) continue;

    if (col.dtype == DType::numeric && !is_target) {
      std::vector<double> a, b;
      for (auto r : test.rows()) {
        if (!is_missing(col.cells[r])) a.push_back(std::get<double>(col.cells[r]));
      }
      for (const auto& cell : rcol.cells) {
        if (!is_missing(cell)) b.push_back(std::get<double>(cell));
      }
      if (a.empty() || b.empty()) continue;
      const auto ks = stats::ks_two_sample(a, b);
      results.push_back({col.name, false, "two-sample Kolmogorov-Smirnov", ks.statistic, ks.p_value, a.size(), b.size()});
    } else if (col.dtype == DType::numeric || col.dtype == DType::categorical || col.dtype == DType::boolean) {
      const auto mt = categories(col, test.rows());
      const auto mr = categories(rcol, ref_rows);
      std::set<std::string> keys;
      for (const auto& [k, v] : mt) keys.insert(k);
      for (const auto& [k, v] : mr) keys.insert(k);
      std::vector<std::uint64_t> ct, cr;
      std::uint64_t nt = 0, nr = 0;
      for (const auto& k : keys) {
        ct.push_back(mt.count(k) ? mt.at(k) : 0);
        cr.push_back(mr.count(k) ? mr.at(k) : 0);
        nt += ct.back();
        nr += cr.back();
      }
      if (nt == 0 || nr == 0) continue;
      const auto t = stats::chi_square_homogeneity(ct, cr);
      results.push_back({col.name, is_target, "Pearson chi-square", t.statistic, t.p_value, nt, nr});
    }
  }
  if (!any_shared) throw InputError("reference dataset shares no comparable columns with the audited data");

  const double alpha = config.bonferroni && !results.empty()
                           ? config.ks_alpha / static_cast<double>(results.size())
                           : config.ks_alpha;
  std::vector<Finding> out;
  for (const auto& r : results) {
    if (!(r.p_value < alpha)) continue;
    const std::string what = r.is_target ? "target prevalence" : "distribution of '" + r.column + "'";
    out.push_back(make(TaxonomyCode::L3_3, Severity::warning, check_id::sampling_bias,
                       "test " + what + " differs from the reference distribution",
                       {{"column", r.column},
                        {"kind", r.is_target ? "target_prevalence" : "feature"},
                        {"method", r.method},
                        {"statistic", r.statistic},
                        {"p_value", r.p_value},
                        {"alpha", alpha},
                        {"test_n", r.n_test},
                        {"reference_n", r.n_ref}}));
  }
  return out;
}

namespace {

struct CheckOutcome {
  std::vector<Finding> findings;
  std::optional<std::string> skip_reason;
};

}  // namespace

AuditReport run_audit(const AuditInputs& in, const CheckConfig& config, unsigned threads) {
  config.validate();
  require_split(in.dataset, in.split);
  const auto& ds = in.dataset;
  const auto& split = in.split;

  // Slot order matches all_check_ids(); the manifest detector fills two slots.
  using Detector = std::function<CheckOutcome()>;
  auto wrap = [](auto fn) -> Detector {
    return [fn]() -> CheckOutcome {
      try {
        return {fn(), std::nullopt};
      } catch (const CheckSkipped& s) {
        return {{}, std::string(s.what())};
      }
    };
  };
  std::vector<Detector> detectors{
      wrap([&] { return check_no_test_set(ds, split, config); }),
      wrap([&] {
        if (!in.manifest) throw CheckSkipped("no pipeline manifest supplied");
        return check_manifest(*in.manifest);
      }),
      wrap([&] { return check_duplicates(ds, split, config); }),
      wrap([&] { return check_feature_legitimacy(ds, config); }),
      wrap([&] { return check_temporal(ds, split); }),
      wrap([&] { return check_group_overlap(ds, split); }),
      wrap([&] {
        if (!in.reference) throw CheckSkipped("no reference dataset supplied");
        const auto [train, test] = partition(ds, split);
        return check_sampling_bias(test, *in.reference, config);
      }),
  };
  std::vector<CheckOutcome> outcomes(detectors.size());
  parallel_for(detectors.size(), threads, [&](std::size_t i) { outcomes[i] = detectors[i](); });

  AuditReport report;
  report.dataset_name = ds.name();
  report.config_echo = config;
  const std::vector<std::vector<std::string_view>> slots{
      {check_id::no_test_set},
      {check_id::preprocessing_scope, check_id::feature_selection_scope},
      {check_id::duplicates},
      {check_id::feature_legitimacy},
      {check_id::temporal_order},
      {check_id::group_overlap},
      {check_id::sampling_bias}};
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    for (auto id : slots[i]) {
      if (outcomes[i].skip_reason) report.skipped.push_back({std::string(id), *outcomes[i].skip_reason});
      else report.checks_run.emplace_back(id);
    }
    for (auto& f : outcomes[i].findings) report.findings.push_back(std::move(f));
  }
  std::stable_sort(report.findings.begin(), report.findings.end(), finding_less);
  return report;
}

AuditReport run_kfold_audit(const Dataset& ds, const std::vector<SplitSpec>& folds, const PipelineManifest* manifest,
                            const Dataset* reference, const CheckConfig& config, unsigned threads) {
  if (folds.empty()) throw InputError("k-fold audit needs at least one fold");
  AuditReport merged;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    auto rep = run_audit({ds, folds[f], manifest, reference}, config, threads);
    if (f == 0) {
      merged = rep;
      merged.findings.clear();
    }
    for (auto& finding : rep.findings) {
      const bool split_free = finding.check_id == check_id::preprocessing_scope ||
                              finding.check_id == check_id::feature_selection_scope ||
                              finding.check_id == check_id::feature_legitimacy;
      if (split_free) {
        if (f == 0) merged.findings.push_back(std::move(finding));
        continue;
      }
      finding.evidence["fold"] = f;
      merged.findings.push_back(std::move(finding));
    }
  }
  std::stable_sort(merged.findings.begin(), merged.findings.end(), finding_less);
  return merged;
}

}  // namespace leakaudit
