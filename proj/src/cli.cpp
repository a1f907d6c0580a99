#include "leakaudit/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "leakaudit/checks.hpp"
#include "leakaudit/csv.hpp"
#include "leakaudit/infosheet.hpp"
#include "leakaudit/manifest.hpp"
#include "leakaudit/sim.hpp"
#include "leakaudit/split.hpp"
#include "leakaudit/stats.hpp"
#include "leakaudit/strings.hpp"

namespace leakaudit::cli {
namespace {

struct AuditOptions {
  std::string data, split_col, test_indices, manifest, reference;
  std::uint32_t kfold = 0;
  std::uint64_t seed = 0;
  std::string target, timestamp, unit, row_id;
  std::vector<std::string> groups, ignore;
  bool year_as_timestamp = false;
  CheckConfig config;
};

struct CommonOptions {
  std::string format = "text";
  std::string out;
  bool strict = false;
  unsigned threads = 1;
};

void add_common(CLI::App* app, CommonOptions& c, bool strict) {
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app->add_option("--out", c.out, "Write the report to this file instead of standard output");
  app->add_option("--threads", c.threads, "Worker threads (results do not depend on this)")->check(CLI::Range(1u, 256u));
  if (strict) app->add_flag("--strict", c.strict, "Treat warnings as errors");
}

void add_audit_inputs(CLI::App* app, AuditOptions& o, bool data_required) {
  auto* data = app->add_option("--data", o.data, "Dataset CSV");
  if (data_required) data->required();
  app->add_option("--split-col", o.split_col, "Column with train/test labels");
  app->add_option("--test-indices", o.test_indices, "File of 0-based test row indices, one per line");
  app->add_option("--kfold", o.kfold, "Generate k shuffled folds");
  app->add_option("--seed", o.seed, "Shuffle seed for --kfold (default 0)");
  app->add_option("--manifest", o.manifest, "Pipeline manifest file");
  app->add_option("--reference", o.reference, "CSV drawn from the distribution of scientific interest");
  app->add_option("--target", o.target, "Target column");
  app->add_option("--timestamp", o.timestamp, "Timestamp column");
  app->add_option("--group", o.groups, "Group column (repeatable)");
  app->add_option("--unit", o.unit, "Unit column");
  app->add_option("--row-id", o.row_id, "Row identifier column (excluded from fingerprints)");
  app->add_option("--ignore", o.ignore, "Columns to ignore (repeatable)");
  app->add_flag("--year-as-timestamp", o.year_as_timestamp, "Read four-digit integer columns as years");
  app->add_option("--denylist", o.config.denylist_feature_patterns, "Feature name glob treated as a proxy (repeatable)");
  app->add_option("--proxy-auc", o.config.proxy_auc_threshold, "Single-feature AUC proxy threshold");
  app->add_option("--proxy-missingness", o.config.proxy_missingness_alignment_threshold,
                  "Missingness/target alignment proxy threshold");
  app->add_option("--alpha", o.config.ks_alpha, "Significance level for distribution tests");
  app->add_flag("--bonferroni", o.config.bonferroni, "Bonferroni-correct distribution tests");
  app->add_option("--min-test-rows", o.config.min_test_rows, "Minimum test rows");
  app->add_option("--rounding", o.config.fingerprint.numeric_rounding, "Decimal places for duplicate matching");
}

struct LoadedAudit {
  Dataset data;
  std::vector<SplitSpec> splits;  // one for a holdout, k for --kfold
  std::optional<PipelineManifest> manifest;
  std::optional<Dataset> reference;
  std::map<std::string, RoleKind> roles;
};

std::map<std::string, RoleKind> collect_roles(const AuditOptions& o) {
  std::map<std::string, RoleKind> roles;
  auto put = [&](const std::string& col, RoleKind r) {
    if (col.empty()) return;
    auto [it, fresh] = roles.emplace(col, r);
    if (!fresh && it->second != r) {
      throw InputError("conflicting roles for column '" + col + "': " + std::string(to_string(it->second)) +
                       " and " + std::string(to_string(r)));
    }
  };
  put(o.target, RoleKind::target);
  put(o.timestamp, RoleKind::timestamp);
  put(o.unit, RoleKind::unit_id);
  put(o.row_id, RoleKind::row_id);
  for (const auto& g : o.groups) put(g, RoleKind::group_id);
  for (const auto& i : o.ignore) put(i, RoleKind::ignored);
  put(o.split_col, RoleKind::ignored);
  return roles;
}

Dataset assign_roles(Dataset ds, const std::map<std::string, RoleKind>& roles, bool skip_absent) {
  for (const auto& [col, role] : roles) {
    if (skip_absent && !ds.find(col)) continue;
    ds = ds.with_role(col, role);
  }
  return ds;
}

LoadedAudit load_audit(const AuditOptions& o, const infosheet::InfoSheet* sheet) {
  const int sources = !o.split_col.empty() + !o.test_indices.empty() + (o.kfold > 0);
  if (sources != 1) throw InputError("choose exactly one of --split-col, --test-indices or --kfold");
  IngestOptions ingest;
  ingest.year_as_timestamp = o.year_as_timestamp;

  LoadedAudit l;
  l.roles = collect_roles(o);
  l.data = assign_roles(load_csv(o.data, ingest), l.roles, false);
  if (sheet) l.data = infosheet::apply_declared_roles(*sheet, l.data, l.roles);

  if (!o.split_col.empty()) l.splits.push_back(split_from_column(l.data, o.split_col));
  else if (!o.test_indices.empty()) l.splits.push_back(split_from_index_file(l.data, o.test_indices));
  else l.splits = kfold_partition(l.data, o.kfold, o.seed);

  if (!o.manifest.empty()) l.manifest = load_manifest(o.manifest);
  if (!o.reference.empty()) {
    auto ref = load_csv(o.reference, ingest);
    std::map<std::string, RoleKind> ref_roles = l.roles;
    for (std::size_t c = 0; c < l.data.column_count(); ++c) ref_roles[l.data.column(c).name] = l.data.column(c).role;
    l.reference = assign_roles(std::move(ref), ref_roles, true);
  }
  o.config.validate();
  return l;
}

void emit(const CommonOptions& c, const std::string& body, std::ostream& out) {
  if (c.out.empty()) {
    out << body;
    return;
  }
  const std::filesystem::path path(c.out);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write '" + tmp + "'");
    f << body;
    if (!f) throw InputError("error writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void promote_warnings(std::vector<Finding>& findings) {
  for (auto& f : findings) {
    if (f.severity == Severity::warning) f.severity = Severity::error;
  }
  std::stable_sort(findings.begin(), findings.end(), finding_less);
}

bool any_error(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::error; });
}

int cmd_audit(const AuditOptions& o, const CommonOptions& c, std::ostream& out) {
  const auto l = load_audit(o, nullptr);
  const PipelineManifest* manifest = l.manifest ? &*l.manifest : nullptr;
  const Dataset* reference = l.reference ? &*l.reference : nullptr;
  AuditReport report = l.splits.size() == 1
                           ? run_audit({l.data, l.splits.front(), manifest, reference}, o.config, c.threads)
                           : run_kfold_audit(l.data, l.splits, manifest, reference, o.config, c.threads);
  if (c.strict) promote_warnings(report.findings);
  emit(c, c.format == "json" ? json(report).dump(2) + "\n" : render_text(report), out);
  return report.has_errors() ? kFindings : kClean;
}

std::string completeness_text(const infosheet::InfoSheet& sheet, const std::vector<Finding>& findings) {
  std::ostringstream os;
  os << "info sheet: " << (sheet.study_title.empty() ? "(untitled)" : sheet.study_title) << " (version "
     << sheet.sheet_version << ")\n";
  os << "completeness findings: " << findings.size() << '\n';
  for (const auto& f : findings) os << "  " << render_finding_line(f) << '\n';
  return os.str();
}

int cmd_infosheet_validate(const std::string& sheet_path, const CommonOptions& c, std::ostream& out) {
  const auto sheet = infosheet::load_info_sheet(sheet_path);
  auto findings = infosheet::validate_completeness(sheet);
  if (c.strict) promote_warnings(findings);
  std::string body;
  if (c.format == "json") {
    json j{{"version", kReportSchemaVersion},
           {"sheet", infosheet::sheet_summary_json(sheet)},
           {"completeness", findings}};
    body = j.dump(2) + "\n";
  } else {
    body = completeness_text(sheet, findings);
  }
  emit(c, body, out);
  return any_error(findings) ? kFindings : kClean;
}

int cmd_infosheet_crosscheck(const std::string& sheet_path, const AuditOptions& o, const CommonOptions& c,
                             std::ostream& out) {
  const auto sheet = infosheet::load_info_sheet(sheet_path);
  auto findings = infosheet::validate_completeness(sheet);
  if (c.strict) promote_warnings(findings);
  const auto l = load_audit(o, &sheet);

  infosheet::CrosscheckResult merged;
  std::set<infosheet::QuestionId> unverifiable;
  for (std::size_t f = 0; f < l.splits.size(); ++f) {
    auto r = infosheet::crosscheck(sheet,
                                   {l.data, l.splits[f], l.manifest ? &*l.manifest : nullptr,
                                    l.reference ? &*l.reference : nullptr},
                                   o.config);
    for (auto& ct : r.contradictions) {
      if (l.splits.size() > 1) ct.finding.evidence["fold"] = f;
      merged.contradictions.push_back(std::move(ct));
    }
    unverifiable.insert(r.unverifiable.begin(), r.unverifiable.end());
  }
  merged.unverifiable.assign(unverifiable.begin(), unverifiable.end());
  merged.consistent = merged.contradictions.empty();

  std::string body;
  if (c.format == "json") {
    json j{{"version", kReportSchemaVersion},
           {"sheet", infosheet::sheet_summary_json(sheet)},
           {"dataset_name", l.data.name()},
           {"completeness", findings},
           {"crosscheck", infosheet::to_json(merged)}};
    body = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << completeness_text(sheet, findings);
    os << "crosscheck against " << l.data.name() << ": " << (merged.consistent ? "consistent" : "CONTRADICTED")
       << '\n';
    for (const auto& ct : merged.contradictions) {
      os << "  CONTRADICTION " << ct.question.str() << ' ' << to_string(ct.code) << ": "
         << render_finding_line(ct.finding) << '\n';
    }
    os << "unverifiable:";
    for (const auto& q : merged.unverifiable) os << ' ' << q.str();
    os << '\n';
    body = os.str();
  }
  emit(c, body, out);
  return (any_error(findings) || !merged.consistent) ? kFindings : kClean;
}

struct StatsOptions {
  std::string labels;
  std::vector<std::string> scores;
  bool compare = false, smoothed = false, unstratified = false, two_tailed = false, bonferroni = false;
  std::uint32_t bootstrap = 2000;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
};

std::vector<std::pair<std::string, std::string>> read_two_columns(const std::string& path, std::string_view value_col) {
  IngestOptions io;
  io.strict_bool = false;
  const auto ds = load_csv(path, io);
  const auto& ids = ds.column("row_id");
  const auto& vals = ds.column(value_col);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    if (is_missing(ids.cells[r]) || is_missing(vals.cells[r])) {
      throw InputError(path + ": row " + std::to_string(r) + " has a missing row_id or " + std::string(value_col));
    }
    out.emplace_back(cell_text(ids.cells[r]), cell_text(vals.cells[r]));
  }
  return out;
}

int cmd_stats(const StatsOptions& o, const CommonOptions& c, std::ostream& out) {
  using namespace stats;
  const auto label_rows = read_two_columns(o.labels, "label");
  std::map<std::string, std::size_t> index;
  std::vector<int> labels;
  for (const auto& [id, v] : label_rows) {
    if (!index.emplace(id, labels.size()).second) throw InputError("duplicate row_id '" + id + "' in labels");
    double d;
    if (!parse_double(v, d) || (d != 0 && d != 1)) throw InputError("label for row_id '" + id + "' is not 0/1");
    labels.push_back(static_cast<int>(d));
  }

  std::vector<std::pair<std::string, ScoredPredictions>> models;
  for (const auto& path : o.scores) {
    ScoredPredictions p;
    p.labels = labels;
    p.scores.assign(labels.size(), 0);
    std::vector<bool> seen(labels.size());
    for (const auto& [id, v] : read_two_columns(path, "score")) {
      auto it = index.find(id);
      if (it == index.end()) throw InputError(path + ": row_id '" + id + "' not in labels");
      if (seen[it->second]) throw InputError(path + ": duplicate row_id '" + id + "'");
      if (!parse_double(v, p.scores[it->second])) throw InputError(path + ": score for '" + id + "' is not numeric");
      seen[it->second] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw InputError(path + ": scores do not cover every labelled row");
    }
    models.emplace_back(std::filesystem::path(path).stem().string(), std::move(p));
  }
  if (models.empty()) throw InputError("stats needs at least one --scores file");

  const auto estimator = o.smoothed ? AucEstimator::smoothed : AucEstimator::empirical;
  BootstrapConfig bc;
  bc.replicates = o.bootstrap;
  bc.seed = o.seed;
  bc.ci_level = o.ci_level;
  bc.stratified = !o.unstratified;
  bc.threads = c.threads;

  json jmodels = json::array();
  for (const auto& [name, p] : models) {
    json m{{"name", name}, {"auc_empirical", auc_empirical(p)}};
    try {
      const auto s = fit_binormal_smoothed_auc(p);
      m["auc_smoothed"] = s.auc;
      m["binormal"] = {{"mu_pos", s.fit.mu_pos}, {"sigma_pos", s.fit.sigma_pos}, {"mu_neg", s.fit.mu_neg},
                       {"sigma_neg", s.fit.sigma_neg}, {"a", s.fit.a()}, {"b", s.fit.b()}};
    } catch (const StatsError& e) {
      m["auc_smoothed"] = nullptr;
      m["smoothed_error"] = e.what();
    }
    if (o.bootstrap > 0) {
      const auto ci = bootstrap_auc_ci(p, bc, estimator);
      m["ci"] = {{"low", ci.low}, {"high", ci.high}, {"level", ci.level}, {"estimator", to_string(estimator)}};
    } else {
      m["ci"] = nullptr;
    }
    jmodels.push_back(std::move(m));
  }

  json tests = json::array();
  if (o.compare) {
    if (models.size() < 2) throw InputError("--compare needs at least two --scores files");
    if (o.bootstrap == 0) throw InputError("--compare needs --bootstrap > 0");
    const double factor = o.bonferroni ? static_cast<double>(models.size() - 1) : 1.0;
    const auto alt = o.two_tailed ? Alternative::two_tailed : Alternative::one_tailed_greater;
    for (std::size_t k = 1; k < models.size(); ++k) {
      const auto t = compare_auc_paired_bootstrap(models[0].second, models[k].second, bc, estimator, alt, factor);
      json details = json::object();
      for (const auto& [key, v] : t.details) details[key] = v;
      tests.push_back({{"model_a", models[0].first},
                       {"model_b", models[k].first},
                       {"method", t.method},
                       {"alternative", to_string(t.alternative)},
                       {"statistic", t.statistic},
                       {"p_value", t.p_value},
                       {"bonferroni_factor", factor},
                       {"details", details}});
    }
  }

  json report{{"version", kReportSchemaVersion},
              {"estimator", to_string(estimator)},
              {"bootstrap",
               {{"replicates", o.bootstrap}, {"seed", o.seed}, {"ci_level", o.ci_level}, {"stratified", !o.unstratified}}},
              {"auc_empirical", jmodels[0]["auc_empirical"]},
              {"auc_smoothed", jmodels[0]["auc_smoothed"]},
              {"ci", jmodels[0]["ci"]},
              {"models", jmodels},
              {"tests", tests}};
  std::string body;
  if (c.format == "json") {
    body = report.dump(2) + "\n";
  } else {
    std::ostringstream os;
    for (const auto& m : jmodels) {
      os << m["name"].get<std::string>() << ": auc_empirical=" << m["auc_empirical"].dump()
         << " auc_smoothed=" << m["auc_smoothed"].dump();
      if (!m["ci"].is_null()) {
        os << " ci" << m["ci"]["level"].dump() << "=[" << m["ci"]["low"].dump() << ", " << m["ci"]["high"].dump()
           << "]";
      }
      os << '\n';
    }
    for (const auto& t : tests) {
      os << t["model_a"].get<std::string>() << " vs " << t["model_b"].get<std::string>() << ": Z="
         << t["statistic"].dump() << " p=" << t["p_value"].dump() << " (" << t["alternative"].get<std::string>()
         << ")\n";
    }
    body = os.str();
  }
  emit(c, body, out);
  return kClean;
}

struct SimOptions {
  std::string grid = "0:0.95:0.05";
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::string classifier = "rf";
  std::size_t n_per_class = 1000;
  int trees = 50, max_depth = 8, min_leaf = 5;
  std::vector<std::string> variants{"leaky_joint", "clean_train_only"};
};

int cmd_simulate(const SimOptions& o, const CommonOptions& c, std::ostream& out) {
  sim::SimConfig cfg;
  cfg.missingness_grid = sim::parse_grid(o.grid);
  cfg.repetitions = o.reps;
  cfg.master_seed = o.seed;
  cfg.n_per_class = o.n_per_class;
  cfg.classifier.kind = ml::parse_classifier(o.classifier);
  cfg.classifier.trees = o.trees;
  cfg.classifier.max_depth = o.max_depth;
  cfg.classifier.min_leaf = o.min_leaf;
  cfg.variants.clear();
  for (const auto& v : o.variants) cfg.variants.push_back(sim::parse_variant(v));
  cfg.threads = c.threads;
  const auto result = sim::run_sweep(cfg);
  std::ostringstream os;
  sim::write_csv(result, os);
  emit(c, os.str(), out);
  return kClean;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leakage audit toolkit for ML-based science", "leakaudit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  AuditOptions audit_opts;
  CommonOptions audit_common;
  auto* audit = app.add_subcommand("audit", "Run the leakage detectors on a dataset and split");
  add_audit_inputs(audit, audit_opts, true);
  add_common(audit, audit_common, true);

  auto* sheet_cmd = app.add_subcommand("infosheet", "Validate or cross-check a model info sheet");
  sheet_cmd->require_subcommand(1);
  std::string sheet_path;
  CommonOptions validate_common;
  auto* validate = sheet_cmd->add_subcommand("validate", "Check that every leakage argument is answered");
  validate->add_option("--sheet", sheet_path, "Info sheet file")->required();
  add_common(validate, validate_common, true);
  AuditOptions cross_opts;
  CommonOptions cross_common;
  auto* cross = sheet_cmd->add_subcommand("crosscheck", "Check the sheet's claims against the data");
  cross->add_option("--sheet", sheet_path, "Info sheet file")->required();
  add_audit_inputs(cross, cross_opts, true);
  add_common(cross, cross_common, true);

  StatsOptions stats_opts;
  CommonOptions stats_common;
  auto* st = app.add_subcommand("stats", "AUC, bootstrap intervals and paired comparisons");
  st->add_option("--labels", stats_opts.labels, "CSV with row_id,label")->required();
  st->add_option("--scores", stats_opts.scores, "CSV with row_id,score (one per model)")->required();
  st->add_flag("--compare", stats_opts.compare, "Compare the first model against each other model");
  st->add_option("--bootstrap", stats_opts.bootstrap, "Bootstrap replicates (0 disables intervals)");
  st->add_option("--seed", stats_opts.seed, "Bootstrap seed (default 0)");
  st->add_flag("--smoothed", stats_opts.smoothed, "Use the binormal smoothed AUC for intervals and tests");
  st->add_option("--ci-level", stats_opts.ci_level, "Confidence level")->check(CLI::Range(0.5, 0.999));
  st->add_flag("--unstratified", stats_opts.unstratified, "Resample rows without class stratification");
  st->add_flag("--two-tailed", stats_opts.two_tailed, "Two-tailed comparison p-values");
  st->add_flag("--bonferroni", stats_opts.bonferroni, "Bonferroni-correct comparison p-values");
  add_common(st, stats_common, false);

  SimOptions sim_opts;
  CommonOptions sim_common;
  auto* simc = app.add_subcommand("simulate", "Accuracy inflation from joint train/test imputation");
  simc->add_option("--grid", sim_opts.grid, "Missingness grid lo:hi:step");
  simc->add_option("--reps", sim_opts.reps, "Repetitions per grid point");
  simc->add_option("--seed", sim_opts.seed, "Master seed (default 0)");
  simc->add_option("--classifier", sim_opts.classifier, "rf or lr")->check(CLI::IsMember({"rf", "lr"}));
  simc->add_option("--n-per-class", sim_opts.n_per_class, "Rows per class");
  simc->add_option("--trees", sim_opts.trees, "Forest size");
  simc->add_option("--max-depth", sim_opts.max_depth, "Tree depth limit");
  simc->add_option("--min-leaf", sim_opts.min_leaf, "Minimum rows per leaf");
  simc->add_option("--variants", sim_opts.variants, "Imputation variants to run");
  simc->add_option("--out", sim_common.out, "Output CSV path");
  simc->add_option("--threads", sim_common.threads, "Worker threads")->check(CLI::Range(1u, 256u));

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kClean;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kClean;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kClean;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (*audit) return cmd_audit(audit_opts, audit_common, out);
    if (*validate) return cmd_infosheet_validate(sheet_path, validate_common, out);
    if (*cross) return cmd_infosheet_crosscheck(sheet_path, cross_opts, cross_common, out);
    if (*st) return cmd_stats(stats_opts, stats_common, out);
    if (*simc) return cmd_simulate(sim_opts, sim_common, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const stats::StatsError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ml::TrainingError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  err << "error: no subcommand\n";
  return kUsage;
}

}  // namespace leakaudit::cli
