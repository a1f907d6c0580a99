#include "leakaudit/findings.hpp"

#include <cctype>
#include <sstream>
#include <tuple>

namespace leakaudit {

std::string_view to_string(TaxonomyCode c) {
  switch (c) {
    case TaxonomyCode::L1_1: return "L1.1";
    case TaxonomyCode::L1_2: return "L1.2";
    case TaxonomyCode::L1_3: return "L1.3";
    case TaxonomyCode::L1_4: return "L1.4";
    case TaxonomyCode::L2: return "L2";
    case TaxonomyCode::L3_1: return "L3.1";
    case TaxonomyCode::L3_2: return "L3.2";
    case TaxonomyCode::L3_3: return "L3.3";
  }
  return "?";
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
  }
  return "?";
}

TaxonomyCode parse_code(std::string_view s) {
  for (auto c : kAllCodes) {
    if (to_string(c) == s) return c;
  }
  throw InputError("unknown taxonomy code '" + std::string(s) + "'");
}

Severity parse_severity(std::string_view s) {
  for (auto v : {Severity::error, Severity::warning, Severity::info}) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unknown severity '" + std::string(s) + "'");
}

bool finding_less(const Finding& a, const Finding& b) {
  return std::tie(a.severity, a.code, a.check_id, a.message) < std::tie(b.severity, b.code, b.check_id, b.message);
}

void CheckConfig::validate() const {
  if (!(proxy_auc_threshold > 0.5 && proxy_auc_threshold <= 1.0)) {
    throw InputError("proxy_auc_threshold must lie in (0.5, 1]");
  }
  if (!(proxy_missingness_alignment_threshold > 0.5 && proxy_missingness_alignment_threshold <= 1.0)) {
    throw InputError("proxy_missingness_alignment_threshold must lie in (0.5, 1]");
  }
  if (!(ks_alpha > 0 && ks_alpha < 1)) throw InputError("ks_alpha must lie in (0, 1)");
  if (fingerprint.numeric_rounding < 0 || fingerprint.numeric_rounding > 17) {
    throw InputError("numeric_rounding must lie in [0, 17]");
  }
}

bool AuditReport::has_errors() const {
  for (const auto& f : findings) {
    if (f.severity == Severity::error) return true;
  }
  return false;
}

bool AuditReport::has_warnings() const {
  for (const auto& f : findings) {
    if (f.severity == Severity::warning) return true;
  }
  return false;
}

void to_json(json& j, const Finding& f) {
  j = json{{"code", to_string(f.code)},
           {"severity", to_string(f.severity)},
           {"check_id", f.check_id},
           {"message", f.message},
           {"evidence", f.evidence}};
}

void from_json(const json& j, Finding& f) {
  f.code = parse_code(j.at("code").get<std::string>());
  f.severity = parse_severity(j.at("severity").get<std::string>());
  f.check_id = j.at("check_id").get<std::string>();
  f.message = j.at("message").get<std::string>();
  f.evidence = j.at("evidence");
}

void to_json(json& j, const CheckConfig& c) {
  j = json{{"fingerprint",
            {{"columns_included", c.fingerprint.columns_included},
             {"numeric_rounding", c.fingerprint.numeric_rounding},
             {"case_fold_text", c.fingerprint.case_fold_text}}},
           {"proxy_auc_threshold", c.proxy_auc_threshold},
           {"proxy_missingness_alignment_threshold", c.proxy_missingness_alignment_threshold},
           {"ks_alpha", c.ks_alpha},
           {"bonferroni", c.bonferroni},
           {"denylist_feature_patterns", c.denylist_feature_patterns},
           {"min_test_rows", c.min_test_rows},
           {"evidence_sample_size", c.evidence_sample_size}};
}

void from_json(const json& j, CheckConfig& c) {
  const auto& fp = j.at("fingerprint");
  c.fingerprint.columns_included = fp.at("columns_included").get<std::vector<std::string>>();
  c.fingerprint.numeric_rounding = fp.at("numeric_rounding").get<int>();
  c.fingerprint.case_fold_text = fp.at("case_fold_text").get<bool>();
  c.proxy_auc_threshold = j.at("proxy_auc_threshold").get<double>();
  c.proxy_missingness_alignment_threshold = j.at("proxy_missingness_alignment_threshold").get<double>();
  c.ks_alpha = j.at("ks_alpha").get<double>();
  c.bonferroni = j.at("bonferroni").get<bool>();
  c.denylist_feature_patterns = j.at("denylist_feature_patterns").get<std::vector<std::string>>();
  c.min_test_rows = j.at("min_test_rows").get<std::size_t>();
  c.evidence_sample_size = j.at("evidence_sample_size").get<std::size_t>();
}

void to_json(json& j, const AuditReport& r) {
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"check_id", s.check_id}, {"reason", s.reason}});
  j = json{{"version", r.version},
           {"tool_version", r.tool_version},
           {"dataset_name", r.dataset_name},
           {"findings", r.findings},
           {"checks_run", r.checks_run},
           {"skipped", skipped},
           {"config", r.config_echo}};
}

void from_json(const json& j, AuditReport& r) {
  r.version = j.at("version").get<std::string>();
  r.tool_version = j.at("tool_version").get<std::string>();
  r.dataset_name = j.at("dataset_name").get<std::string>();
  r.findings = j.at("findings").get<std::vector<Finding>>();
  r.checks_run = j.at("checks_run").get<std::vector<std::string>>();
  r.skipped.clear();
  for (const auto& s : j.at("skipped")) {
    r.skipped.push_back({s.at("check_id").get<std::string>(), s.at("reason").get<std::string>()});
  }
  r.config_echo = j.at("config").get<CheckConfig>();
}

std::string render_finding_line(const Finding& f) {
  std::string sev(to_string(f.severity));
  for (auto& ch : sev) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  std::ostringstream os;
  os << sev << ' ' << to_string(f.code) << " [" << f.check_id << "] " << f.message
     << " evidence=" << f.evidence.dump();
  return os.str();
}

std::string render_text(const AuditReport& r) {
  std::ostringstream os;
  os << "leakage audit: " << r.dataset_name << " (" << r.tool_version << ", schema " << r.version << ")\n";
  std::size_t errors = 0, warnings = 0;
  for (const auto& f : r.findings) {
    errors += f.severity == Severity::error;
    warnings += f.severity == Severity::warning;
  }
  os << "findings: " << r.findings.size() << " (" << errors << " errors, " << warnings << " warnings)\n";
  for (const auto& f : r.findings) os << "  " << render_finding_line(f) << '\n';
  os << "checks run (" << r.checks_run.size() << "):";
  for (const auto& c : r.checks_run) os << ' ' << c;
  os << '\n';
  os << "checks skipped (" << r.skipped.size() << "):\n";
  for (const auto& s : r.skipped) os << "  " << s.check_id << ": " << s.reason << '\n';
  return os.str();
}

}  // namespace leakaudit
