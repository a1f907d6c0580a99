#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "leakaudit/fingerprint.hpp"

namespace leakaudit {

using json = nlohmann::ordered_json;

/// Leaf types of the leakage taxonomy.
enum class TaxonomyCode { L1_1, L1_2, L1_3, L1_4, L2, L3_1, L3_2, L3_3 };
inline constexpr TaxonomyCode kAllCodes[] = {TaxonomyCode::L1_1, TaxonomyCode::L1_2, TaxonomyCode::L1_3,
                                             TaxonomyCode::L1_4, TaxonomyCode::L2,   TaxonomyCode::L3_1,
                                             TaxonomyCode::L3_2, TaxonomyCode::L3_3};

enum class Severity { error, warning, info };

std::string_view to_string(TaxonomyCode c);
std::string_view to_string(Severity s);
TaxonomyCode parse_code(std::string_view s);
Severity parse_severity(std::string_view s);

struct Finding {
  TaxonomyCode code = TaxonomyCode::L1_1;
  Severity severity = Severity::info;
  std::string message;
  json evidence = json::object();
  std::string check_id;

  bool operator==(const Finding&) const = default;
};

/// Orders by severity, then taxonomy code, check id and message.
bool finding_less(const Finding& a, const Finding& b);

struct CheckConfig {
  FingerprintConfig fingerprint;
  double proxy_auc_threshold = 0.99;
  double proxy_missingness_alignment_threshold = 0.99;
  double ks_alpha = 0.05;
  /// Divide ks_alpha by the number of column tests in check_sampling_bias.
  bool bonferroni = false;
  std::vector<std::string> denylist_feature_patterns;
  std::size_t min_test_rows = 1;
  /// Cap on (train, test) pairs listed as duplicate evidence.
  std::size_t evidence_sample_size = 20;

  bool operator==(const CheckConfig&) const = default;
  /// Throws InputError when a threshold is out of range.
  void validate() const;
};

struct SkippedCheck {
  std::string check_id;
  std::string reason;
  bool operator==(const SkippedCheck&) const = default;
};

inline constexpr std::string_view kReportSchemaVersion = "1.0";
inline constexpr std::string_view kToolVersion = "leakaudit 0.3.0";

struct AuditReport {
  std::string version{kReportSchemaVersion};
  std::string dataset_name;
  std::vector<Finding> findings;
  std::vector<std::string> checks_run;
  std::vector<SkippedCheck> skipped;
  CheckConfig config_echo;
  std::string tool_version{kToolVersion};

  bool operator==(const AuditReport&) const = default;
  bool has_errors() const;
  bool has_warnings() const;
};

void to_json(json& j, const Finding& f);
void from_json(const json& j, Finding& f);
void to_json(json& j, const CheckConfig& c);
void from_json(const json& j, CheckConfig& c);
void to_json(json& j, const AuditReport& r);
void from_json(const json& j, AuditReport& r);

/// One line per finding, then the check lists. Evidence is printed as
/// compact JSON so the text form carries the same content as the JSON form.
std::string render_text(const AuditReport& r);
std::string render_finding_line(const Finding& f);

}  // namespace leakaudit
