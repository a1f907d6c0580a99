#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leakaudit/checks.hpp"
#include "leakaudit/dataset.hpp"
#include "leakaudit/findings.hpp"
#include "leakaudit/manifest.hpp"
#include "leakaudit/split.hpp"

namespace leakaudit::infosheet {

inline constexpr int kFirstQuestion = 1;
inline constexpr int kLastQuestion = 21;

/// Question number in 1..21. Q1-Q8 are study metadata, Q9-Q17 cover
/// train/test separation, Q18-Q19 test-set selection, Q20 temporal order and
/// Q21 feature legitimacy.
class QuestionId {
 public:
  explicit QuestionId(int n);
  static QuestionId parse(std::string_view s);  // "Q12"
  int number() const { return n_; }
  std::string str() const { return "Q" + std::to_string(n_); }
  auto operator<=>(const QuestionId&) const = default;

 private:
  int n_;
};

/// Short description of what a question asks and which leak it guards.
struct QuestionInfo {
  std::string_view topic;
  std::optional<TaxonomyCode> guards;
};
QuestionInfo question_info(QuestionId q);

enum class AnswerStatus { answered, not_applicable, missing };
std::string_view to_string(AnswerStatus s);

struct Answer {
  std::string text;
  AnswerStatus status = AnswerStatus::missing;
  bool operator==(const Answer&) const = default;
};

template <typename T>
struct Claim {
  T value{};
  QuestionId source{1};
  bool operator==(const Claim&) const = default;
};

struct StructuredClaims {
  std::optional<Claim<bool>> split_is_temporal;                // Q20
  std::optional<Claim<bool>> no_cross_split_duplicates;        // Q10
  std::optional<Claim<bool>> groups_disjoint;                  // Q11
  std::map<std::string, Claim<FitScope>> preprocessing_fit_scope;  // Q12-Q15, by step name
  std::map<std::string, Claim<std::string>> feature_justifications;  // Q21, by feature pattern
  std::optional<Claim<bool>> test_matches_claim_distribution;  // Q18-Q19

  bool operator==(const StructuredClaims&) const = default;
  /// Questions that carry at least one structured claim.
  std::vector<QuestionId> claimed_questions() const;
};

struct InfoSheet {
  std::string sheet_version;
  std::string study_title;
  std::string claim_summary;
  std::map<QuestionId, Answer> answers;  // every id in 1..21 present
  std::vector<std::pair<std::string, RoleKind>> declared_roles;
  StructuredClaims declarations;

  bool operator==(const InfoSheet&) const = default;
  const Answer& answer(QuestionId q) const { return answers.at(q); }
  /// Describe-only text accompanying the distribution claim (the Q18/Q19 answer).
  std::string distribution_description() const;
};

/// Parses the sheet text format:
///
///   sheet_version: 1.2
///   study_title: ...
///   claim_summary: ...
///   role: gdp = feature
///
///   [Q20]
///   claim: split_is_temporal = true
///   Free-text justification lines until the next block.
///
/// Claim forms: split_is_temporal / no_cross_split_duplicates /
/// groups_disjoint / test_matches_claim_distribution = true|false,
/// "fit_scope <step> = <scope>" and "feature <pattern> = <justification>".
/// A block whose text is "N/A" is marked not applicable.
InfoSheet parse_info_sheet(std::string_view doc);
InfoSheet load_info_sheet(const std::filesystem::path& path);
std::string serialize_info_sheet(const InfoSheet& sheet);

/// Argument sections and the questions each requires.
struct Section {
  std::string_view name;      // "L1", "L2", "L3"
  std::string_view argument;  // the argument the section must make
  int first, last;
  TaxonomyCode code;
};
const std::array<Section, 3>& sections();

/// One error per argument section with unanswered questions, plus a warning
/// when declared features lack a Q21 justification pattern.
std::vector<Finding> validate_completeness(const InfoSheet& sheet);

struct Contradiction {
  QuestionId question{1};
  TaxonomyCode code = TaxonomyCode::L1_1;
  Finding finding;
  bool operator==(const Contradiction&) const = default;
};

struct CrosscheckResult {
  bool consistent = true;
  std::vector<Contradiction> contradictions;
  std::vector<QuestionId> unverifiable;
};

struct CrosscheckInputs {
  const Dataset& dataset;
  const SplitSpec& split;
  const PipelineManifest* manifest = nullptr;
  const Dataset* reference = nullptr;
};

CrosscheckResult crosscheck(const InfoSheet& sheet, const CrosscheckInputs& in, const CheckConfig& config);

/// Applies the sheet's declared roles to columns still at the default
/// (feature) role. Throws InputError when a declared column is missing or
/// when `explicit_roles` already assigned it a different role.
Dataset apply_declared_roles(const InfoSheet& sheet, const Dataset& ds,
                             const std::map<std::string, RoleKind>& explicit_roles = {});

json to_json(const CrosscheckResult& r);
json sheet_summary_json(const InfoSheet& sheet);

}  // namespace leakaudit::infosheet
