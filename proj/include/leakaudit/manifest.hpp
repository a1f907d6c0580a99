#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace leakaudit {

enum class StepKind { imputation, scaling, resampling, feature_selection, encoding, other };
enum class FitScope { train_only, all_data, per_fold };

std::string_view to_string(StepKind k);
std::string_view to_string(FitScope s);
StepKind parse_step_kind(std::string_view s);
FitScope parse_fit_scope(std::string_view s);

struct PipelineStep {
  std::string name;
  StepKind kind = StepKind::other;
  bool learned = true;
  FitScope fit_scope = FitScope::train_only;
  bool operator==(const PipelineStep&) const = default;
};

struct PipelineManifest {
  std::vector<PipelineStep> steps;
  bool operator==(const PipelineManifest&) const = default;
  const PipelineStep* find(std::string_view name) const;
};

/// Parses the manifest text format:
///
///   # comment
///   [step]
///   name = impute_gdp
///   kind = imputation
///   learned = true
///   fit_scope = all_data
///
/// `learned` defaults to true. Resampling steps are always learned.
PipelineManifest parse_manifest(std::string_view text);
PipelineManifest load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const PipelineManifest& m);

}  // namespace leakaudit
