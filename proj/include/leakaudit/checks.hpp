#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leakaudit/dataset.hpp"
#include "leakaudit/findings.hpp"
#include "leakaudit/manifest.hpp"
#include "leakaudit/split.hpp"

namespace leakaudit {

/// Thrown by a detector whose required roles or inputs are absent. The
/// orchestrator records it as a skip, which is distinct from a pass.
class CheckSkipped : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace check_id {
inline constexpr std::string_view no_test_set = "no_test_set";
inline constexpr std::string_view preprocessing_scope = "preprocessing_scope";
inline constexpr std::string_view feature_selection_scope = "feature_selection_scope";
inline constexpr std::string_view duplicates = "duplicates";
inline constexpr std::string_view feature_legitimacy = "feature_legitimacy";
inline constexpr std::string_view temporal_order = "temporal_order";
inline constexpr std::string_view group_overlap = "group_overlap";
inline constexpr std::string_view sampling_bias = "sampling_bias";
}  // namespace check_id

/// All detector ids in report order, one per taxonomy leaf.
const std::vector<std::string>& all_check_ids();

// L1.1: empty or undersized test partition, or a test set that is a
// relabeling of the training rows.
std::vector<Finding> check_no_test_set(const Dataset& ds, const SplitSpec& split, const CheckConfig& config);

// L1.2 / L1.3: learned steps fitted on all data.
std::vector<Finding> check_manifest(const PipelineManifest& manifest);

// L1.4: duplicate rows within the dataset (warning) and across the split (error).
std::vector<Finding> check_duplicates(const Dataset& ds, const SplitSpec& split, const CheckConfig& config);

// L2: suspected proxy features. Warnings only.
std::vector<Finding> check_feature_legitimacy(const Dataset& ds, const CheckConfig& config);

// L3.1: training rows dated after the first test row.
std::vector<Finding> check_temporal(const Dataset& ds, const SplitSpec& split);

// L3.2: group or unit values present on both sides of the split.
std::vector<Finding> check_group_overlap(const Dataset& ds, const SplitSpec& split);

// L3.3: test distribution differs from a reference distribution.
std::vector<Finding> check_sampling_bias(const DatasetView& test, const Dataset& reference,
                                         const CheckConfig& config);

struct AuditInputs {
  const Dataset& dataset;
  const SplitSpec& split;
  const PipelineManifest* manifest = nullptr;
  const Dataset* reference = nullptr;
};

AuditReport run_audit(const AuditInputs& in, const CheckConfig& config, unsigned threads = 1);

/// Audits every fold of a k-fold split and merges the findings; each
/// split-dependent finding carries its fold index in the evidence.
AuditReport run_kfold_audit(const Dataset& ds, const std::vector<SplitSpec>& folds,
                            const PipelineManifest* manifest, const Dataset* reference,
                            const CheckConfig& config, unsigned threads = 1);

}  // namespace leakaudit
