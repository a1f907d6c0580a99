#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "leakaudit/dataset.hpp"

namespace leakaudit {

enum class SplitOrigin { column, index_file, kfold_generated };

std::string_view to_string(SplitOrigin o);

/// Row assignment for one evaluation. A holdout split labels rows 0 (train)
/// or 1 (test); a fold split labels rows with a fold index and names the
/// fold that serves as test.
struct SplitSpec {
  std::vector<std::uint32_t> labels;
  std::uint32_t folds = 2;
  std::uint32_t test_fold = 1;
  SplitOrigin origin = SplitOrigin::column;
  std::optional<std::uint64_t> seed;
  /// Set for k-fold splits over data with a timestamp column: shuffled folds
  /// can train on rows dated after the test rows.
  bool temporal_caveat = false;

  std::size_t size() const { return labels.size(); }
  bool is_test(std::size_t row) const { return labels[row] == test_fold; }

  static SplitSpec holdout(std::vector<bool> is_test, SplitOrigin origin);
};

/// Splits by a column whose values are "train" / "test" (case-insensitive).
SplitSpec split_from_column(const Dataset& ds, std::string_view column);

/// Reads newline-delimited 0-based test row indices.
SplitSpec split_from_index_file(const Dataset& ds, const std::filesystem::path& path);
SplitSpec split_from_test_indices(std::size_t row_count, const std::vector<std::size_t>& test_rows);

std::pair<DatasetView, DatasetView> partition(const Dataset& ds, const SplitSpec& split);

/// k splits over a seeded permutation; fold f is the test fold of split f.
std::vector<SplitSpec> kfold_partition(const Dataset& ds, std::uint32_t k, std::uint64_t shuffle_seed);

}  // namespace leakaudit
