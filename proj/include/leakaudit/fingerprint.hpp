#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leakaudit/dataset.hpp"

namespace leakaudit {

struct FingerprintConfig {
  /// Empty means "all feature and target columns" (see resolve_columns).
  std::vector<std::string> columns_included;
  int numeric_rounding = 9;
  bool case_fold_text = true;

  bool operator==(const FingerprintConfig&) const = default;
};

/// Canonical placeholder for a missing cell inside a canonical row string.
inline constexpr std::string_view kMissingToken = "\x01NA";

struct RowFingerprint {
  std::uint64_t hash = 0;
  FingerprintConfig config;
  bool operator==(const RowFingerprint&) const = default;
  std::string hex() const;
};

/// Column indices a config covers. Throws InputError on unknown names or an
/// empty resolved set.
std::vector<std::size_t> resolve_columns(const Dataset& ds, const FingerprintConfig& config);

/// Canonical cell form: numbers fixed to `numeric_rounding` decimals, strings
/// optionally case-folded, timestamps as epoch seconds.
std::string canonical_cell(const Cell& c, const FingerprintConfig& config);

/// Length-prefixed concatenation of canonical cells, so distinct cell
/// sequences never produce the same string.
std::string canonical_row(const Dataset& ds, std::size_t row, const std::vector<std::size_t>& columns,
                          const FingerprintConfig& config);

/// 64-bit FNV-1a of the canonical row string.
RowFingerprint row_fingerprint(const Dataset& ds, std::size_t row_index, const FingerprintConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace leakaudit
