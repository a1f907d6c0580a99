#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "leakaudit/dataset.hpp"

namespace leakaudit {

struct IngestOptions {
  char delimiter = ',';
  bool header = true;
  std::vector<std::string> missing_tokens{"", "NA", "NaN", "null"};
  /// Promote columns of bare four-digit integers to timestamps (Jan 1 of that year).
  bool year_as_timestamp = false;
  /// Infer boolean for columns whose cells are all in {true,false,0,1}.
  bool strict_bool = true;
};

/// Parses one ISO-8601 date (YYYY-MM-DD) or datetime
/// (YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z]) into seconds since the epoch.
std::optional<std::int64_t> parse_iso_timestamp(std::string_view s);

Dataset parse_csv(std::string_view text, const IngestOptions& options, std::string name);
Dataset load_csv(const std::filesystem::path& path, const IngestOptions& options = {});

/// Writes a header row and one line per row. Missing cells are written as an
/// empty field; numbers use the shortest round-trip form.
void write_csv(const Dataset& ds, std::ostream& out, char delimiter = ',');

}  // namespace leakaudit
