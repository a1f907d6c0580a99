#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace leakaudit {

/// Raised for malformed input data, bad role assignments and similar caller
/// errors. The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType { numeric, categorical, boolean, timestamp, text };
enum class RoleKind { feature, target, timestamp, unit_id, group_id, row_id, ignored };

std::string_view to_string(DType t);
std::string_view to_string(RoleKind r);
RoleKind parse_role(std::string_view s);

struct Missing {
  bool operator==(const Missing&) const = default;
};

/// A parsed timestamp: seconds since 1970-01-01 UTC plus the source text.
struct Timestamp {
  std::int64_t seconds = 0;
  std::string text;
  bool operator==(const Timestamp& o) const { return seconds == o.seconds; }
};

using Cell = std::variant<Missing, double, bool, Timestamp, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<Missing>(c); }

/// Orderable key for a timestamp-role cell (numeric or timestamp dtype).
std::optional<double> time_key(const Cell& c);

/// Display form used in evidence payloads and CSV serialization.
std::string cell_text(const Cell& c);

struct Column {
  std::string name;
  DType dtype = DType::categorical;
  RoleKind role = RoleKind::feature;
  std::vector<Cell> cells;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<Column> columns);

  const std::string& name() const { return name_; }
  std::size_t row_count() const { return rows_; }
  std::size_t column_count() const { return columns_.size(); }
  std::span<const Column> columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const;
  const Column& column(std::string_view name) const;

  /// First column carrying `role`, if any.
  std::optional<std::size_t> role_column(RoleKind role) const;
  std::vector<std::size_t> columns_with_role(RoleKind role) const;

  /// Returns a copy with the given role assigned to a column. Roles are
  /// the only mutable aspect of a dataset and are fixed before any check runs.
  Dataset with_role(std::string_view column, RoleKind role) const;
  Dataset with_name(std::string name) const;

  /// Returns a copy with one column's cells replaced.
  Dataset with_cells(std::size_t column, std::vector<Cell> cells) const;

 private:
  void validate() const;

  std::string name_;
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

/// Immutable projection of a dataset onto a subset of rows. The view does
/// not own the dataset; it must not outlive it.
class DatasetView {
 public:
  DatasetView(const Dataset& ds, std::vector<std::size_t> rows)
      : ds_(&ds), rows_(std::move(rows)) {}

  const Dataset& dataset() const { return *ds_; }
  std::span<const std::size_t> rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const Cell& cell(std::size_t column, std::size_t view_row) const {
    return ds_->column(column).cells[rows_[view_row]];
  }

  /// Materialises the view as a standalone dataset.
  Dataset materialize(std::string name = {}) const;

 private:
  const Dataset* ds_;
  std::vector<std::size_t> rows_;
};

/// Binary target handling. Numeric {0,1} and boolean columns are binary;
/// a categorical column with exactly two levels is binary with the
/// lexicographically larger level as the positive class.
struct BinaryTarget {
  std::vector<std::optional<bool>> positive;  // per row, nullopt when missing
  std::string positive_label;
  std::string negative_label;
};

std::optional<BinaryTarget> as_binary_target(const Column& col);

}  // namespace leakaudit
