#include "leakaudit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_set>

#include "leakaudit/strings.hpp"

namespace leakaudit {

std::string_view to_string(DType t) {
  switch (t) {
    case DType::numeric: return "numeric";
    case DType::categorical: return "categorical";
    case DType::boolean: return "boolean";
    case DType::timestamp: return "timestamp";
    case DType::text: return "text";
  }
  return "?";
}

std::string_view to_string(RoleKind r) {
  switch (r) {
    case RoleKind::feature: return "feature";
    case RoleKind::target: return "target";
    case RoleKind::timestamp: return "timestamp";
    case RoleKind::unit_id: return "unit_id";
    case RoleKind::group_id: return "group_id";
    case RoleKind::row_id: return "row_id";
    case RoleKind::ignored: return "ignored";
  }
  return "?";
}

RoleKind parse_role(std::string_view s) {
  for (auto r : {RoleKind::feature, RoleKind::target, RoleKind::timestamp, RoleKind::unit_id,
                 RoleKind::group_id, RoleKind::row_id, RoleKind::ignored}) {
    if (to_string(r) == s) return r;
  }
  throw InputError("unknown column role '" + std::string(s) + "'");
}

std::optional<double> time_key(const Cell& c) {
  if (auto* d = std::get_if<double>(&c)) return *d;
  if (auto* t = std::get_if<Timestamp>(&c)) return static_cast<double>(t->seconds);
  return std::nullopt;
}

std::string cell_text(const Cell& c) {
  struct Visitor {
    std::string operator()(const Missing&) const { return ""; }
    std::string operator()(double d) const { return format_shortest(d); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const Timestamp& t) const { return t.text; }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

Dataset::Dataset(std::string name, std::vector<Column> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
  rows_ = columns_.empty() ? 0 : columns_.front().cells.size();
  validate();
}

void Dataset::validate() const {
  std::unordered_set<std::string> seen;
  int targets = 0, timestamps = 0, units = 0;
  for (const auto& c : columns_) {
    if (c.cells.size() != rows_) {
      throw InputError("column '" + c.name + "' has " + std::to_string(c.cells.size()) +
                       " cells, expected " + std::to_string(rows_));
    }
    if (!seen.insert(std::string(trim(c.name))).second) {
      throw InputError("duplicate column name '" + std::string(trim(c.name)) + "'");
    }
    targets += c.role == RoleKind::target;
    timestamps += c.role == RoleKind::timestamp;
    units += c.role == RoleKind::unit_id;
  }
  if (targets > 1) throw InputError("more than one target column");
  if (timestamps > 1) throw InputError("more than one timestamp column");
  if (units > 1) throw InputError("more than one unit_id column");
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (trim(columns_[i].name) == trim(name)) return i;
  }
  return std::nullopt;
}

const Column& Dataset::column(std::string_view name) const {
  auto i = find(name);
  if (!i) throw InputError("unknown column '" + std::string(name) + "'");
  return columns_[*i];
}

std::optional<std::size_t> Dataset::role_column(RoleKind role) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].role == role) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> Dataset::columns_with_role(RoleKind role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].role == role) out.push_back(i);
  }
  return out;
}

Dataset Dataset::with_role(std::string_view column, RoleKind role) const {
  auto i = find(column);
  if (!i) throw InputError("cannot assign role to unknown column '" + std::string(column) + "'");
  Dataset out = *this;
  out.columns_[*i].role = role;
  out.validate();
  return out;
}

Dataset Dataset::with_name(std::string name) const {
  Dataset out = *this;
  out.name_ = std::move(name);
  return out;
}

Dataset Dataset::with_cells(std::size_t column, std::vector<Cell> cells) const {
  Dataset out = *this;
  out.columns_.at(column).cells = std::move(cells);
  out.validate();
  return out;
}

Dataset DatasetView::materialize(std::string name) const {
  std::vector<Column> cols;
  cols.reserve(ds_->column_count());
  for (const auto& c : ds_->columns()) {
    Column nc{c.name, c.dtype, c.role, {}};
    nc.cells.reserve(rows_.size());
    for (auto r : rows_) nc.cells.push_back(c.cells[r]);
    cols.push_back(std::move(nc));
  }
  return Dataset(name.empty() ? ds_->name() : std::move(name), std::move(cols));
}

std::optional<BinaryTarget> as_binary_target(const Column& col) {
  BinaryTarget t;
  t.positive.reserve(col.cells.size());
  switch (col.dtype) {
    case DType::numeric:
      t.positive_label = "1";
      t.negative_label = "0";
      for (const auto& c : col.cells) {
        if (is_missing(c)) {
          t.positive.emplace_back();
          continue;
        }
        const double v = std::get<double>(c);
        if (v != 0.0 && v != 1.0) return std::nullopt;
        t.positive.emplace_back(v == 1.0);
      }
      return t;
    case DType::boolean:
      t.positive_label = "true";
      t.negative_label = "false";
      for (const auto& c : col.cells) {
        if (is_missing(c)) t.positive.emplace_back();
        else t.positive.emplace_back(std::get<bool>(c));
      }
      return t;
    case DType::categorical: {
      std::set<std::string> levels;
      for (const auto& c : col.cells) {
        if (!is_missing(c)) levels.insert(std::get<std::string>(c));
      }
      if (levels.size() != 2) return std::nullopt;
      t.negative_label = *levels.begin();
      t.positive_label = *levels.rbegin();
      for (const auto& c : col.cells) {
        if (is_missing(c)) t.positive.emplace_back();
        else t.positive.emplace_back(std::get<std::string>(c) == t.positive_label);
      }
      return t;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace leakaudit
