#include "leakaudit/fingerprint.hpp"

#include <cmath>
#include <cstdio>

#include "leakaudit/strings.hpp"

namespace leakaudit {

std::string RowFingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> resolve_columns(const Dataset& ds, const FingerprintConfig& config) {
  std::vector<std::size_t> cols;
  if (config.columns_included.empty()) {
    for (std::size_t i = 0; i < ds.column_count(); ++i) {
      const auto role = ds.column(i).role;
      if (role == RoleKind::feature || role == RoleKind::target) cols.push_back(i);
    }
  } else {
    for (const auto& name : config.columns_included) {
      auto i = ds.find(name);
      if (!i) throw InputError("fingerprint column '" + name + "' not in dataset");
      cols.push_back(*i);
    }
  }
  if (cols.empty()) throw InputError("fingerprint needs at least one column");
  return cols;
}

std::string canonical_cell(const Cell& c, const FingerprintConfig& config) {
  if (is_missing(c)) return std::string(kMissingToken);
  if (auto* d = std::get_if<double>(&c)) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.*f", config.numeric_rounding, *d);
    std::string s(buf);
    // "-0.000" and "0.000" are the same value.
    if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
    return s;
  }
  if (auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  if (auto* t = std::get_if<Timestamp>(&c)) return std::to_string(t->seconds);
  const auto& s = std::get<std::string>(c);
  return config.case_fold_text ? to_lower(s) : s;
}

std::string canonical_row(const Dataset& ds, std::size_t row, const std::vector<std::size_t>& columns,
                          const FingerprintConfig& config) {
  std::string out;
  for (auto c : columns) {
    const auto cell = canonical_cell(ds.column(c).cells[row], config);
    out += std::to_string(cell.size());
    out += ':';
    out += cell;
  }
  return out;
}

RowFingerprint row_fingerprint(const Dataset& ds, std::size_t row_index, const FingerprintConfig& config) {
  if (row_index >= ds.row_count()) throw InputError("row index out of range");
  const auto cols = resolve_columns(ds, config);
  return {fnv1a64(canonical_row(ds, row_index, cols, config)), config};
}

}  // namespace leakaudit
