#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "leakaudit/dataset.hpp"
#include "leakaudit/rng.hpp"
#include "leakaudit/split.hpp"

namespace testsupport {

using namespace leakaudit;

inline Column numeric_column(std::string name, std::vector<double> values, RoleKind role = RoleKind::feature) {
  Column c{std::move(name), DType::numeric, role, {}};
  for (double v : values) c.cells.emplace_back(v);
  return c;
}

inline Column text_column(std::string name, std::vector<std::string> values, RoleKind role = RoleKind::feature,
                          DType dtype = DType::categorical) {
  Column c{std::move(name), dtype, role, {}};
  for (auto& v : values) c.cells.emplace_back(std::move(v));
  return c;
}

/// Random small-alphabet dataset so duplicates occur naturally.
inline Dataset random_dataset(Rng& rng, std::size_t rows, int levels) {
  std::vector<double> a(rows), b(rows);
  std::vector<std::string> c(rows);
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    a[i] = static_cast<double>(rng.below(levels)) * 0.5;
    b[i] = static_cast<double>(rng.below(levels));
    c[i] = std::string(1, static_cast<char>('a' + rng.below(3)));
    if (rng.below(2)) c[i][0] = static_cast<char>(c[i][0] - 'a' + 'A');
    y[i] = static_cast<double>(rng.below(2));
  }
  return Dataset("random", {numeric_column("a", a), numeric_column("b", b), text_column("c", c),
                            numeric_column("y", y, RoleKind::target)});
}

inline SplitSpec random_split(Rng& rng, std::size_t rows, double test_fraction = 0.3) {
  std::vector<bool> t(rows);
  for (std::size_t i = 0; i < rows; ++i) t[i] = rng.uniform() < test_fraction;
  return SplitSpec::holdout(std::move(t), SplitOrigin::column);
}

/// Plain string rendering of a row used as an independent equality oracle:
/// numbers printed with printf at the given precision, text lower-cased.
inline std::string oracle_row_string(const Dataset& ds, std::size_t row, int rounding = 9) {
  std::string out;
  for (std::size_t c = 0; c < ds.column_count(); ++c) {
    const auto& col = ds.column(c);
    if (col.role != RoleKind::feature && col.role != RoleKind::target) continue;
    const auto& cell = col.cells[row];
    std::string s;
    if (std::holds_alternative<Missing>(cell)) {
      s = "<missing>";
    } else if (auto d = std::get_if<double>(&cell)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.*f", rounding, *d == 0 ? 0.0 : *d);
      s = buf;
    } else if (auto str = std::get_if<std::string>(&cell)) {
      for (char ch : *str) s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (auto b = std::get_if<bool>(&cell)) {
      s = *b ? "T" : "F";
    } else {
      s = std::to_string(std::get<Timestamp>(cell).seconds);
    }
    out += std::to_string(s.size()) + ":" + s + "|";
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("leakaudit_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }
  std::filesystem::path path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// A sheet answering every question except those in `omit`. Claims ride on
/// the blocks they belong to.
inline std::string sheet_text(const std::set<int>& omit = {}, bool temporal_claim = true) {
  std::string s =
      "sheet_version: 1.0\n"
      "study_title: Civil war onset forecasting\n"
      "claim_summary: Onset can be predicted out of sample\n"
      "role: gdp = feature\n"
      "role: year = timestamp\n";
  for (int q = 1; q <= 21; ++q) {
    if (omit.count(q)) continue;
    s += "\n[Q" + std::to_string(q) + "]\n";
    if (q == 10) s += "claim: no_cross_split_duplicates = true\n";
    if (q == 12) s += "claim: fit_scope impute = train_only\n";
    if (q == 20 && temporal_claim) s += "claim: split_is_temporal = true\n";
    if (q == 21) s += "claim: feature gdp* = economic output is measured before onset\n";
    s += "Answer to question " + std::to_string(q) + ".\n";
  }
  return s;
}

}  // namespace testsupport
