#include "leakaudit/split.hpp"

#include <fstream>
#include <numeric>

#include "leakaudit/rng.hpp"
#include "leakaudit/strings.hpp"

namespace leakaudit {

std::string_view to_string(SplitOrigin o) {
  switch (o) {
    case SplitOrigin::column: return "column";
    case SplitOrigin::index_file: return "index_file";
    case SplitOrigin::kfold_generated: return "kfold_generated";
  }
  return "?";
}

SplitSpec SplitSpec::holdout(std::vector<bool> is_test, SplitOrigin origin) {
  SplitSpec s;
  s.origin = origin;
  s.labels.reserve(is_test.size());
  for (bool t : is_test) s.labels.push_back(t ? 1u : 0u);
  return s;
}

SplitSpec split_from_column(const Dataset& ds, std::string_view column) {
  const auto& col = ds.column(column);
  std::vector<bool> test(ds.row_count());
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    const auto v = to_lower(trim(cell_text(col.cells[r])));
    if (v == "test") test[r] = true;
    else if (v != "train") {
      throw InputError("split column '" + std::string(column) + "' row " + std::to_string(r) +
                       ": expected 'train' or 'test', got '" + cell_text(col.cells[r]) + "'");
    }
  }
  return SplitSpec::holdout(std::move(test), SplitOrigin::column);
}

SplitSpec split_from_test_indices(std::size_t row_count, const std::vector<std::size_t>& test_rows) {
  std::vector<bool> test(row_count);
  for (auto r : test_rows) {
    if (r >= row_count) {
      throw InputError("test index " + std::to_string(r) + " out of range for " +
                       std::to_string(row_count) + " rows");
    }
    test[r] = true;
  }
  return SplitSpec::holdout(std::move(test), SplitOrigin::index_file);
}

SplitSpec split_from_index_file(const Dataset& ds, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read index file '" + path.string() + "'");
  std::vector<std::size_t> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    double v;
    if (!parse_double(t, v) || v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw InputError("index file line " + std::to_string(lineno) + ": not a row index");
    }
    rows.push_back(static_cast<std::size_t>(v));
  }
  auto s = split_from_test_indices(ds.row_count(), rows);
  return s;
}

std::pair<DatasetView, DatasetView> partition(const Dataset& ds, const SplitSpec& split) {
  if (split.size() != ds.row_count()) {
    throw InputError("split covers " + std::to_string(split.size()) + " rows but dataset has " +
                     std::to_string(ds.row_count()));
  }
  std::vector<std::size_t> train, test;
  for (std::size_t r = 0; r < split.size(); ++r) {
    (split.is_test(r) ? test : train).push_back(r);
  }
  return {DatasetView(ds, std::move(train)), DatasetView(ds, std::move(test))};
}

std::vector<SplitSpec> kfold_partition(const Dataset& ds, std::uint32_t k, std::uint64_t shuffle_seed) {
  const std::size_t n = ds.row_count();
  if (k < 2 || k > n) {
    throw InputError("k-fold requires 2 <= k <= row_count (k=" + std::to_string(k) +
                     ", rows=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(shuffle_seed);
  rng.shuffle(order.begin(), order.end());

  // Contiguous blocks of the permutation; the first n % k folds get one extra row.
  std::vector<std::uint32_t> fold(n);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::uint32_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < len; ++i) fold[order[pos++]] = f;
  }

  const bool temporal = ds.role_column(RoleKind::timestamp).has_value();
  std::vector<SplitSpec> out;
  out.reserve(k);
  for (std::uint32_t f = 0; f < k; ++f) {
    SplitSpec s;
    s.labels = fold;
    s.folds = k;
    s.test_fold = f;
    s.origin = SplitOrigin::kfold_generated;
    s.seed = shuffle_seed;
    s.temporal_caveat = temporal;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace leakaudit
