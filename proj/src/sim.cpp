#include "leakaudit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "leakaudit/parallel.hpp"
#include "leakaudit/rng.hpp"
#include "leakaudit/split.hpp"
#include "leakaudit/strings.hpp"

namespace leakaudit::sim {

Dataset generate_synthetic(std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw InputError("n_per_class must be at least 1");
  Rng rng(seed);
  Column gdp{std::string(kFeature), DType::numeric, RoleKind::feature, {}};
  Column onset{std::string(kTarget), DType::numeric, RoleKind::target, {}};
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      gdp.cells.emplace_back(rng.normal() + cls);
      onset.cells.emplace_back(static_cast<double>(cls));
    }
  }
  return Dataset("synthetic", {std::move(gdp), std::move(onset)});
}

Dataset apply_missingness(const Dataset& ds, double rate, std::uint64_t seed, std::string_view column) {
  if (!(rate >= 0 && rate <= 0.99)) throw InputError("missingness rate must lie in [0, 0.99]");
  const auto c = ds.find(column);
  if (!c) throw InputError("unknown column '" + std::string(column) + "'");
  const auto n = ds.row_count();
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first k positions are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  auto cells = ds.column(*c).cells;
  for (std::size_t i = 0; i < k; ++i) cells[idx[i]] = Missing{};
  return ds.with_cells(*c, std::move(cells));
}

std::string_view to_string(ImputeVariant v) {
  return v == ImputeVariant::leaky_joint ? "leaky_joint" : "clean_train_only";
}

ImputeVariant parse_variant(std::string_view s) {
  if (s == "leaky_joint") return ImputeVariant::leaky_joint;
  if (s == "clean_train_only") return ImputeVariant::clean_train_only;
  throw InputError("unknown imputation variant '" + std::string(s) + "'");
}

namespace {

std::size_t feature_column(const Dataset& ds, std::string_view column) {
  const auto c = ds.find(column);
  if (!c || ds.column(*c).dtype != DType::numeric) {
    throw InputError("imputation needs numeric column '" + std::string(column) + "'");
  }
  return *c;
}

BinaryTarget target_of(const Dataset& ds) {
  const auto t = ds.role_column(RoleKind::target);
  if (!t) throw InputError("imputation needs a target column");
  auto bt = as_binary_target(ds.column(*t));
  if (!bt) throw InputError("imputation needs a binary target");
  return *bt;
}

Dataset fill(const DatasetView& view, std::size_t col, const std::vector<double>& values, std::vector<bool>& imputed) {
  auto ds = view.materialize();
  auto cells = ds.column(col).cells;
  imputed.assign(cells.size(), false);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (is_missing(cells[i])) {
      cells[i] = values[i];
      imputed[i] = true;
    }
  }
  return ds.with_cells(col, std::move(cells));
}

}  // namespace

double train_mean(const DatasetView& train, std::string_view column) {
  const auto col = feature_column(train.dataset(), column);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& c = train.cell(col, i);
    if (!is_missing(c)) {
      sum += std::get<double>(c);
      ++n;
    }
  }
  if (n == 0) throw InputError("no observed training values to compute an imputation mean");
  return sum / static_cast<double>(n);
}

ImputedSplit impute(const DatasetView& train, const DatasetView& test, ImputeVariant variant, std::string_view column) {
  const auto col = feature_column(train.dataset(), column);
  if (&train.dataset() != &test.dataset() && feature_column(test.dataset(), column) != col) {
    throw InputError("train and test views disagree on the feature column");
  }
  ImputedSplit out;
  std::vector<double> train_fill(train.size()), test_fill(test.size());

  if (variant == ImputeVariant::clean_train_only) {
    const double m = train_mean(train, column);
    std::fill(train_fill.begin(), train_fill.end(), m);
    std::fill(test_fill.begin(), test_fill.end(), m);
  } else {
    // Class-conditional means over the pooled rows, using every label
    // including the test labels.
    const auto t_train = target_of(train.dataset());
    const auto t_test = target_of(test.dataset());
    double sum[2] = {0, 0};
    std::size_t n[2] = {0, 0};
    auto add = [&](const DatasetView& v, const BinaryTarget& t) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& lab = t.positive[v.rows()[i]];
        const auto& c = v.cell(col, i);
        if (!lab || is_missing(c)) continue;
        sum[*lab] += std::get<double>(c);
        ++n[*lab];
      }
    };
    add(train, t_train);
    add(test, t_test);
    auto assign = [&](const DatasetView& v, const BinaryTarget& t, std::vector<double>& values) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!is_missing(v.cell(col, i))) continue;
        const auto& lab = t.positive[v.rows()[i]];
        if (!lab) throw InputError("leaky imputation needs a label for every missing cell");
        if (n[*lab] == 0) throw InputError("no observed values in a class to compute its imputation mean");
        values[i] = sum[*lab] / static_cast<double>(n[*lab]);
      }
    };
    assign(train, t_train, train_fill);
    assign(test, t_test, test_fill);
  }
  out.train = fill(train, col, train_fill, out.train_imputed);
  out.test = fill(test, col, test_fill, out.test_imputed);
  return out;
}

ml::TrainingData to_training_data(const Dataset& ds) {
  ml::TrainingData d;
  const auto t = target_of(ds);
  for (auto c : ds.columns_with_role(RoleKind::feature)) {
    const auto& col = ds.column(c);
    if (col.dtype != DType::numeric) continue;
    std::vector<double> x;
    x.reserve(ds.row_count());
    for (const auto& cell : col.cells) {
      if (is_missing(cell)) throw InputError("feature '" + col.name + "' still has missing values");
      x.push_back(std::get<double>(cell));
    }
    d.features.push_back(std::move(x));
  }
  for (const auto& lab : t.positive) {
    if (!lab) throw InputError("target has missing values");
    d.labels.push_back(*lab ? 1 : 0);
  }
  return d;
}

double train_and_eval(const Dataset& train, const Dataset& test, const ml::ClassifierConfig& cfg, std::uint64_t seed) {
  return ml::train_and_eval(to_training_data(train), to_training_data(test), cfg, seed);
}

std::vector<double> default_grid() { return parse_grid("0:0.95:0.05"); }

std::vector<double> parse_grid(std::string_view spec) {
  const auto parts = split(spec, ':');
  double lo, hi, step;
  if (parts.size() != 3 || !parse_double(parts[0], lo) || !parse_double(parts[1], hi) ||
      !parse_double(parts[2], step)) {
    throw InputError("grid must read lo:hi:step, got '" + std::string(spec) + "'");
  }
  if (!(step > 0) || hi < lo) throw InputError("grid needs step > 0 and hi >= lo");
  std::vector<double> g;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    // Round to 12 decimals so 0.05 * 3 prints as 0.15.
    g.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return g;
}

void SimConfig::validate() const {
  if (n_per_class < 1) throw InputError("n_per_class must be at least 1");
  if (repetitions < 1) throw InputError("repetitions must be at least 1");
  if (missingness_grid.empty()) throw InputError("missingness grid is empty");
  for (double g : missingness_grid) {
    if (!(g >= 0 && g <= 0.99)) throw InputError("grid values must lie in [0, 0.99]");
  }
  if (variants.empty()) throw InputError("no imputation variants selected");
  classifier.validate();
}

const SimRow& SimResult::at(double missingness, ImputeVariant v) const {
  for (const auto& r : rows) {
    if (std::fabs(r.missingness - missingness) < 1e-9 && r.variant == v) return r;
  }
  throw InputError("no simulation row for the requested cell");
}

double run_cell(const SimConfig& cfg, std::size_t grid_index, std::size_t repetition, ImputeVariant variant) {
  const auto cell = derive_seed(cfg.master_seed, {grid_index, repetition});
  const auto ds = generate_synthetic(cfg.n_per_class, derive_seed(cell, {0}));

  // 50/50 random split.
  std::vector<std::size_t> order(ds.row_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(cell, {1}));
  split_rng.shuffle(order.begin(), order.end());
  std::vector<bool> is_test(ds.row_count());
  for (std::size_t i = ds.row_count() / 2; i < order.size(); ++i) is_test[order[i]] = true;
  const auto split = SplitSpec::holdout(std::move(is_test), SplitOrigin::column);

  const auto holed = apply_missingness(ds, cfg.missingness_grid[grid_index], derive_seed(cell, {2}));
  const auto [train, test] = partition(holed, split);
  const auto imputed = impute(train, test, variant);
  return train_and_eval(imputed.train, imputed.test, cfg.classifier, derive_seed(cell, {3}));
}

SimResult run_sweep(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t g = cfg.missingness_grid.size(), v = cfg.variants.size(), reps = cfg.repetitions;
  std::vector<double> acc(g * v * reps);
  parallel_for(acc.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t gi = i / (v * reps), vi = (i / reps) % v, rep = i % reps;
    acc[i] = run_cell(cfg, gi, rep, cfg.variants[vi]);
  });

  SimResult res;
  for (std::size_t gi = 0; gi < g; ++gi) {
    for (std::size_t vi = 0; vi < v; ++vi) {
      SimRow row;
      row.missingness = cfg.missingness_grid[gi];
      row.variant = cfg.variants[vi];
      row.repetitions = reps;
      row.accuracies.assign(acc.begin() + static_cast<long>((gi * v + vi) * reps),
                            acc.begin() + static_cast<long>((gi * v + vi + 1) * reps));
      // Summation in repetition order keeps the mean independent of threading.
      row.mean_accuracy = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) / double(reps);
      auto sorted = row.accuracies;
      std::sort(sorted.begin(), sorted.end());
      const auto lo = static_cast<std::size_t>(std::floor(0.025 * double(reps)));
      const auto hi = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(0.975 * double(reps))), 1, reps) - 1;
      // Percentile endpoints can sit on the wrong side of the mean for very
      // skewed samples; the interval is widened to contain it.
      row.ci_low = std::min(sorted[std::min(lo, reps - 1)], row.mean_accuracy);
      row.ci_high = std::max(sorted[hi], row.mean_accuracy);
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

void write_csv(const SimResult& r, std::ostream& out) {
  out << "missingness,variant,mean_accuracy,ci_low,ci_high,repetitions\n";
  for (const auto& row : r.rows) {
    out << format_shortest(row.missingness) << ',' << to_string(row.variant) << ','
        << format_shortest(row.mean_accuracy) << ',' << format_shortest(row.ci_low) << ','
        << format_shortest(row.ci_high) << ',' << row.repetitions << '\n';
  }
}

}  // namespace leakaudit::sim
