#include <doctest.h>

#include <numeric>
#include <sstream>

#include "leakaudit/classifier.hpp"
#include "leakaudit/sim.hpp"
#include "leakaudit/split.hpp"
#include "leakaudit/stats.hpp"
#include "support.hpp"

using namespace leakaudit;
using namespace leakaudit::sim;
using namespace testsupport;

namespace {

const double kBayes = stats::normal_cdf(0.5);

double class_mean(const Dataset& ds, int cls) {
  double s = 0;
  int n = 0;
  for (std::size_t i = 0; i < ds.row_count(); ++i) {
    if (std::get<double>(ds.column(kTarget).cells[i]) != cls) continue;
    const auto& c = ds.column(kFeature).cells[i];
    if (is_missing(c)) continue;
    s += std::get<double>(c);
    ++n;
  }
  return s / n;
}

std::size_t missing_count(const Dataset& ds) {
  const auto& cells = ds.column(kFeature).cells;
  return std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return is_missing(c); });
}

ml::TrainingData one_feature(const std::vector<double>& x, const std::vector<int>& y) {
  return {{x}, y};
}

}  // namespace

TEST_CASE("generate: class sizes and location shift") {
  const auto ds = generate_synthetic(1000, 1);
  CHECK(ds.row_count() == 2000);
  const auto& y = ds.column(kTarget).cells;
  CHECK(std::count_if(y.begin(), y.end(), [](const Cell& c) { return std::get<double>(c) == 1; }) == 1000);
  CHECK(std::fabs(class_mean(ds, 0)) < 0.1);
  CHECK(std::fabs(class_mean(ds, 1) - class_mean(ds, 0) - 1.0) < 0.15);
}

TEST_CASE("missingness: exact counts and determinism") {
  const auto ds = generate_synthetic(1000, 2);
  CHECK(missing_count(apply_missingness(ds, 0, 5)) == 0);
  const auto a = apply_missingness(ds, 0.5, 5);
  const auto b = apply_missingness(ds, 0.5, 5);
  CHECK(missing_count(a) == 1000);
  CHECK(a.column(kFeature).cells == b.column(kFeature).cells);
  CHECK(a.column(kFeature).cells != apply_missingness(ds, 0.5, 6).column(kFeature).cells);
  CHECK_THROWS_AS(apply_missingness(ds, 1.0, 5), InputError);
}

TEST_CASE("impute: identity without missing cells") {
  const auto ds = generate_synthetic(50, 3);
  const auto split = split_from_test_indices(100, {0, 10, 20, 60, 70});
  const auto [train, test] = partition(ds, split);
  for (auto v : {ImputeVariant::leaky_joint, ImputeVariant::clean_train_only}) {
    const auto out = impute(train, test, v);
    CHECK(out.train.column(kFeature).cells == train.materialize().column(kFeature).cells);
    CHECK(out.test.column(kFeature).cells == test.materialize().column(kFeature).cells);
  }
}

TEST_CASE("impute: leaky values separate by class, clean values are one constant") {
  const auto ds = apply_missingness(generate_synthetic(1000, 4), 0.8, 9);
  std::vector<bool> is_test(ds.row_count());
  for (std::size_t i = 0; i < is_test.size(); ++i) is_test[i] = i % 2;
  const auto split = SplitSpec::holdout(is_test, SplitOrigin::column);
  const auto [train, test] = partition(ds, split);

  const auto leaky = impute(train, test, ImputeVariant::leaky_joint);
  std::set<double> filled_by_class[2];
  for (const auto* part : {&leaky.train, &leaky.test}) {
    const auto& imputed = part == &leaky.train ? leaky.train_imputed : leaky.test_imputed;
    for (std::size_t i = 0; i < part->row_count(); ++i) {
      if (!imputed[i]) continue;
      const int cls = static_cast<int>(std::get<double>(part->column(kTarget).cells[i]));
      filled_by_class[cls].insert(std::get<double>(part->column(kFeature).cells[i]));
    }
  }
  REQUIRE(filled_by_class[0].size() == 1);
  REQUIRE(filled_by_class[1].size() == 1);
  // Oracle: observed class means over all rows, train and test pooled.
  CHECK(*filled_by_class[0].begin() == doctest::Approx(class_mean(ds, 0)).epsilon(1e-12));
  CHECK(*filled_by_class[1].begin() == doctest::Approx(class_mean(ds, 1)).epsilon(1e-12));
  CHECK(*filled_by_class[1].begin() - *filled_by_class[0].begin() > 0.7);

  const auto clean = impute(train, test, ImputeVariant::clean_train_only);
  std::set<double> fills;
  for (std::size_t i = 0; i < clean.test.row_count(); ++i) {
    if (clean.test_imputed[i]) fills.insert(std::get<double>(clean.test.column(kFeature).cells[i]));
  }
  for (std::size_t i = 0; i < clean.train.row_count(); ++i) {
    if (clean.train_imputed[i]) fills.insert(std::get<double>(clean.train.column(kFeature).cells[i]));
  }
  REQUIRE(fills.size() == 1);
  CHECK(*fills.begin() == train_mean(train));
}

TEST_CASE("impute: clean fill ignores test values and labels") {
  const auto ds = apply_missingness(generate_synthetic(200, 5), 0.4, 1);
  std::vector<bool> is_test(ds.row_count());
  for (std::size_t i = 0; i < is_test.size(); ++i) is_test[i] = i % 3 == 0;
  const auto split = SplitSpec::holdout(is_test, SplitOrigin::column);
  // Scramble every test value and label that is present.
  auto gdp = ds.column(kFeature).cells;
  auto onset = ds.column(kTarget).cells;
  for (std::size_t i = 0; i < gdp.size(); ++i) {
    if (!is_test[i]) continue;
    if (!is_missing(gdp[i])) gdp[i] = 1e6;
    onset[i] = 1 - std::get<double>(onset[i]);
  }
  const auto scrambled = ds.with_cells(*ds.find(kFeature), gdp).with_cells(*ds.find(kTarget), onset);
  const auto [tr1, te1] = partition(ds, split);
  const auto [tr2, te2] = partition(scrambled, split);
  const auto a = impute(tr1, te1, ImputeVariant::clean_train_only);
  const auto b = impute(tr2, te2, ImputeVariant::clean_train_only);
  CHECK(a.train.column(kFeature).cells == b.train.column(kFeature).cells);
  CHECK(a.test_imputed == b.test_imputed);
}

TEST_CASE("classifiers: perfect feature, no signal, Bayes accuracy") {
  Rng rng(6);
  std::vector<double> x, noise, gdp, gdp_test;
  std::vector<int> y;
  for (int i = 0; i < 2000; ++i) {
    const int lab = i % 2;
    y.push_back(lab);
    x.push_back(lab);
    noise.push_back(rng.normal());
    gdp.push_back(rng.normal() + lab);
    gdp_test.push_back(rng.normal() + lab);
  }
  std::vector<double> noise_test;
  for (int i = 0; i < 2000; ++i) noise_test.push_back(rng.normal());
  for (auto kind : {ml::ClassifierKind::random_forest, ml::ClassifierKind::logistic_regression}) {
    ml::ClassifierConfig cfg;
    cfg.kind = kind;
    CHECK(ml::train_and_eval(one_feature(x, y), one_feature(x, y), cfg, 1) == 1.0);
    CHECK(std::fabs(ml::train_and_eval(one_feature(noise, y), one_feature(noise_test, y), cfg, 1) - 0.5) < 0.05);
    CHECK(std::fabs(ml::train_and_eval(one_feature(gdp, y), one_feature(gdp_test, y), cfg, 1) - kBayes) < 0.05);
  }
  ml::ClassifierConfig cfg;
  std::vector<int> single(2000, 1);
  CHECK_THROWS_AS(ml::train_and_eval(one_feature(x, single), one_feature(x, y), cfg, 1), ml::TrainingError);
  cfg.trees = 0;
  CHECK_THROWS_AS(cfg.validate(), std::exception);
}

TEST_CASE("tree: split rule sends x <= threshold left") {
  ml::TrainingData d{{{0, 1, 2, 3}}, {0, 0, 1, 1}};
  std::vector<std::size_t> rows{0, 1, 2, 3};
  ml::DecisionTree t;
  t.fit(d, rows, 3, 1, 1, 0);
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.nodes()[0].threshold == 1.5);
  const double lo[] = {1.5}, hi[] = {1.6};
  CHECK(t.predict_proba(lo) == 0);
  CHECK(t.predict_proba(hi) == 1);
}

TEST_CASE("run_cell: variants agree at zero missingness") {
  SimConfig cfg;
  cfg.n_per_class = 300;
  cfg.missingness_grid = {0.0};
  for (std::size_t rep = 0; rep < 3; ++rep) {
    CHECK(run_cell(cfg, 0, rep, ImputeVariant::leaky_joint) == run_cell(cfg, 0, rep, ImputeVariant::clean_train_only));
  }
}

TEST_CASE("sweep: reproducible across runs and thread counts") {
  SimConfig cfg;
  cfg.n_per_class = 150;
  cfg.missingness_grid = parse_grid("0:0.9:0.45");
  cfg.repetitions = 4;
  cfg.master_seed = 7;
  cfg.classifier.trees = 10;
  std::ostringstream a, b, c;
  write_csv(run_sweep(cfg), a);
  write_csv(run_sweep(cfg), b);
  cfg.threads = 3;
  write_csv(run_sweep(cfg), c);
  CHECK(a.str() == b.str());
  CHECK(a.str() == c.str());
  CHECK(a.str().rfind("missingness,variant,mean_accuracy,ci_low,ci_high,repetitions\n", 0) == 0);
  const auto r = run_sweep(cfg);
  for (const auto& row : r.rows) {
    CHECK(row.ci_low <= row.mean_accuracy);
    CHECK(row.mean_accuracy <= row.ci_high);
    CHECK(row.accuracies.size() == 4);
  }
}

TEST_CASE("grid parsing") {
  const auto g = parse_grid("0:0.95:0.05");
  REQUIRE(g.size() == 20);
  CHECK(g[3] == 0.15);
  CHECK(g.back() == 0.95);
  CHECK(default_grid() == g);
  CHECK_THROWS_AS(parse_grid("0:1"), InputError);
  CHECK_THROWS_AS(parse_grid("0:0.5:0"), InputError);
}
