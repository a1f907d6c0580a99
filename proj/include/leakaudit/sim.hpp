#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leakaudit/classifier.hpp"
#include "leakaudit/dataset.hpp"

namespace leakaudit::sim {

inline constexpr std::string_view kFeature = "gdp";
inline constexpr std::string_view kTarget = "onset";

/// Two-class data: onset in {0,1} (n_per_class rows each, class 0 first) and
/// gdp = N(0,1) + onset.
Dataset generate_synthetic(std::size_t n_per_class, std::uint64_t seed);

/// Deletes exactly round(rate * rows) values of `column`, chosen uniformly
/// without replacement.
Dataset apply_missingness(const Dataset& ds, double rate, std::uint64_t seed, std::string_view column = kFeature);

enum class ImputeVariant { leaky_joint, clean_train_only };
std::string_view to_string(ImputeVariant v);
ImputeVariant parse_variant(std::string_view s);

struct ImputedSplit {
  Dataset train, test;
  std::vector<bool> train_imputed, test_imputed;  // which feature cells were filled
};

/// Fill value for the clean pipeline. Sees the training rows only; of the test
/// side it is told nothing.
double train_mean(const DatasetView& train, std::string_view column = kFeature);

/// leaky_joint fills every missing cell with the observed mean of its own
/// target class, pooled over train and test. clean_train_only fills every
/// missing cell with the training mean.
ImputedSplit impute(const DatasetView& train, const DatasetView& test, ImputeVariant variant,
                    std::string_view column = kFeature);

/// Feature-role numeric columns and the binary target as a training matrix.
ml::TrainingData to_training_data(const Dataset& ds);

double train_and_eval(const Dataset& train, const Dataset& test, const ml::ClassifierConfig& cfg, std::uint64_t seed);

/// Parses "lo:hi:step" into an inclusive grid.
std::vector<double> parse_grid(std::string_view spec);
std::vector<double> default_grid();

struct SimConfig {
  std::size_t n_per_class = 1000;
  std::vector<double> missingness_grid = default_grid();  // 0.00..0.95 step 0.05
  std::size_t repetitions = 100;
  std::uint64_t master_seed = 0;
  ml::ClassifierConfig classifier;
  std::vector<ImputeVariant> variants{ImputeVariant::leaky_joint, ImputeVariant::clean_train_only};
  unsigned threads = 1;

  void validate() const;
};

struct SimRow {
  double missingness = 0;
  ImputeVariant variant = ImputeVariant::leaky_joint;
  double mean_accuracy = 0, ci_low = 0, ci_high = 0;
  std::size_t repetitions = 0;
  std::vector<double> accuracies;  // per repetition, in repetition order
};

struct SimResult {
  std::vector<SimRow> rows;  // grid order, then variant order
  const SimRow& at(double missingness, ImputeVariant v) const;
};

/// One repetition at one grid point: generate, split 50/50, delete, impute,
/// train and evaluate. Both variants of a cell share all random draws.
double run_cell(const SimConfig& cfg, std::size_t grid_index, std::size_t repetition, ImputeVariant variant);

SimResult run_sweep(const SimConfig& cfg);

/// CSV columns: missingness, variant, mean_accuracy, ci_low, ci_high, repetitions.
void write_csv(const SimResult& r, std::ostream& out);

}  // namespace leakaudit::sim
