#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsmtl/problem.hpp"

namespace tsmtl {

struct SyntheticSpec {
  int num_features = 5;
  int num_tasks = 4;
  std::vector<int> n_per_task;    // empty means n_uniform everywhere
  int n_uniform = 20;
  double noise_std = 0.1;
  double row_sparsity = 0.4;      // fraction of feature rows forced to zero
  double jump_sparsity = 0.1;     // fraction of active (row, step) pairs jumping
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<int> resolved_counts() const;
};

struct SyntheticDataset {
  ProblemData data;
  Eigen::MatrixXd theta_true;  // p x T
};

// Draws a ground-truth coefficient matrix whose active rows follow smooth
// sinusoidal trajectories with sparse persistent jumps, then samples
// standard-normal design matrices and noisy targets. Bit-reproducible for a
// fixed spec.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyTaskError : std::runtime_error {
  explicit EmptyTaskError(const std::string& what) : std::runtime_error(what) {}
};

struct AirQualityOptions {
  // Require all 24 hourly tasks to be nonempty. When off, empty hours are
  // dropped and the remaining tasks keep ascending hour order.
  bool strict_24_tasks = true;
};

struct LoadReport {
  int rows_read = 0;         // non-blank data lines past the header
  int rows_kept = 0;
  int rows_missing = 0;      // dropped for a -200 sentinel in a used column
  int rows_malformed = 0;    // dropped for a malformed Time field
  std::vector<int> task_hours;  // hour represented by each task, ascending
};

// Reads the hourly air-quality export: semicolon-delimited, decimal commas,
// -200 as the missing-value sentinel, trailing empty columns. One task per
// hour of day; features are the five PT08 sensor channels plus temperature
// and relative humidity; the target is CO(GT).
ProblemData load_air_quality(const std::filesystem::path& path,
                             const AirQualityOptions& options = {},
                             LoadReport* report = nullptr);

struct ScalerParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_dev;
};

// Per-feature mean and population standard deviation pooled across the
// tasks' rows. Throws on a feature with (near-)zero spread.
ScalerParams fit_scaler(const ProblemData& train);

// (x - mean) / std per feature; targets pass through untouched.
ProblemData apply_scaler(const ProblemData& data, const ScalerParams& params);

struct SplitResult {
  ProblemData train;
  ProblemData validation;
  ProblemData test;
};

// Per-task random split. Row counts per task: test = floor((1 - train_frac) n),
// validation = floor(val_frac n), train = the remainder. Throws when any
// task would leave a split empty.
SplitResult split(const ProblemData& data, double train_frac, double val_frac,
                  std::uint64_t seed);

// Plain-text dataset format: a header with dimensions and per-task row
// counts, then each task's rows as whitespace-separated features followed by
// the target. Values round-trip exactly. A seed, when given, is recorded as
// a comment for provenance; comments are ignored on load.
void save_dataset(const ProblemData& data, const std::filesystem::path& path,
                  std::optional<std::uint64_t> seed = std::nullopt);
ProblemData load_dataset(const std::filesystem::path& path);

}  // namespace tsmtl
