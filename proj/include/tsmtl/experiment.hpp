#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsmtl/data.hpp"
#include "tsmtl/problem.hpp"
#include "tsmtl/solver.hpp"

namespace tsmtl {

enum class DatasetKind { Synthetic, AirQuality, Portable };

struct DatasetSource {
  DatasetKind kind = DatasetKind::Synthetic;
  SyntheticSpec synthetic;
  std::filesystem::path path;  // air-quality CSV or portable dataset file
};

struct LambdaGrid {
  double min_value = 0.1;
  double max_value = 1000.0;
  int points = 5;  // log-spaced, per lambda

  std::vector<double> values() const;
};

struct ExperimentConfig {
  DatasetSource dataset;
  std::vector<double> rho_grid = {0.001, 0.01, 0.1, 1.0, 10.0, 20.0, 30.0};
  int repeats = 10;
  int max_iters = 1000;
  int eval_every = 1;
  LambdaGrid lambda_grid;
  std::vector<Variant> variants = {Variant::TwoBlock, Variant::MultiBlock};
  std::uint64_t base_seed = 1;
  std::filesystem::path out_dir = "out";
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  double sigma = 1.0;
  std::optional<double> rho1;
  DualCoupling dual_coupling = DualCoupling::Paper;
  NmseDenominator nmse_denominator = NmseDenominator::Std;
  double train_frac = 0.7;
  double val_frac = 0.2;
  bool serial = false;  // sequential runs, elapsed_seconds forced to zero
  int jobs = 0;         // worker threads; 0 means hardware concurrency

  void validate() const;
};

struct SummaryRow {
  std::string variant;
  double rho = 0.0;
  int repeat = 0;
  std::optional<double> r_total_mean;
  std::optional<double> r_total_std;
  std::optional<double> val_nmse_mean;
  std::optional<double> val_nmse_std;
  std::optional<double> final_objective;
  bool diverged = false;
};

// Mean/std (population) of r_total and val_nmse over the trailing
// min(100, size) records, plus the last objective. Empty traces produce a
// row with only the diverged flag populated.
SummaryRow summarize_trace(const std::vector<TraceRecord>& trace, bool diverged,
                           const std::string& variant, double rho, int repeat);

// trace_<variant>_rho<rho>_rep<repeat>.csv
std::string trace_filename(const std::string& variant, double rho, int repeat);

void emit_trace_csv(const std::vector<TraceRecord>& trace, bool diverged,
                    const std::filesystem::path& path);

struct TraceFile {
  std::vector<TraceRecord> records;
  bool diverged = false;
};

TraceFile read_trace_csv(const std::filesystem::path& path);

void emit_summary_csv(const std::vector<SummaryRow>& rows,
                      const std::filesystem::path& path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

// Runs every (variant, rho, repeat) combination: repeat r draws its split
// with seed base_seed + r (shared across variants and rhos), z-scores
// features on the train statistics, runs the solver, writes the trace file,
// and appends a SummaryRow. Output order is variants x rho_grid x repeats
// regardless of execution order; summary.csv lands in out_dir.
std::vector<SummaryRow> run_sweep(const ExperimentConfig& config);

struct GridSearchResult {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double val_nmse = 0.0;
};

struct GridCell {
  double lambda1, lambda2, lambda3;
  std::optional<double> val_nmse;  // absent when the run diverged
};

// Evaluates the lambda grid with the multi-block solver at rho = 1 on one
// seeded split, minimizing validation nMSE. Ties go to the lexicographically
// larger (lambda1, lambda2, lambda3). Throws when every run diverged.
// Writes the per-combination table to out_dir/gridsearch.csv.
GridSearchResult grid_search(const ExperimentConfig& config,
                             std::vector<GridCell>* table = nullptr);

// Recomputes SummaryRows from the trace files in trace_dir (used by the
// report command to cross-check an existing summary.csv).
std::vector<SummaryRow> recompute_summary(const std::filesystem::path& trace_dir);

}  // namespace tsmtl
