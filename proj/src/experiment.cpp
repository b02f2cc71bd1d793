#include "tsmtl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>
#include <utility>

#include "text_util.hpp"
#include "tsmtl/temporal_kernel.hpp"

namespace tsmtl {

namespace {

constexpr const char* kTraceHeader =
    "iter,objective,r_eq,r_smooth,r_pi,r_total,val_nmse,elapsed_seconds";
constexpr const char* kSummaryHeader =
    "variant,rho,repeat,r_total_mean,r_total_std,val_nmse_mean,val_nmse_std,"
    "final_objective,diverged";

struct Stats {
  double mean = 0.0;
  double std_dev = 0.0;
};

Stats population_stats(const std::vector<double>& values) {
  Stats s;
  double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(sq / n);
  return s;
}

ProblemData load_source(const DatasetSource& source) {
  switch (source.kind) {
    case DatasetKind::Synthetic:
      return generate_synthetic(source.synthetic).data;
    case DatasetKind::AirQuality:
      return load_air_quality(source.path);
    case DatasetKind::Portable:
      return load_dataset(source.path);
  }
  throw std::logic_error("unknown dataset kind");
}

struct PreparedSplit {
  ProblemData train;
  ProblemData validation;
  ProblemData test;
};

PreparedSplit prepare_split(const ProblemData& full, const ExperimentConfig& config,
                            std::uint64_t seed) {
  SplitResult parts = split(full, config.train_frac, config.val_frac, seed);
  ScalerParams scaler = fit_scaler(parts.train);
  return PreparedSplit{apply_scaler(parts.train, scaler),
                       apply_scaler(parts.validation, scaler),
                       apply_scaler(parts.test, scaler)};
}

Hyperparams hyper_for(const ExperimentConfig& config, double rho) {
  Hyperparams h;
  h.lambda1 = config.lambda1;
  h.lambda2 = config.lambda2;
  h.lambda3 = config.lambda3;
  h.sigma = config.sigma;
  h.rho = rho;
  h.rho1 = config.rho1;
  h.dual_coupling = config.dual_coupling;
  h.max_iters = config.max_iters;
  h.eval_every = config.eval_every;
  return h;
}

std::string csv_optional(const std::optional<double>& v) {
  return v.has_value() ? text::format_double(*v) : std::string();
}

std::optional<double> parse_optional(const std::string& field, const std::string& what) {
  if (field.empty()) return std::nullopt;
  return text::parse_double(field, what);
}

}  // namespace

std::vector<double> LambdaGrid::values() const {
  if (!(min_value > 0) || !(max_value >= min_value) || points < 1) {
    throw std::invalid_argument("lambda grid: need 0 < min <= max and points >= 1");
  }
  if (points == 1) return {min_value};
  std::vector<double> out;
  out.reserve(points);
  double lo = std::log(min_value);
  double hi = std::log(max_value);
  for (int i = 0; i < points; ++i) {
    out.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (rho_grid.empty()) throw std::invalid_argument("config: empty rho grid");
  for (double rho : rho_grid) {
    if (!(rho > 0)) throw std::invalid_argument("config: rho values must be > 0");
  }
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
  if (variants.empty()) throw std::invalid_argument("config: no variants selected");
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) {
    throw std::invalid_argument("config: lambdas must be >= 0");
  }
  if (!(sigma > 0)) throw std::invalid_argument("config: sigma must be > 0");
  if (rho1.has_value() && !(*rho1 > 0)) {
    throw std::invalid_argument("config: rho1 must be > 0");
  }
  if (!(train_frac > 0 && train_frac < 1) || !(val_frac > 0 && val_frac < 1)) {
    throw std::invalid_argument("config: fractions must lie in (0, 1)");
  }
  if (jobs < 0) throw std::invalid_argument("config: jobs must be >= 0");
  lambda_grid.values();  // validates bounds
}

SummaryRow summarize_trace(const std::vector<TraceRecord>& trace, bool diverged,
                           const std::string& variant, double rho, int repeat) {
  SummaryRow row;
  row.variant = variant;
  row.rho = rho;
  row.repeat = repeat;
  row.diverged = diverged;
  if (trace.empty()) return row;

  std::size_t window = std::min<std::size_t>(100, trace.size());
  std::vector<double> totals, vals;
  totals.reserve(window);
  for (std::size_t i = trace.size() - window; i < trace.size(); ++i) {
    totals.push_back(trace[i].r_total);
    if (trace[i].val_nmse.has_value()) vals.push_back(*trace[i].val_nmse);
  }
  Stats t = population_stats(totals);
  row.r_total_mean = t.mean;
  row.r_total_std = t.std_dev;
  if (!vals.empty()) {
    Stats v = population_stats(vals);
    row.val_nmse_mean = v.mean;
    row.val_nmse_std = v.std_dev;
  }
  row.final_objective = trace.back().objective;
  return row;
}

std::string trace_filename(const std::string& variant, double rho, int repeat) {
  return "trace_" + variant + "_rho" + text::format_double(rho) + "_rep" +
         std::to_string(repeat) + ".csv";
}

void emit_trace_csv(const std::vector<TraceRecord>& trace, bool diverged,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kTraceHeader << "\n";
  for (const TraceRecord& rec : trace) {
    out << rec.iter << ',' << text::format_double(rec.objective) << ','
        << text::format_double(rec.r_eq) << ',' << text::format_double(rec.r_smooth)
        << ',' << text::format_double(rec.r_pi) << ','
        << text::format_double(rec.r_total) << ',' << csv_optional(rec.val_nmse) << ','
        << text::format_double(rec.elapsed_seconds) << "\n";
  }
  if (diverged) out << "# diverged\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TraceFile read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || std::string(text::trim(line)) != kTraceHeader) {
    throw std::runtime_error(path.string() + ": not a trace file");
  }
  TraceFile file;
  while (std::getline(in, line)) {
    std::string_view trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      if (trimmed.find("diverged") != std::string_view::npos) file.diverged = true;
      continue;
    }
    std::vector<std::string> f = text::split(trimmed, ',');
    if (f.size() != 8) throw std::runtime_error(path.string() + ": bad trace row");
    TraceRecord rec;
    rec.iter = static_cast<int>(text::parse_long(f[0], path.string()));
    rec.objective = text::parse_double(f[1], path.string());
    rec.r_eq = text::parse_double(f[2], path.string());
    rec.r_smooth = text::parse_double(f[3], path.string());
    rec.r_pi = text::parse_double(f[4], path.string());
    rec.r_total = text::parse_double(f[5], path.string());
    rec.val_nmse = parse_optional(f[6], path.string());
    rec.elapsed_seconds = text::parse_double(f[7], path.string());
    file.records.push_back(rec);
  }
  return file;
}

void emit_summary_csv(const std::vector<SummaryRow>& rows,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kSummaryHeader << "\n";
  for (const SummaryRow& row : rows) {
    out << row.variant << ',' << text::format_double(row.rho) << ',' << row.repeat << ','
        << csv_optional(row.r_total_mean) << ',' << csv_optional(row.r_total_std) << ','
        << csv_optional(row.val_nmse_mean) << ',' << csv_optional(row.val_nmse_std)
        << ',' << csv_optional(row.final_objective) << ',' << (row.diverged ? 1 : 0)
        << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || std::string(text::trim(line)) != kSummaryHeader) {
    throw std::runtime_error(path.string() + ": not a summary file");
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    std::string_view trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::vector<std::string> f = text::split(trimmed, ',');
    if (f.size() != 9) throw std::runtime_error(path.string() + ": bad summary row");
    SummaryRow row;
    row.variant = f[0];
    row.rho = text::parse_double(f[1], path.string());
    row.repeat = static_cast<int>(text::parse_long(f[2], path.string()));
    row.r_total_mean = parse_optional(f[3], path.string());
    row.r_total_std = parse_optional(f[4], path.string());
    row.val_nmse_mean = parse_optional(f[5], path.string());
    row.val_nmse_std = parse_optional(f[6], path.string());
    row.final_objective = parse_optional(f[7], path.string());
    row.diverged = text::parse_long(f[8], path.string()) != 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SummaryRow> run_sweep(const ExperimentConfig& config) {
  config.validate();
  ProblemData full = load_source(config.dataset);
  WeightMatrix w = build_weights(full.num_tasks(), config.sigma);
  std::filesystem::create_directories(config.out_dir);

  // One split per repeat, reused by every variant and rho so comparisons see
  // identical data.
  std::vector<PreparedSplit> splits;
  splits.reserve(config.repeats);
  for (int r = 0; r < config.repeats; ++r) {
    splits.push_back(prepare_split(full, config, config.base_seed + r));
  }

  struct Job {
    Variant variant;
    double rho;
    int repeat;
  };
  std::vector<Job> jobs;
  for (Variant variant : config.variants) {
    for (double rho : config.rho_grid) {
      for (int r = 0; r < config.repeats; ++r) jobs.push_back({variant, rho, r});
    }
  }

  std::vector<SummaryRow> rows(jobs.size());
  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    const PreparedSplit& data = splits[job.repeat];
    Hyperparams hyper = hyper_for(config, job.rho);
    RunOptions options;
    options.measure_time = !config.serial;
    options.nmse_denominator = config.nmse_denominator;
    RunResult result =
        run(data.train, hyper, w, job.variant, &data.validation, options);
    emit_trace_csv(result.trace, result.diverged,
                   config.out_dir / trace_filename(to_string(job.variant), job.rho,
                                                   job.repeat));
    rows[i] = summarize_trace(result.trace, result.diverged, to_string(job.variant),
                              job.rho, job.repeat);
  };

  if (config.serial || jobs.size() == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    unsigned hw = std::thread::hardware_concurrency();
    unsigned workers = config.jobs > 0 ? static_cast<unsigned>(config.jobs)
                                       : std::max(1u, hw);
    workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto body = [&]() {
      while (!failed.load()) {
        std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        try {
          run_job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(body);
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  emit_summary_csv(rows, config.out_dir / "summary.csv");
  return rows;
}

GridSearchResult grid_search(const ExperimentConfig& config,
                             std::vector<GridCell>* table) {
  config.validate();
  ProblemData full = load_source(config.dataset);
  WeightMatrix w = build_weights(full.num_tasks(), config.sigma);
  std::filesystem::create_directories(config.out_dir);
  PreparedSplit data = prepare_split(full, config, config.base_seed);

  std::vector<double> values = config.lambda_grid.values();
  std::vector<GridCell> cells;
  std::optional<GridSearchResult> best;
  for (double l1 : values) {
    for (double l2 : values) {
      for (double l3 : values) {
        Hyperparams hyper = hyper_for(config, 1.0);  // rho pinned at 1
        hyper.lambda1 = l1;
        hyper.lambda2 = l2;
        hyper.lambda3 = l3;
        RunOptions options;
        options.measure_time = !config.serial;
        options.nmse_denominator = config.nmse_denominator;
        RunResult result =
            run(data.train, hyper, w, Variant::MultiBlock, &data.validation, options);
        GridCell cell{l1, l2, l3, std::nullopt};
        if (!result.diverged && !result.trace.empty() &&
            result.trace.back().val_nmse.has_value()) {
          cell.val_nmse = result.trace.back().val_nmse;
        }
        cells.push_back(cell);
        if (cell.val_nmse.has_value()) {
          bool better = !best.has_value() || *cell.val_nmse < best->val_nmse;
          bool tie_larger =
              best.has_value() && *cell.val_nmse == best->val_nmse &&
              std::make_tuple(l1, l2, l3) >
                  std::make_tuple(best->lambda1, best->lambda2, best->lambda3);
          if (better || tie_larger) {
            best = GridSearchResult{l1, l2, l3, *cell.val_nmse};
          }
        }
      }
    }
  }

  std::ofstream out(config.out_dir / "gridsearch.csv");
  if (!out) throw std::runtime_error("cannot write gridsearch.csv");
  out << "lambda1,lambda2,lambda3,val_nmse,diverged\n";
  for (const GridCell& cell : cells) {
    out << text::format_double(cell.lambda1) << ',' << text::format_double(cell.lambda2)
        << ',' << text::format_double(cell.lambda3) << ','
        << csv_optional(cell.val_nmse) << ',' << (cell.val_nmse.has_value() ? 0 : 1)
        << "\n";
  }

  if (table != nullptr) *table = std::move(cells);
  if (!best.has_value()) throw std::runtime_error("grid search: every run diverged");
  return *best;
}

std::vector<SummaryRow> recompute_summary(const std::filesystem::path& trace_dir) {
  std::vector<SummaryRow> stored = read_summary_csv(trace_dir / "summary.csv");
  std::vector<SummaryRow> fresh;
  fresh.reserve(stored.size());
  for (const SummaryRow& row : stored) {
    TraceFile file =
        read_trace_csv(trace_dir / trace_filename(row.variant, row.rho, row.repeat));
    fresh.push_back(
        summarize_trace(file.records, file.diverged, row.variant, row.rho, row.repeat));
  }
  return fresh;
}

}  // namespace tsmtl
