#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsmtl/data.hpp"
#include "tsmtl/experiment.hpp"
#include "tsmtl/svg_plot.hpp"

namespace {

void add_synthetic_flags(CLI::App* cmd, tsmtl::SyntheticSpec& spec) {
  cmd->add_option("-p,--features", spec.num_features, "Synthetic: feature count")
      ->capture_default_str();
  cmd->add_option("-T,--tasks", spec.num_tasks, "Synthetic: task count")
      ->capture_default_str();
  cmd->add_option("-n,--rows", spec.n_uniform, "Synthetic: rows per task")
      ->capture_default_str();
  cmd->add_option("--noise-std", spec.noise_std,
                  "Synthetic: target noise standard deviation")
      ->capture_default_str();
  cmd->add_option("--row-sparsity", spec.row_sparsity,
                  "Synthetic: fraction of zero coefficient rows")
      ->capture_default_str();
  cmd->add_option("--jump-sparsity", spec.jump_sparsity,
                  "Synthetic: fraction of jumping coefficient steps")
      ->capture_default_str();
  cmd->add_option("--seed", spec.seed, "Synthetic: generator seed")
      ->capture_default_str();
}

struct DatasetFlags {
  tsmtl::SyntheticSpec synthetic;
  std::string air_quality_path;
  std::string portable_path;
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags) {
  cmd->add_option("--air-quality", flags.air_quality_path,
                  "Air-quality CSV to load (one task per hour)");
  cmd->add_option("--data", flags.portable_path, "Portable dataset file to load");
  add_synthetic_flags(cmd, flags.synthetic);
}

tsmtl::DatasetSource resolve_source(const DatasetFlags& flags) {
  tsmtl::DatasetSource source;
  if (!flags.air_quality_path.empty() && !flags.portable_path.empty()) {
    throw CLI::ValidationError("--air-quality and --data are mutually exclusive");
  }
  if (!flags.air_quality_path.empty()) {
    source.kind = tsmtl::DatasetKind::AirQuality;
    source.path = flags.air_quality_path;
  } else if (!flags.portable_path.empty()) {
    source.kind = tsmtl::DatasetKind::Portable;
    source.path = flags.portable_path;
  } else {
    source.kind = tsmtl::DatasetKind::Synthetic;
    source.synthetic = flags.synthetic;
  }
  return source;
}

struct CommonFlags {
  int max_iters = 1000;
  int eval_every = 1;
  double lambda1 = 0.1, lambda2 = 0.1, lambda3 = 0.1;
  double sigma = 1.0;
  double rho1 = 0.0;  // 0 means auto
  std::string dual_coupling = "paper";
  std::string nmse_denominator = "std";
  std::uint64_t base_seed = 1;
  std::string out_dir = "out";
  double train_frac = 0.7;
  double val_frac = 0.2;
  bool serial = false;
  int jobs = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--max-iters", flags.max_iters, "Iterations per run")
      ->capture_default_str();
  cmd->add_option("--eval-every", flags.eval_every, "Trace recording stride")
      ->capture_default_str();
  cmd->add_option("--lambda1", flags.lambda1, "Entrywise l1 weight")
      ->capture_default_str();
  cmd->add_option("--lambda2", flags.lambda2, "Row group-lasso weight")
      ->capture_default_str();
  cmd->add_option("--lambda3", flags.lambda3, "Temporal-residual l1 weight")
      ->capture_default_str();
  cmd->add_option("--sigma", flags.sigma, "Kernel bandwidth")->capture_default_str();
  cmd->add_option("--rho1", flags.rho1, "Linearization weight (0 = auto)")
      ->capture_default_str();
  cmd->add_option("--dual-coupling", flags.dual_coupling,
                  "Multi-block dual term: paper or exact")
      ->check(CLI::IsMember({"paper", "exact"}))
      ->capture_default_str();
  cmd->add_option("--nmse-denominator", flags.nmse_denominator,
                  "Normalize nMSE by std or var")
      ->check(CLI::IsMember({"std", "var"}))
      ->capture_default_str();
  cmd->add_option("--base-seed", flags.base_seed, "Seed for repeat 0's split")
      ->capture_default_str();
  cmd->add_option("-o,--out", flags.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--train-frac", flags.train_frac, "Training fraction")
      ->capture_default_str();
  cmd->add_option("--val-frac", flags.val_frac, "Validation fraction")
      ->capture_default_str();
  cmd->add_flag("--serial", flags.serial,
                "Run sequentially with zeroed timing for bit-identical output");
  cmd->add_option("--jobs", flags.jobs, "Worker threads (0 = hardware)")
      ->capture_default_str();
}

// Config problems surface as parse errors (exit 1); anything thrown past
// this point is a runtime or data failure (exit 2).
template <typename Validated>
void validate_as_usage(const Validated& value) {
  try {
    value.validate();
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError(e.what());
  }
}

tsmtl::ExperimentConfig build_config(const DatasetFlags& dataset,
                                     const CommonFlags& common) {
  tsmtl::ExperimentConfig config;
  config.dataset = resolve_source(dataset);
  config.max_iters = common.max_iters;
  config.eval_every = common.eval_every;
  config.lambda1 = common.lambda1;
  config.lambda2 = common.lambda2;
  config.lambda3 = common.lambda3;
  config.sigma = common.sigma;
  if (common.rho1 > 0) config.rho1 = common.rho1;
  config.dual_coupling = tsmtl::dual_coupling_from_string(common.dual_coupling);
  config.nmse_denominator = common.nmse_denominator == "std"
                                ? tsmtl::NmseDenominator::Std
                                : tsmtl::NmseDenominator::Var;
  config.base_seed = common.base_seed;
  config.out_dir = common.out_dir;
  config.train_frac = common.train_frac;
  config.val_frac = common.val_frac;
  config.serial = common.serial;
  config.jobs = common.jobs;
  return config;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"TS-MTL solvers and experiment harness"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset file");
  gen->set_config("--config");
  tsmtl::SyntheticSpec gen_spec;
  std::string gen_out;
  add_synthetic_flags(gen, gen_spec);
  gen->add_option("-o,--out", gen_out, "Output dataset path")->required();
  gen->callback([&]() {
    validate_as_usage(gen_spec);
    tsmtl::SyntheticDataset dataset = tsmtl::generate_synthetic(gen_spec);
    tsmtl::save_dataset(dataset.data, gen_out, gen_spec.seed);
    std::cout << "wrote " << gen_out << " (" << dataset.data.num_tasks() << " tasks, "
              << dataset.data.num_features() << " features)\n";
  });

  auto* grid = app.add_subcommand("gridsearch", "Pick lambdas by validation nMSE");
  grid->set_config("--config");
  DatasetFlags grid_dataset;
  CommonFlags grid_common;
  tsmtl::LambdaGrid lambda_grid;
  add_dataset_flags(grid, grid_dataset);
  add_common_flags(grid, grid_common);
  grid->add_option("--lambda-min", lambda_grid.min_value, "Grid lower bound")
      ->capture_default_str();
  grid->add_option("--lambda-max", lambda_grid.max_value, "Grid upper bound")
      ->capture_default_str();
  grid->add_option("--lambda-points", lambda_grid.points, "Points per lambda")
      ->capture_default_str();
  grid->callback([&]() {
    tsmtl::ExperimentConfig config = build_config(grid_dataset, grid_common);
    config.lambda_grid = lambda_grid;
    validate_as_usage(config);
    tsmtl::GridSearchResult result = tsmtl::grid_search(config);
    std::cout << "lambda1=" << result.lambda1 << " lambda2=" << result.lambda2
              << " lambda3=" << result.lambda3 << " val_nmse=" << result.val_nmse
              << "\n";
  });

  auto* sweep = app.add_subcommand("sweep", "Run the rho sweep for both solvers");
  sweep->set_config("--config");
  DatasetFlags sweep_dataset;
  CommonFlags sweep_common;
  std::vector<double> rho_grid;
  std::vector<std::string> variant_names;
  int repeats = 10;
  add_dataset_flags(sweep, sweep_dataset);
  add_common_flags(sweep, sweep_common);
  sweep->add_option("--rho", rho_grid,
                    "Dual step sizes to sweep (default 0.001 0.01 0.1 1 10 20 30)");
  sweep->add_option("--variants", variant_names,
                    "Solver variants: two_block and/or multi_block")
      ->check(CLI::IsMember({"two_block", "multi_block"}));
  sweep->add_option("--repeats", repeats, "Independent repeats per setting")
      ->capture_default_str();
  sweep->callback([&]() {
    tsmtl::ExperimentConfig config = build_config(sweep_dataset, sweep_common);
    if (!rho_grid.empty()) config.rho_grid = rho_grid;
    if (!variant_names.empty()) {
      config.variants.clear();
      for (const std::string& name : variant_names) {
        config.variants.push_back(tsmtl::variant_from_string(name));
      }
    }
    config.repeats = repeats;
    validate_as_usage(config);
    std::vector<tsmtl::SummaryRow> rows = tsmtl::run_sweep(config);
    int diverged = 0;
    for (const tsmtl::SummaryRow& row : rows) diverged += row.diverged ? 1 : 0;
    std::cout << "wrote " << rows.size() << " runs to " << config.out_dir.string();
    if (diverged > 0) std::cout << " (" << diverged << " diverged)";
    std::cout << "\n";
  });

  auto* plot = app.add_subcommand("plot", "Render SVG charts from trace files");
  plot->set_config("--config");
  std::string plot_traces, plot_out;
  plot->add_option("--traces", plot_traces, "Directory with summary.csv and traces")
      ->required();
  plot->add_option("-o,--out", plot_out, "Directory for SVG output")->required();
  plot->callback([&]() {
    auto written = tsmtl::write_plots(plot_traces, plot_out);
    std::cout << "wrote " << written.size() << " charts to " << plot_out << "\n";
  });

  auto* report = app.add_subcommand(
      "report", "Recompute summary statistics from traces and cross-check");
  report->set_config("--config");
  std::string report_traces;
  report->add_option("--traces", report_traces, "Directory with summary.csv and traces")
      ->required();
  report->callback([&]() {
    std::vector<tsmtl::SummaryRow> stored =
        tsmtl::read_summary_csv(std::filesystem::path(report_traces) / "summary.csv");
    std::vector<tsmtl::SummaryRow> fresh = tsmtl::recompute_summary(report_traces);
    auto close = [](const std::optional<double>& a, const std::optional<double>& b) {
      if (a.has_value() != b.has_value()) return false;
      if (!a.has_value()) return true;
      return std::abs(*a - *b) <= 1e-12 * std::max(1.0, std::abs(*a));
    };
    int mismatches = 0;
    for (std::size_t i = 0; i < stored.size(); ++i) {
      const tsmtl::SummaryRow& s = stored[i];
      const tsmtl::SummaryRow& f = fresh[i];
      bool ok = close(s.r_total_mean, f.r_total_mean) &&
                close(s.r_total_std, f.r_total_std) &&
                close(s.val_nmse_mean, f.val_nmse_mean) &&
                close(s.val_nmse_std, f.val_nmse_std) &&
                close(s.final_objective, f.final_objective) &&
                s.diverged == f.diverged;
      if (!ok) {
        ++mismatches;
        std::cerr << "mismatch: " << s.variant << " rho=" << s.rho
                  << " repeat=" << s.repeat << "\n";
      }
      std::cout << s.variant << " rho=" << s.rho << " repeat=" << s.repeat
                << " r_total_mean="
                << (s.r_total_mean ? std::to_string(*s.r_total_mean) : "-")
                << " val_nmse_mean="
                << (s.val_nmse_mean ? std::to_string(*s.val_nmse_mean) : "-")
                << (s.diverged ? " DIVERGED" : "") << "\n";
    }
    if (mismatches > 0) {
      throw std::runtime_error(std::to_string(mismatches) +
                               " summary rows disagree with their traces");
    }
    std::cout << stored.size() << " rows consistent with traces\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage and config problems map to 1
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
