#include "tsmtl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "text_util.hpp"

namespace tsmtl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Feature columns in order, then the target column.
const std::vector<std::string> kSensorColumns = {
    "PT08.S1(CO)", "PT08.S2(NMHC)", "PT08.S3(NOx)", "PT08.S4(NO2)", "PT08.S5(O3)",
    "T", "RH"};
const std::string kTargetColumn = "CO(GT)";
const double kMissingSentinel = -200.0;

}  // namespace

void SyntheticSpec::validate() const {
  if (num_features < 1) throw std::invalid_argument("synthetic spec: p must be >= 1");
  if (num_tasks < 2) throw std::invalid_argument("synthetic spec: need >= 2 tasks");
  if (!n_per_task.empty() && static_cast<int>(n_per_task.size()) != num_tasks) {
    throw std::invalid_argument("synthetic spec: per-task counts differ from task count");
  }
  for (int n : resolved_counts()) {
    if (n < 1) throw std::invalid_argument("synthetic spec: every task needs >= 1 row");
  }
  if (noise_std < 0) throw std::invalid_argument("synthetic spec: noise_std must be >= 0");
  if (row_sparsity < 0 || row_sparsity > 1 || jump_sparsity < 0 || jump_sparsity > 1) {
    throw std::invalid_argument("synthetic spec: sparsity fractions must be in [0, 1]");
  }
}

std::vector<int> SyntheticSpec::resolved_counts() const {
  if (!n_per_task.empty()) return n_per_task;
  return std::vector<int>(static_cast<std::size_t>(num_tasks), n_uniform);
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int p = spec.num_features;
  const int num_tasks = spec.num_tasks;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

  // Inactive rows: the first round(row_sparsity * p) positions of a seeded
  // shuffle stay identically zero.
  const int num_zero_rows = static_cast<int>(std::lround(spec.row_sparsity * p));
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> active(p, true);
  for (int i = 0; i < num_zero_rows; ++i) active[order[i]] = false;

  // Active rows follow a + b sin(2 pi t / T + phase) over t = 1..T.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, num_tasks);
  std::vector<int> active_rows;
  for (int j = 0; j < p; ++j) {
    if (!active[j]) continue;
    active_rows.push_back(j);
    double offset = gauss(rng);
    double amplitude = gauss(rng);
    double shift = phase(rng);
    for (int t = 0; t < num_tasks; ++t) {
      theta(j, t) =
          offset + amplitude * std::sin(2.0 * kPi * (t + 1) / num_tasks + shift);
    }
  }

  // Sparse persistent jumps on (active row, step) pairs keep the temporal
  // difference term nonzero.
  std::vector<std::pair<int, int>> steps;
  for (int j : active_rows) {
    for (int t = 1; t < num_tasks; ++t) steps.emplace_back(j, t);
  }
  const int num_jumps = static_cast<int>(std::lround(spec.jump_sparsity *
                                                     static_cast<double>(steps.size())));
  std::shuffle(steps.begin(), steps.end(), rng);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<double> magnitude(1.0, 2.0);
  for (int i = 0; i < num_jumps; ++i) {
    auto [j, t0] = steps[i];
    double jump = (coin(rng) == 0 ? 1.0 : -1.0) * magnitude(rng);
    for (int t = t0; t < num_tasks; ++t) theta(j, t) += jump;
  }

  std::vector<int> counts = spec.resolved_counts();
  std::vector<TaskData> tasks;
  tasks.reserve(num_tasks);
  for (int t = 0; t < num_tasks; ++t) {
    TaskData task;
    task.x.resize(counts[t], p);
    for (int i = 0; i < counts[t]; ++i) {
      for (int j = 0; j < p; ++j) task.x(i, j) = gauss(rng);
    }
    task.y = task.x * theta.col(t);
    if (spec.noise_std > 0) {
      for (int i = 0; i < counts[t]; ++i) task.y(i) += spec.noise_std * gauss(rng);
    }
    tasks.push_back(std::move(task));
  }
  return SyntheticDataset{ProblemData(std::move(tasks)), std::move(theta)};
}

namespace {

// Leading hour of a Time field such as "18.00.00" or "18:00:00".
std::optional<int> parse_hour(std::string_view field) {
  std::string_view head = field;
  std::size_t cut = head.find_first_of(".:");
  if (cut != std::string_view::npos) head = head.substr(0, cut);
  auto hour = text::try_parse_long(head);
  if (!hour || *hour < 0 || *hour > 23) return std::nullopt;
  return static_cast<int>(*hour);
}

double parse_decimal_comma(std::string field, int line_no, const std::string& column) {
  std::replace(field.begin(), field.end(), ',', '.');
  auto v = text::try_parse_double(text::trim(field));
  if (!v) {
    throw ParseError("line " + std::to_string(line_no) + ", column " + column +
                     ": cannot parse '" + field + "'");
  }
  return *v;
}

}  // namespace

ProblemData load_air_quality(const std::filesystem::path& path,
                             const AirQualityOptions& options, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
  std::vector<std::string> header = text::split(std::string(text::trim(line)), ';');
  auto column_index = [&header](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (std::string(text::trim(header[i])) == name) return static_cast<int>(i);
    }
    return -1;
  };

  int time_col = column_index("Time");
  int date_col = column_index("Date");
  int target_col = column_index(kTargetColumn);
  std::vector<int> feature_cols;
  std::string missing;
  for (const std::string& name : kSensorColumns) {
    int idx = column_index(name);
    if (idx < 0) missing += missing.empty() ? name : ", " + name;
    feature_cols.push_back(idx);
  }
  if (date_col < 0) missing += missing.empty() ? "Date" : ", Date";
  if (time_col < 0) missing += missing.empty() ? "Time" : ", Time";
  if (target_col < 0) missing += missing.empty() ? kTargetColumn : ", " + kTargetColumn;
  if (!missing.empty()) {
    throw SchemaError(path.string() + ": missing columns: " + missing);
  }

  LoadReport local;
  const int p = static_cast<int>(kSensorColumns.size());
  std::vector<std::vector<Eigen::VectorXd>> rows_by_hour(24);
  std::vector<std::vector<double>> target_by_hour(24);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> fields = text::split(std::string(text::trim(line)), ';');
    bool all_empty = true;
    for (const std::string& f : fields) {
      if (!text::trim(f).empty()) { all_empty = false; break; }
    }
    if (all_empty) continue;  // trailing filler rows in the raw export
    ++local.rows_read;

    if (time_col >= static_cast<int>(fields.size())) {
      ++local.rows_malformed;
      continue;
    }
    std::optional<int> hour = parse_hour(text::trim(fields[time_col]));
    if (!hour) {
      ++local.rows_malformed;
      continue;
    }

    Eigen::VectorXd features(p);
    bool sentinel = false;
    auto fetch = [&](int col, const std::string& name) -> double {
      if (col >= static_cast<int>(fields.size())) {
        throw ParseError("line " + std::to_string(line_no) + ": missing column " + name);
      }
      return parse_decimal_comma(fields[col], line_no, name);
    };
    double target = fetch(target_col, kTargetColumn);
    if (target == kMissingSentinel) sentinel = true;
    for (int j = 0; j < p && !sentinel; ++j) {
      features(j) = fetch(feature_cols[j], kSensorColumns[j]);
      if (features(j) == kMissingSentinel) sentinel = true;
    }
    if (sentinel) {
      ++local.rows_missing;
      continue;
    }
    ++local.rows_kept;
    rows_by_hour[*hour].push_back(std::move(features));
    target_by_hour[*hour].push_back(target);
  }

  std::vector<TaskData> tasks;
  for (int hour = 0; hour < 24; ++hour) {
    if (rows_by_hour[hour].empty()) {
      if (options.strict_24_tasks) {
        throw EmptyTaskError(path.string() + ": no usable rows for hour " +
                             std::to_string(hour));
      }
      continue;
    }
    TaskData task;
    int n = static_cast<int>(rows_by_hour[hour].size());
    task.x.resize(n, p);
    task.y.resize(n);
    for (int i = 0; i < n; ++i) {
      task.x.row(i) = rows_by_hour[hour][i].transpose();
      task.y(i) = target_by_hour[hour][i];
    }
    local.task_hours.push_back(hour);
    tasks.push_back(std::move(task));
  }
  if (tasks.empty()) throw EmptyTaskError(path.string() + ": no usable rows");
  if (report != nullptr) *report = std::move(local);
  return ProblemData(std::move(tasks));
}

ScalerParams fit_scaler(const ProblemData& train) {
  const int p = train.num_features();
  double n = static_cast<double>(train.total_observations());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const TaskData& task : train.tasks()) mean += task.x.colwise().sum().transpose();
  mean /= n;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(p);
  for (const TaskData& task : train.tasks()) {
    sq += (task.x.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  Eigen::VectorXd std_dev = (sq / n).cwiseSqrt();
  for (int j = 0; j < p; ++j) {
    if (std_dev(j) <= 1e-12 * std::max(1.0, std::abs(mean(j)))) {
      throw std::invalid_argument("fit_scaler: feature " + std::to_string(j) +
                                  " is (nearly) constant");
    }
  }
  return ScalerParams{std::move(mean), std::move(std_dev)};
}

ProblemData apply_scaler(const ProblemData& data, const ScalerParams& params) {
  if (params.mean.size() != data.num_features() ||
      params.std_dev.size() != data.num_features()) {
    throw std::invalid_argument("apply_scaler: parameter length differs from features");
  }
  std::vector<TaskData> tasks;
  tasks.reserve(data.num_tasks());
  for (const TaskData& task : data.tasks()) {
    TaskData scaled;
    scaled.x = (task.x.rowwise() - params.mean.transpose()).array().rowwise() /
               params.std_dev.transpose().array();
    scaled.y = task.y;
    tasks.push_back(std::move(scaled));
  }
  return ProblemData(std::move(tasks));
}

SplitResult split(const ProblemData& data, double train_frac, double val_frac,
                  std::uint64_t seed) {
  if (!(train_frac > 0 && train_frac < 1) || !(val_frac > 0 && val_frac < 1)) {
    throw std::invalid_argument("split: fractions must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<TaskData> train_tasks, val_tasks, test_tasks;
  for (int t = 0; t < data.num_tasks(); ++t) {
    const TaskData& task = data.task(t);
    const int n = static_cast<int>(task.x.rows());
    const int n_test = static_cast<int>(std::floor((1.0 - train_frac) * n));
    const int n_val = static_cast<int>(std::floor(val_frac * n));
    const int n_train = n - n_test - n_val;
    if (n_test < 1 || n_val < 1 || n_train < 1) {
      throw std::invalid_argument("split: task " + std::to_string(t) + " with " +
                                  std::to_string(n) + " rows cannot fill every split");
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    auto take = [&task](std::vector<int> idx) {
      std::sort(idx.begin(), idx.end());
      TaskData out;
      out.x.resize(static_cast<int>(idx.size()), task.x.cols());
      out.y.resize(static_cast<int>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        out.x.row(static_cast<int>(i)) = task.x.row(idx[i]);
        out.y(static_cast<int>(i)) = task.y(idx[i]);
      }
      return out;
    };
    test_tasks.push_back(take({order.begin(), order.begin() + n_test}));
    val_tasks.push_back(take({order.begin() + n_test, order.begin() + n_test + n_val}));
    train_tasks.push_back(take({order.begin() + n_test + n_val, order.end()}));
  }
  return SplitResult{ProblemData(std::move(train_tasks)), ProblemData(std::move(val_tasks)),
                     ProblemData(std::move(test_tasks))};
}

void save_dataset(const ProblemData& data, const std::filesystem::path& path,
                  std::optional<std::uint64_t> seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "tsmtl-dataset 1\n";
  if (seed.has_value()) out << "# seed " << *seed << "\n";
  out << "tasks " << data.num_tasks() << " features " << data.num_features() << "\n";
  out << "rows";
  for (const TaskData& task : data.tasks()) out << ' ' << task.x.rows();
  out << "\n";
  for (const TaskData& task : data.tasks()) {
    for (Eigen::Index i = 0; i < task.x.rows(); ++i) {
      for (Eigen::Index j = 0; j < task.x.cols(); ++j) {
        out << text::format_double(task.x(i, j)) << ' ';
      }
      out << text::format_double(task.y(i)) << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ProblemData load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      std::string_view t = text::trim(line);
      if (!t.empty() && t.front() != '#') return std::string(t);
    }
    throw ParseError(path.string() + ": truncated dataset");
  };
  if (next_line() != "tsmtl-dataset 1") {
    throw ParseError(path.string() + ": not a dataset file");
  }
  std::istringstream dims(next_line());
  std::string tag1, tag2;
  int num_tasks = 0, p = 0;
  dims >> tag1 >> num_tasks >> tag2 >> p;
  if (tag1 != "tasks" || tag2 != "features" || num_tasks < 1 || p < 1) {
    throw ParseError(path.string() + ": bad dimension line");
  }
  std::istringstream counts_in(next_line());
  counts_in >> tag1;
  if (tag1 != "rows") throw ParseError(path.string() + ": bad row-count line");
  std::vector<int> counts(num_tasks);
  for (int& c : counts) {
    if (!(counts_in >> c) || c < 1) throw ParseError(path.string() + ": bad row count");
  }
  std::vector<TaskData> tasks;
  for (int t = 0; t < num_tasks; ++t) {
    TaskData task;
    task.x.resize(counts[t], p);
    task.y.resize(counts[t]);
    for (int i = 0; i < counts[t]; ++i) {
      std::vector<std::string> fields;
      for (std::string f; std::getline(in, line);) {
        std::string_view trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::istringstream row(std::string{trimmed});
        while (row >> f) fields.push_back(f);
        break;
      }
      if (static_cast<int>(fields.size()) != p + 1) {
        throw ParseError(path.string() + ": task " + std::to_string(t) + " row " +
                         std::to_string(i) + " has wrong field count");
      }
      for (int j = 0; j < p; ++j) {
        task.x(i, j) = text::parse_double(fields[j], path.string());
      }
      task.y(i) = text::parse_double(fields[p], path.string());
    }
    tasks.push_back(std::move(task));
  }
  return ProblemData(std::move(tasks));
}

}  // namespace tsmtl
