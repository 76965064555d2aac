// Acceptance suite. Each numbered check prints exactly one line,
//
//   C<k> PASS|FAIL <detail> [<elapsed> s]
//
// and the exit status reports the verdict. Expected values come from the
// reference tables shipped under data/reference, with every tolerance
// fixed here next to the check that uses it.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cewma/chart.hpp"
#include "cewma/mc.hpp"
#include "cewma/misclass.hpp"
#include "json.hpp"

using namespace cewma;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string str(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// ---- reference table access ----

using Row = std::map<std::string, std::string>;

std::vector<Row> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file " + path);
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row row;
    std::istringstream ss(line);
    std::string field;
    std::size_t i = 0;
    while (std::getline(ss, field, ',') && i < header.size()) {
      row[header[i++]] = field;
    }
    while (i < header.size()) row[header[i++]] = "";
    rows.push_back(std::move(row));
  }
  return rows;
}

double num(const Row& row, const std::string& key) {
  return std::stod(row.at(key));
}

std::string data_dir() { return std::string(CEWMA_SOURCE_DIR) + "/data"; }

std::vector<Row> limits_table() {
  return read_csv(data_dir() + "/reference/limits.csv");
}

std::vector<Row> arl1_table_rows() {
  return read_csv(data_dir() + "/reference/arl1.csv");
}

MisclassMatrix pi_of(const Row& row) {
  const double diag = num(row, "pi");
  return misclass_from_diagonal(diag, diag);
}

ChartConfig config_of(const Row& row) {
  ChartConfig cfg;
  cfg.lambda = num(row, "lambda");
  cfg.n = static_cast<int>(num(row, "n"));
  cfg.p0 = num(row, "p0");
  return cfg;
}

constexpr ChartVariant kVariants[] = {
    ChartVariant::TrueChart, ChartVariant::Naive, ChartVariant::Corrected};
const char* kVariantKey[] = {"true", "naive", "corrected"};

// ---- shared shift-cell machinery (checks 5 and 6) ----

struct ShiftCell {
  int table;  // 5..8 selects lambda and pi
  double delta;
  int n;
  double p0;
};

// Eight cells spanning the four lambda/pi settings, both shifts, and ARLs
// from single digits to around 200.
const std::vector<ShiftCell>& shift_cells() {
  static const std::vector<ShiftCell> cells = {
      {5, 0.2, 20, 0.50}, {5, 0.1, 5, 0.05}, {5, 0.2, 10, 0.10},
      {6, 0.2, 20, 0.50}, {7, 0.1, 20, 0.50}, {7, 0.2, 20, 0.50},
      {8, 0.2, 15, 0.30}, {6, 0.1, 5, 0.05},
  };
  return cells;
}

void table_params(int table, double* lambda, double* pi_diag) {
  const int base = table > 4 ? table - 4 : table;
  *lambda = base <= 2 ? 0.05 : 0.2;
  *pi_diag = base % 2 == 1 ? 0.95 : 0.99;
}

struct ShiftResult {
  ShiftCell cell;
  std::array<double, 3> ref;  // reference ARL by variant
  std::array<ArlEstimate, 3> est;
  double elapsed = 0.0;
};

const Row* find_arl_row(const std::vector<Row>& rows, const ShiftCell& cell) {
  const double p1 = (1.0 + cell.delta) * cell.p0;
  for (const Row& row : rows) {
    if (static_cast<int>(num(row, "table")) != cell.table) continue;
    if (static_cast<int>(num(row, "n")) != cell.n) continue;
    if (!near(num(row, "delta"), cell.delta, 1e-9)) continue;
    if (!near(num(row, "p1"), p1, 5e-4)) continue;
    return &row;
  }
  return nullptr;
}

std::vector<ShiftResult> run_shift_cells() {
  const std::vector<Row> rows = arl1_table_rows();
  std::vector<ShiftResult> results;
  for (const ShiftCell& cell : shift_cells()) {
    const Row* row = find_arl_row(rows, cell);
    if (row == nullptr) {
      throw ValidationError(str("no reference row for table %d delta %.1f "
                                "n %d p0 %.2f",
                                cell.table, cell.delta, cell.n, cell.p0));
    }
    const auto t0 = Clock::now();
    double lambda = 0.0, pi_diag = 0.0;
    table_params(cell.table, &lambda, &pi_diag);
    const MisclassMatrix pi = misclass_from_diagonal(pi_diag, pi_diag);
    ChartConfig cfg;
    cfg.lambda = lambda;
    cfg.n = cell.n;
    cfg.p0 = cell.p0;

    ShiftResult res;
    res.cell = cell;
    res.ref = {num(*row, "arl1_true"), num(*row, "arl1_naive"),
               num(*row, "arl1_corrected")};
    const ShiftSpec shift = make_shift(cell.delta, cfg, pi);
    for (ChartVariant v : kVariants) {
      const CalibrationResult cal = calibrate_l(v, cfg, pi);
      res.est[variant_index(v)] =
          estimate_arl(v, cal.l_star, cfg, pi, shifted_generator(v, shift));
    }
    res.elapsed = seconds_since(t0);
    results.push_back(res);
  }
  return results;
}

// ---- subprocess helpers (checks 9 and 10) ----

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CEWMA_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string scratch_path(const char* name) {
  const std::filesystem::path dir("acceptance_scratch");
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

// ---- the checks ----

// 1. The mixing map reproduces the observed-rate and corrected-rate rows
// of the limit tables, and correcting the mixed rate returns p0.
Outcome check_mixing() {
  const double tol_table = 5e-4;  // rows are printed to three decimals
  const double tol_round_trip = 1e-12;
  double worst_mix = 0.0, worst_corr = 0.0, worst_rt = 0.0;
  int checked = 0;
  for (const Row& row : limits_table()) {
    const MisclassMatrix pi = pi_of(row);
    const double p0 = num(row, "p0");
    const double mixed = mix_proportion(p0, pi);
    const double corrected = correct_proportion(mixed, pi).value;
    worst_mix = std::max(worst_mix, std::fabs(mixed - num(row, "p0_star")));
    worst_corr = std::max(worst_corr,
                          std::fabs(corrected - num(row, "p0_star_star")));
    worst_rt = std::max(worst_rt, std::fabs(corrected - p0));
    ++checked;
  }
  const MisclassMatrix p95 = misclass_from_diagonal(0.95, 0.95);
  const MisclassMatrix p99 = misclass_from_diagonal(0.99, 0.99);
  const bool spot = near(mix_proportion(0.05, p95), 0.095, tol_table) &&
                    near(mix_proportion(0.05, p99), 0.059, tol_table);
  const bool pass = checked > 0 && spot && worst_mix <= tol_table &&
                    worst_corr <= tol_table && worst_rt <= tol_round_trip;
  return {pass, str("%d rows: max|mix-ref|=%.1e max|corr-ref|=%.1e "
                    "max roundtrip=%.1e",
                    checked, worst_mix, worst_corr, worst_rt)};
}

// 2. Centering a chart on an observed rate of 0.111.
Outcome check_centers() {
  const double tol = 5e-4;
  const double c95 =
      correct_proportion(0.111, misclass_from_diagonal(0.95, 0.95)).value;
  const double c99 =
      correct_proportion(0.111, misclass_from_diagonal(0.99, 0.99)).value;
  const bool pass = near(c95, 0.068, tol) && near(c99, 0.103, tol);
  return {pass, str("corrected centers %.6f (diag 0.95) and %.6f (diag 0.99)",
                    c95, c99)};
}

// 3. Closed-form asymptotic limits, using the reference coefficients.
Outcome check_closed_form() {
  const double tol = 1e-3;
  double worst = 0.0;
  int checked = 0;
  for (const Row& row : limits_table()) {
    const MisclassMatrix pi = pi_of(row);
    const ChartConfig cfg = config_of(row);
    for (ChartVariant v : kVariants) {
      const std::string key = kVariantKey[variant_index(v)];
      const double ucl =
          ucl_asymptotic(v, num(row, "l_" + key), cfg, pi);
      worst = std::max(worst, std::fabs(ucl - num(row, "ucl_" + key)));
      ++checked;
    }
  }
  // Spot values for the smallest cell.
  ChartConfig cfg;
  cfg.lambda = 0.05;
  cfg.n = 5;
  cfg.p0 = 0.05;
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.95);
  const bool spot =
      near(ucl_asymptotic(ChartVariant::Corrected, 1.645, cfg, pi), 0.088,
           tol) &&
      near(ucl_asymptotic(ChartVariant::Naive, 2.363, cfg, pi), 0.145, tol);
  const bool pass = checked > 0 && spot && worst <= tol;
  return {pass, str("%d limits: max|ucl-ref|=%.2e (allow %.0e)", checked,
                    worst, tol)};
}

// 4. Monte Carlo calibration lands on the reference coefficients for six
// cells spanning the four lambda/pi settings.
Outcome check_calibration() {
  const double tol_l = 0.05;
  const double cell_budget = 60.0;
  struct Cell {
    int table;
    int n;
    double p0;
  };
  const std::vector<Cell> cells = {{1, 5, 0.05},  {1, 20, 0.50},
                                   {2, 10, 0.10}, {3, 20, 0.50},
                                   {4, 20, 0.50}, {4, 5, 0.25}};
  const std::vector<Row> rows = limits_table();
  double worst = 0.0, slowest = 0.0;
  int checked = 0;
  bool spot_seen = false;
  for (const Cell& cell : cells) {
    const Row* row = nullptr;
    for (const Row& r : rows) {
      if (static_cast<int>(num(r, "table")) == cell.table &&
          static_cast<int>(num(r, "n")) == cell.n &&
          near(num(r, "p0"), cell.p0, 1e-9)) {
        row = &r;
        break;
      }
    }
    if (row == nullptr) {
      return {false, str("no reference row for table %d n %d p0 %.2f",
                         cell.table, cell.n, cell.p0)};
    }
    const auto t0 = Clock::now();
    const MisclassMatrix pi = pi_of(*row);
    const ChartConfig cfg = config_of(*row);
    for (ChartVariant v : kVariants) {
      const CalibrationResult res = calibrate_l(v, cfg, pi);
      if (!res.converged) {
        return {false, str("calibration failed to converge for table %d n %d "
                           "p0 %.2f %s",
                           cell.table, cell.n, cell.p0,
                           kVariantKey[variant_index(v)])};
      }
      const double ref = num(*row, std::string("l_") +
                                       kVariantKey[variant_index(v)]);
      worst = std::max(worst, std::fabs(res.l_star - ref));
      ++checked;
    }
    slowest = std::max(slowest, seconds_since(t0));
    // The two named spot cells must be present with their known values.
    if (cell.table == 1 && cell.n == 5 &&
        near(num(*row, "l_corrected"), 1.645, 1e-9)) {
      spot_seen = true;
    }
    if (cell.table == 4 && cell.n == 20 &&
        !near(num(*row, "l_corrected"), 2.540, 1e-9)) {
      return {false, "reference row for table 4 n 20 p0 0.50 drifted"};
    }
  }
  const bool pass =
      spot_seen && checked == 18 && worst <= tol_l && slowest < cell_budget;
  return {pass, str("%d coefficients: max|L-ref|=%.4f (allow %.2f), "
                    "slowest cell %.1f s (allow %.0f)",
                    checked, worst, tol_l, slowest, cell_budget)};
}

// 5. Out-of-control ARLs for eight shifted cells.
Outcome check_shift_arl() {
  const double cell_budget = 90.0;
  double worst_margin = 0.0, slowest = 0.0;
  int checked = 0;
  for (const ShiftResult& res : run_shift_cells()) {
    for (ChartVariant v : kVariants) {
      const int i = variant_index(v);
      const double band =
          std::max(4.0 * res.est[i].std_error, 0.03 * res.ref[i]);
      const double margin = std::fabs(res.est[i].mean_rl - res.ref[i]) / band;
      worst_margin = std::max(worst_margin, margin);
      ++checked;
    }
    slowest = std::max(slowest, res.elapsed);
  }
  const bool pass = checked == 24 && worst_margin <= 1.0 &&
                    slowest < cell_budget;
  return {pass, str("%d ARLs: worst |diff|/band=%.2f (allow 1.00), "
                    "slowest cell %.1f s (allow %.0f)",
                    checked, worst_margin, slowest, cell_budget)};
}

// 6. Ordering properties across the same cells: ignoring the errors
// inflates the out-of-control ARL, while correcting restores the truth.
Outcome check_orderings() {
  const int it = variant_index(ChartVariant::TrueChart);
  const int in = variant_index(ChartVariant::Naive);
  const int ic = variant_index(ChartVariant::Corrected);
  int cells = 0;
  double worst_z = 0.0;
  bool naive_inflates = true;
  for (const ShiftResult& res : run_shift_cells()) {
    ++cells;
    naive_inflates =
        naive_inflates && res.est[in].mean_rl > res.est[ic].mean_rl;
    const double se = std::hypot(res.est[ic].std_error,
                                 res.est[it].std_error);
    worst_z = std::max(
        worst_z, std::fabs(res.est[ic].mean_rl - res.est[it].mean_rl) /
                     (4.0 * se));
  }
  const bool pass = cells == 8 && naive_inflates && worst_z <= 1.0;
  return {pass, str("%d cells: naive > corrected in all=%s, "
                    "worst |corr-true|/4se=%.2f (allow 1.00)",
                    cells, naive_inflates ? "yes" : "no", worst_z)};
}

// 7. With lambda 1 and single-item subgroups the run length is geometric,
// so the estimate must sit within 3 SE of 1/P(signal).
Outcome check_geometric() {
  ChartConfig cfg;
  cfg.p0 = 0.05;
  cfg.lambda = 1.0;
  cfg.n = 1;
  cfg.replicates = 100000;
  const MisclassMatrix pi = misclass_from_diagonal(0.9, 0.9);
  const double ucl = ucl_asymptotic(ChartVariant::Corrected, 2.0, cfg, pi);
  if (!(ucl > 0.0 && ucl < 1.0)) {
    return {false, str("flat limit %.4f does not split {0,1}", ucl)};
  }
  double worst_z = 0.0;
  for (bool shifted : {false, true}) {
    double p_gen;
    if (shifted) {
      p_gen = shifted_generator(ChartVariant::Corrected,
                                make_shift(0.3, cfg, pi));
    } else {
      p_gen = in_control_generator(ChartVariant::Corrected, cfg, pi);
    }
    const ArlEstimate est =
        estimate_arl(ChartVariant::Corrected, 2.0, cfg, pi, p_gen);
    const double z = std::fabs(est.mean_rl - 1.0 / p_gen) / est.std_error;
    worst_z = std::max(worst_z, z);
  }
  return {worst_z <= 3.0,
          str("flat limit %.4f, worst |z|=%.2f (allow 3.00)", ucl, worst_z)};
}

// 8. Sampled EWMA moments against the closed-form mean and variance.
Outcome check_moments() {
  ChartConfig cfg;
  cfg.p0 = 0.05;
  cfg.lambda = 0.05;
  cfg.n = 5;
  cfg.replicates = 10000;
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.95);
  const double p_star = mix_proportion(cfg.p0, pi);
  const auto sampled = sample_ewma_moments(ChartVariant::Corrected, cfg, pi,
                                           p_star, {1, 10, 100});
  if (sampled.size() != 3) return {false, "expected three sampled periods"};
  double worst_z = 0.0;
  for (const SampledMoments& s : sampled) {
    const Moments closed = corrected_ewma_moments(s.t, cfg, pi);
    worst_z = std::max(worst_z, std::fabs(s.mean - closed.mean) / s.se_mean);
    worst_z = std::max(worst_z,
                       std::fabs(s.variance - closed.variance) / s.se_variance);
  }
  return {worst_z <= 4.0,
          str("periods 1/10/100: worst |z|=%.2f (allow 4.00)", worst_z)};
}

// 9. The simulation command is byte-identical across worker counts.
Outcome check_thread_bytes() {
  const std::string a = scratch_path("sim_threads_1.csv");
  const std::string b = scratch_path("sim_threads_2.csv");
  const std::string base =
      "simulate --table 1 --cells n=5,p0=0.05 --m 501 2> /dev/null --out ";
  if (run_cli(base + a + " --threads 1") != 0) {
    return {false, "single-thread run failed"};
  }
  if (run_cli(base + b + " --threads 2") != 0) {
    return {false, "two-thread run failed"};
  }
  const std::string text_a = slurp(a);
  const std::string text_b = slurp(b);
  const bool pass = !text_a.empty() && text_a == text_b;
  return {pass, str("%zu bytes, identical=%s", text_a.size(),
                    text_a == text_b ? "yes" : "no")};
}

// 10. The juice data through the monitor command lands on the reference
// asymptotic limits for all four lambda/pi settings, and the rendered
// chart is well-formed.
Outcome check_monitor() {
  const double tol_ucl = 0.005;
  const std::string data = data_dir() + "/orange_juice.csv";
  double worst = 0.0;
  int checked = 0;
  for (const Row& row : read_csv(data_dir() + "/reference/real_data.csv")) {
    const std::string variant = row.at("variant");
    const std::string lambda = row.at("lambda");
    const std::string pi = row.at("pi").empty() ? "0.95" : row.at("pi");
    const std::string config = data_dir() + "/configs/oj_lambda" +
                               (lambda == "0.05" ? "005" : "02") + "_pi" +
                               (pi == "0.95" ? "95" : "99") + ".json";
    const std::string summary = scratch_path("monitor_summary.json");
    const bool render = variant == "corrected" && lambda == "0.2" &&
                        pi == "0.95";
    std::string cmd = "monitor --config " + config + " --data " + data +
                      " --variant " + variant + " --out /dev/null";
    if (render) cmd += " --render " + scratch_path("monitor_chart.svg");
    cmd += " > " + summary + " 2> /dev/null";
    const int code = run_cli(cmd);
    if (code != 0 && code != 5) {
      return {false, str("monitor exited %d for lambda %s pi %s %s", code,
                         lambda.c_str(), pi.c_str(), variant.c_str())};
    }
    const auto doc = nlohmann::json::parse(slurp(summary));
    worst = std::max(worst, std::fabs(doc.at("ucl_asymptotic").get<double>() -
                                      num(row, "ucl")));
    ++checked;
  }
  const std::string svg = slurp(scratch_path("monitor_chart.svg"));
  const bool svg_ok = svg.find("<svg") != std::string::npos &&
                      svg.find("</svg>") != std::string::npos &&
                      svg.find("polyline") != std::string::npos &&
                      svg.find("nan") == std::string::npos;
  const bool pass = checked == 6 && worst <= tol_ucl && svg_ok;
  return {pass, str("%d limits: max|ucl-ref|=%.4f (allow %.3f), chart "
                    "well-formed=%s",
                    checked, worst, tol_ucl, svg_ok ? "yes" : "no")};
}

// Whole-run wall budgets in seconds; zero means the check manages its own
// per-cell budget or has none.
constexpr double kBudget[11] = {0, 1, 1, 5, 0, 0, 0, 10, 30, 0, 120};

Outcome dispatch(int k) {
  switch (k) {
    case 1: return check_mixing();
    case 2: return check_centers();
    case 3: return check_closed_form();
    case 4: return check_calibration();
    case 5: return check_shift_arl();
    case 6: return check_orderings();
    case 7: return check_geometric();
    case 8: return check_moments();
    case 9: return check_thread_bytes();
    case 10: return check_monitor();
    default: return {false, "unknown criterion"};
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: cewma_acceptance <1..10>\n");
    return 2;
  }
  const int k = std::atoi(argv[1]);
  if (k < 1 || k > 10) {
    std::fprintf(stderr, "criterion must be 1..10\n");
    return 2;
  }
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = dispatch(k);
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double sec = seconds_since(t0);
  bool pass = out.pass;
  std::string timing = str("%.2f s", sec);
  if (kBudget[k] > 0) {
    pass = pass && sec < kBudget[k];
    timing += str(", budget %.0f s", kBudget[k]);
  }
  std::printf("C%d %s %s [%s]\n", k, pass ? "PASS" : "FAIL",
              out.detail.c_str(), timing.c_str());
  return pass ? 0 : 1;
}
