#include "cewma/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cewma/chart.hpp"
#include "cewma/config.hpp"
#include "cewma/mc.hpp"
#include "cewma/misclass.hpp"
#include "cewma/monitor.hpp"
#include "cewma/svg.hpp"
#include "cewma/version.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#ifndef CEWMA_DATA_DIR
#define CEWMA_DATA_DIR "data"
#endif

namespace cewma {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitSignal = 5;

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt(double v, const char* spec) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string fmt6(double v) { return fmt(v, "%.6g"); }

// "-" sends text to stdout, anything else to a file.
void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write output file: " + path);
  out << text;
}

// Options shared by every subcommand. threads = 0 leaves the worker count
// to the runtime; seed and m override the config when set.
struct CommonOpts {
  int threads = 0;
  std::string manifest_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> m;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--threads", opts.threads,
                  "worker threads for the replicate loop (results do not "
                  "depend on this)");
  sub->add_option("--manifest", opts.manifest_path,
                  "write the run manifest JSON here instead of stderr");
  sub->add_option("--seed", opts.seed, "override the config seed");
  sub->add_option("--m", opts.m, "override the replicate count");
}

void apply_overrides(AppConfig& cfg, const CommonOpts& opts) {
  if (opts.seed) cfg.chart.seed = *opts.seed;
  if (opts.m) cfg.chart.replicates = *opts.m;
  cfg.chart.validate();
}

void emit_manifest(const std::string& command, const json& resolved,
                   const CommonOpts& opts, Clock::time_point started) {
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           Clock::now() - started)
                           .count();
  json manifest{{"command", command},
                {"tool_version", kToolVersion},
                {"threads", opts.threads},
                {"config", resolved},
                {"config_digest", fnv1a_hex(resolved.dump())},
                {"elapsed_ms", elapsed}};
  const std::string text = manifest.dump() + "\n";
  if (opts.manifest_path.empty()) {
    std::cerr << text;
  } else {
    write_text(opts.manifest_path, text);
  }
}

// ---- calibrate ----

struct CalibrateOpts {
  std::string config_path;
  std::string out_path = "-";
  CommonOpts common;
};

int cmd_calibrate(const CalibrateOpts& opts) {
  const auto started = Clock::now();
  AppConfig cfg = load_config(opts.config_path);
  apply_overrides(cfg, opts.common);

  json results = json::array();
  bool all_converged = true;
  for (ChartVariant variant : cfg.variants) {
    const CalibrationResult res = calibrate_l(variant, cfg.chart, cfg.pi);
    all_converged = all_converged && res.converged;
    const ChartLimits limits =
        make_limits(variant, res.l_star, cfg.chart, cfg.pi);
    const ArlEstimate check =
        estimate_arl(variant, res.l_star, cfg.chart, cfg.pi,
                     in_control_generator(variant, cfg.chart, cfg.pi));
    json entry = limits_to_json(limits, cfg.chart, cfg.pi);
    entry["arl0_hat"] = res.arl0_hat;
    entry["arl0_std_error"] = check.std_error;
    entry["censored"] = check.censored;
    entry["iterations"] = res.iterations;
    entry["converged"] = res.converged;
    results.push_back(entry);
  }
  write_text(opts.out_path, json{{"results", results}}.dump(2) + "\n");
  emit_manifest("calibrate", resolved_config_json(cfg), opts.common, started);
  return all_converged ? kExitOk : kExitNoConvergence;
}

// ---- arl ----

struct ArlOpts {
  std::string config_path;
  std::string out_path = "-";
  std::string limits_path;
  bool calibrate = false;
  std::vector<double> deltas;
  CommonOpts common;
};

void check_limits_compatible(const LoadedLimits& loaded, const AppConfig& cfg,
                             const std::string& origin) {
  const auto close = [](double a, double b) { return std::fabs(a - b) < 1e-9; };
  if (!close(loaded.lambda, cfg.chart.lambda) || loaded.n != cfg.chart.n ||
      !close(loaded.p0, cfg.chart.p0) ||
      !close(loaded.pi.pi11, cfg.pi.pi11) ||
      !close(loaded.pi.pi10, cfg.pi.pi10)) {
    throw ValidationError(origin +
                          ": limits were calibrated for a different design "
                          "(lambda, n, p0, or pi differs from the config)");
  }
}

// Limits files hold either one design object or {"results": [...]} as
// written by calibrate. Returns the entry matching the variant.
LoadedLimits find_limits(const std::string& path, ChartVariant variant,
                         const AppConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open limits file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  std::vector<json> candidates;
  if (j.is_object() && j.contains("results")) {
    for (const json& entry : j.at("results")) candidates.push_back(entry);
  } else {
    candidates.push_back(j);
  }
  for (const json& entry : candidates) {
    LoadedLimits loaded = limits_from_json(entry, path);
    if (loaded.limits.variant != variant) continue;
    check_limits_compatible(loaded, cfg, path);
    return loaded;
  }
  throw ValidationError(path + ": no limits entry for the " +
                        std::string(to_string(variant)) + " chart");
}

int cmd_arl(const ArlOpts& opts) {
  const auto started = Clock::now();
  AppConfig cfg = load_config(opts.config_path);
  apply_overrides(cfg, opts.common);
  if (!opts.calibrate && opts.limits_path.empty()) {
    throw ValidationError(
        "pass --limits <file> from a calibrate run, or --calibrate to "
        "calibrate in place");
  }

  std::ostringstream csv;
  csv << "variant,delta,p1,p1_star,p1_star_star,l,arl,std_error,censored,"
         "replicates\n";
  bool all_converged = true;
  for (ChartVariant variant : cfg.variants) {
    double l;
    if (opts.calibrate) {
      const CalibrationResult res = calibrate_l(variant, cfg.chart, cfg.pi);
      all_converged = all_converged && res.converged;
      l = res.l_star;
    } else {
      l = find_limits(opts.limits_path, variant, cfg).limits.l_coefficient;
    }
    for (double delta : opts.deltas) {
      const ShiftSpec shift = make_shift(delta, cfg.chart, cfg.pi);
      const ArlEstimate est = estimate_arl(variant, l, cfg.chart, cfg.pi,
                                           shifted_generator(variant, shift));
      csv << to_string(variant) << ',' << fmt6(delta) << ',' << fmt6(shift.p1)
          << ',' << fmt6(shift.p1_star) << ',' << fmt6(shift.p1_star_star)
          << ',' << fmt6(l) << ',' << fmt6(est.mean_rl) << ','
          << fmt6(est.std_error) << ',' << est.censored << ','
          << est.replicates << '\n';
    }
  }
  write_text(opts.out_path, csv.str());
  json resolved = resolved_config_json(cfg);
  resolved["deltas"] = opts.deltas;
  emit_manifest("arl", resolved, opts.common, started);
  return all_converged ? kExitOk : kExitNoConvergence;
}

// ---- simulate ----

struct SimulateOpts {
  int table = 0;
  std::string cells;
  std::string out_path = "-";
  std::string reference_dir = CEWMA_DATA_DIR "/reference";
  CommonOpts common;
};

struct CellFilter {
  std::optional<int> n;
  std::optional<double> p0;
  std::optional<double> delta;
};

CellFilter parse_cells(const std::string& text) {
  CellFilter filter;
  if (text.empty()) return filter;
  std::istringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const std::size_t eq = part.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("--cells entries look like key=value, got '" +
                            part + "'");
    }
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    try {
      if (key == "n") {
        filter.n = std::stoi(value);
      } else if (key == "p0") {
        filter.p0 = std::stod(value);
      } else if (key == "delta") {
        filter.delta = std::stod(value);
      } else {
        throw ValidationError("--cells keys are n, p0, delta; got '" + key +
                              "'");
      }
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("cannot parse --cells value '" + value + "'");
    }
  }
  return filter;
}

bool near(double a, double b) { return std::fabs(a - b) < 1e-9; }

struct TableSpec {
  double lambda = 0.0;
  double pi_diag = 0.0;
  bool arl = false;
};

TableSpec table_spec(int table) {
  if (table < 1 || table > 8) {
    throw ValidationError("table id must be 1..8, got " +
                          std::to_string(table));
  }
  TableSpec spec;
  spec.arl = table >= 5;
  const int base = spec.arl ? table - 4 : table;
  spec.lambda = base <= 2 ? 0.05 : 0.2;
  spec.pi_diag = base % 2 == 1 ? 0.95 : 0.99;
  return spec;
}

const std::vector<double>& p0_grid() {
  static const std::vector<double> grid = {0.05, 0.10, 0.15, 0.20, 0.25,
                                           0.30, 0.35, 0.40, 0.45, 0.50};
  return grid;
}

const std::vector<int>& n_grid() {
  static const std::vector<int> grid = {5, 10, 15, 20};
  return grid;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
      field.pop_back();
    }
    out.push_back(field);
  }
  return out;
}

// Reference rows for one table, keyed as described per file below.
using ReferenceMap = std::map<std::string, std::map<std::string, double>>;

std::optional<ReferenceMap> load_reference(const std::string& dir, int table) {
  const bool arl = table >= 5;
  const std::string path = dir + (arl ? "/arl1.csv" : "/limits.csv");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  const std::vector<std::string> header = split_line(line);
  ReferenceMap out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != header.size()) continue;
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = f[i];
    if (std::stoi(row.at("table")) != table) continue;
    std::string key;
    if (arl) {
      // delta|n|p1 identifies the cell.
      key = row.at("delta") + "|" + row.at("n") + "|" + row.at("p1");
    } else {
      key = row.at("n") + "|" + row.at("p0");
    }
    std::map<std::string, double> values;
    for (const auto& [name, text] : row) {
      if (name == "table" || name == "delta" || name == "n" || name == "p0" ||
          name == "p1") {
        continue;
      }
      try {
        values[name] = std::stod(text);
      } catch (const std::exception&) {
      }
    }
    out[key] = values;
  }
  return out;
}

std::string grid_key_p0(double p0) { return fmt(p0, "%.3f"); }

int cmd_simulate(const SimulateOpts& opts) {
  const auto started = Clock::now();
  const TableSpec spec = table_spec(opts.table);
  const CellFilter filter = parse_cells(opts.cells);

  MisclassMatrix pi = misclass_from_diagonal(spec.pi_diag, spec.pi_diag);
  ChartConfig base;
  base.lambda = spec.lambda;
  base.arl0_target = 370.0;
  if (opts.common.seed) base.seed = *opts.common.seed;
  if (opts.common.m) base.replicates = *opts.common.m;

  std::vector<double> p0s;
  for (double p0 : p0_grid()) {
    if (filter.p0 && !near(*filter.p0, p0)) continue;
    p0s.push_back(p0);
  }
  std::vector<int> ns;
  for (int n : n_grid()) {
    if (filter.n && *filter.n != n) continue;
    ns.push_back(n);
  }
  std::vector<double> deltas;
  if (spec.arl) {
    for (double d : {0.1, 0.2}) {
      if (filter.delta && !near(*filter.delta, d)) continue;
      deltas.push_back(d);
    }
  }
  if (p0s.empty() || ns.empty() || (spec.arl && deltas.empty())) {
    throw ValidationError("--cells filter selects nothing in table " +
                          std::to_string(opts.table));
  }

  std::ostringstream csv;
  csv << "table,lambda,pi,delta,n,quantity";
  for (double p0 : p0s) csv << ",p0_" << grid_key_p0(p0);
  csv << '\n';
  const std::string prefix = std::to_string(opts.table) + "," +
                             fmt(spec.lambda, "%g") + "," +
                             fmt(spec.pi_diag, "%g") + ",";
  const auto meta_row = [&](const std::string& delta,
                            const std::string& quantity, auto value_of) {
    csv << prefix << delta << ",," << quantity;
    for (double p0 : p0s) csv << ',' << fmt(value_of(p0), "%.3f");
    csv << '\n';
  };

  const auto reference = load_reference(opts.reference_dir, opts.table);
  std::ostringstream diff;
  double max_l_diff = 0.0, max_ucl_diff = 0.0, max_arl_diff = 0.0,
         max_arl_rel_se = 0.0;
  int compared = 0;

  const auto record_diff = [&](const std::string& cell_key,
                               const std::string& cell_desc,
                               const std::string& quantity, double ours,
                               double se) {
    if (!reference) return;
    const auto row = reference->find(cell_key);
    if (row == reference->end()) return;
    const auto ref = row->second.find(quantity);
    if (ref == row->second.end()) return;
    const double d = ours - ref->second;
    ++compared;
    diff << "diff table=" << opts.table << ' ' << cell_desc << ' ' << quantity
         << " ours=" << fmt6(ours) << " ref=" << fmt6(ref->second)
         << " diff=" << fmt6(d);
    if (quantity.rfind("arl1", 0) == 0) {
      max_arl_diff = std::max(max_arl_diff, std::fabs(d));
      if (se > 0.0) {
        diff << " diff_over_se=" << fmt6(d / se);
        max_arl_rel_se = std::max(max_arl_rel_se, std::fabs(d) / se);
      }
    } else if (quantity.rfind("l_", 0) == 0) {
      max_l_diff = std::max(max_l_diff, std::fabs(d));
    } else {
      max_ucl_diff = std::max(max_ucl_diff, std::fabs(d));
    }
    diff << '\n';
  };

  constexpr ChartVariant kVariants[] = {
      ChartVariant::TrueChart, ChartVariant::Naive, ChartVariant::Corrected};
  const char* kVariantKey[] = {"true", "naive", "corrected"};

  if (!spec.arl) {
    meta_row("", "p0", [](double p0) { return p0; });
    meta_row("", "p0_star",
             [&](double p0) { return mix_proportion(p0, pi); });
    meta_row("", "p0_star_star", [&](double p0) {
      return correct_proportion(mix_proportion(p0, pi), pi).value;
    });
    for (int n : ns) {
      // variant -> p0 -> (l, ucl); "NA" cells keep their error out of the CSV
      std::map<std::string, std::map<std::string, std::string>> l_out, u_out;
      for (ChartVariant v : kVariants) {
        for (double p0 : p0s) {
          ChartConfig cfg = base;
          cfg.n = n;
          cfg.p0 = p0;
          std::string l_text = "NA", u_text = "NA";
          try {
            const CalibrationResult res = calibrate_l(v, cfg, pi);
            l_text = fmt(res.l_star, "%.3f");
            u_text = fmt(ucl_asymptotic(v, res.l_star, cfg, pi), "%.3f");
            const std::string key =
                std::to_string(n) + "|" + grid_key_p0(p0);
            const std::string desc =
                "n=" + std::to_string(n) + " p0=" + grid_key_p0(p0);
            record_diff(key, desc,
                        std::string("l_") + kVariantKey[variant_index(v)],
                        res.l_star, 0.0);
            record_diff(key, desc,
                        std::string("ucl_") + kVariantKey[variant_index(v)],
                        ucl_asymptotic(v, res.l_star, cfg, pi), 0.0);
          } catch (const std::exception& e) {
            diff << "cell n=" << n << " p0=" << grid_key_p0(p0) << " "
                 << kVariantKey[variant_index(v)] << " failed: " << e.what()
                 << '\n';
          }
          l_out[kVariantKey[variant_index(v)]][grid_key_p0(p0)] = l_text;
          u_out[kVariantKey[variant_index(v)]][grid_key_p0(p0)] = u_text;
        }
      }
      for (const char* key : kVariantKey) {
        csv << prefix << ',' << n << ",l_" << key;
        for (double p0 : p0s) csv << ',' << l_out[key][grid_key_p0(p0)];
        csv << '\n';
        csv << prefix << ',' << n << ",ucl_" << key;
        for (double p0 : p0s) csv << ',' << u_out[key][grid_key_p0(p0)];
        csv << '\n';
      }
    }
  } else {
    for (double delta : deltas) {
      const std::string delta_text = fmt(delta, "%g");
      meta_row(delta_text, "p1",
               [&](double p0) { return (1.0 + delta) * p0; });
      meta_row(delta_text, "p1_star", [&](double p0) {
        return mix_proportion((1.0 + delta) * p0, pi);
      });
      meta_row(delta_text, "p1_star_star", [&](double p0) {
        return correct_proportion(mix_proportion((1.0 + delta) * p0, pi), pi)
            .value;
      });
    }
    for (int n : ns) {
      std::vector<ChartConfig> grid;
      for (double p0 : p0s) {
        ChartConfig cfg = base;
        cfg.n = n;
        cfg.p0 = p0;
        grid.push_back(cfg);
      }
      const std::vector<Arl1Cell> cells = arl1_table(grid, pi, deltas);
      for (double delta : deltas) {
        for (ChartVariant v : kVariants) {
          csv << prefix << fmt(delta, "%g") << ',' << n << ",arl1_"
              << kVariantKey[variant_index(v)];
          for (double p0 : p0s) {
            const Arl1Cell* cell = nullptr;
            for (const Arl1Cell& c : cells) {
              if (near(c.p0, p0) && c.n == n && near(c.delta, delta)) {
                cell = &c;
                break;
              }
            }
            if (cell == nullptr) {
              csv << ",NA";
              continue;
            }
            const VariantArl& slot =
                cell->by_variant[static_cast<std::size_t>(variant_index(v))];
            if (!slot.ok()) {
              csv << ",NA";
              diff << "cell delta=" << fmt(delta, "%g") << " n=" << n
                   << " p0=" << grid_key_p0(p0) << " "
                   << kVariantKey[variant_index(v)] << " failed: " << slot.error
                   << '\n';
              continue;
            }
            csv << ',' << fmt(slot.arl.mean_rl, "%.1f");
            const std::string key = fmt(delta, "%g") + std::string("|") +
                                    std::to_string(n) + "|" +
                                    fmt((1.0 + delta) * p0, "%.3f");
            record_diff(key,
                        "delta=" + fmt(delta, "%g") + " n=" +
                            std::to_string(n) + " p0=" + grid_key_p0(p0),
                        std::string("arl1_") + kVariantKey[variant_index(v)],
                        slot.arl.mean_rl, slot.arl.std_error);
          }
          csv << '\n';
        }
      }
    }
  }

  write_text(opts.out_path, csv.str());

  if (!reference) {
    std::cerr << "note: no reference tables under " << opts.reference_dir
              << "; skipping diff report\n";
  } else {
    std::cerr << diff.str();
    std::cerr << "diff summary: cells=" << compared;
    if (spec.arl) {
      std::cerr << " max|arl diff|=" << fmt6(max_arl_diff)
                << " max|diff|/se=" << fmt6(max_arl_rel_se);
    } else {
      std::cerr << " max|l diff|=" << fmt6(max_l_diff)
                << " max|ucl diff|=" << fmt6(max_ucl_diff);
    }
    std::cerr << '\n';
  }

  json resolved{{"table", opts.table},
                {"lambda", spec.lambda},
                {"pi_diag", spec.pi_diag},
                {"cells", opts.cells},
                {"m", base.replicates},
                {"seed", base.seed},
                {"arl0_target", base.arl0_target},
                {"l_bounds", json::array({base.l_lo, base.l_hi})}};
  emit_manifest("simulate", resolved, opts.common, started);
  return kExitOk;
}

// ---- monitor ----

struct MonitorOpts {
  std::string config_path;
  std::string data_path;
  std::string out_path = "-";
  std::string render_path;
  std::string variant_name;
  std::string phase_name;
  std::string limits_path;
  std::optional<double> l_coefficient;
  CommonOpts common;
};

int cmd_monitor(const MonitorOpts& opts) {
  const auto started = Clock::now();
  AppConfig cfg = load_config(opts.config_path);
  apply_overrides(cfg, opts.common);

  CountSeries series = load_counts(opts.data_path);
  if (cfg.use_ic_average) {
    const double pooled = series.ic_pooled_proportion();
    cfg.chart.p0 = correct_proportion(pooled, cfg.pi).value;
    cfg.p0_star_given = true;
    if (!(cfg.chart.p0 > 0.0 && cfg.chart.p0 < 1.0)) {
      throw ValidationError(
          "IC average " + std::to_string(pooled) +
          " corrects to a rate outside (0, 1); check pi or the data");
    }
    std::cerr << "warning: centering on the IC-sample average " << fmt6(pooled)
              << " instead of a known in-control rate\n";
  }
  if (!opts.phase_name.empty()) {
    const std::string lowered = opts.phase_name;
    Phase keep;
    if (lowered == "IC" || lowered == "ic") {
      keep = Phase::IC;
    } else if (lowered == "OC" || lowered == "oc") {
      keep = Phase::OC;
    } else {
      throw ValidationError("--phase must be IC or OC, got '" +
                            opts.phase_name + "'");
    }
    series = filter_phase(series, keep);
  }

  const ChartVariant variant = opts.variant_name.empty()
                                   ? cfg.variants.front()
                                   : variant_from_string(opts.variant_name);

  ChartLimits limits;
  bool converged = true;
  if (opts.l_coefficient) {
    limits = make_limits(variant, *opts.l_coefficient, cfg.chart, cfg.pi);
  } else if (!opts.limits_path.empty()) {
    limits = find_limits(opts.limits_path, variant, cfg).limits;
  } else {
    const CalibrationResult res = calibrate_l(variant, cfg.chart, cfg.pi);
    converged = res.converged;
    limits = make_limits(variant, res.l_star, cfg.chart, cfg.pi);
  }

  const ChartSeries chart =
      run_chart(series, variant, limits, cfg.chart, cfg.pi);
  write_text(opts.out_path, series_csv(chart));
  if (!opts.render_path.empty()) {
    write_text(opts.render_path, render_chart_svg(chart, {}));
  }

  json summary{{"variant", to_string(variant)},
               {"lambda", chart.lambda},
               {"l", chart.l_coefficient},
               {"n", cfg.chart.n},
               {"p0", cfg.chart.p0},
               {"p0_star", chart.p0_star},
               {"center", chart.center},
               {"ucl_asymptotic", chart.ucl_asymptote},
               {"periods", chart.points.size()},
               {"signals", chart.signal_count()},
               {"first_signal", chart.first_signal
                                    ? json(*chart.first_signal)
                                    : json(nullptr)},
               {"converged", converged}};
  // Keep the summary and series on separate streams.
  if (opts.out_path == "-") {
    std::cerr << summary.dump() << '\n';
  } else {
    std::cout << summary.dump() << '\n';
  }

  emit_manifest("monitor", resolved_config_json(cfg), opts.common, started);
  if (!converged) return kExitNoConvergence;
  return chart.signal_count() > 0 ? kExitSignal : kExitOk;
}

// ---- estimate-pi ----

struct EstimatePiOpts {
  std::string data_path;
  std::string out_path = "-";
};

int cmd_estimate_pi(const EstimatePiOpts& opts) {
  std::ifstream in(opts.data_path);
  if (!in) throw IoError("cannot open validation file: " + opts.data_path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(opts.data_path + ": empty file");
  }
  {
    const std::vector<std::string> header = split_line(line);
    if (header.size() != 3 || header[0] != "true" || header[1] != "observed" ||
        header[2] != "count") {
      throw ValidationError(opts.data_path +
                            ": expected header true,observed,count");
    }
  }
  ValidationCounts counts;
  bool seen[2][2] = {};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_line(line);
    const std::string where =
        opts.data_path + ": line " + std::to_string(line_no);
    if (f.size() != 3) throw ValidationError(where + ": expected 3 fields");
    int truth, observed;
    std::int64_t count;
    try {
      truth = std::stoi(f[0]);
      observed = std::stoi(f[1]);
      count = std::stoll(f[2]);
    } catch (const std::exception&) {
      throw ValidationError(where + ": cannot parse row");
    }
    if ((truth != 0 && truth != 1) || (observed != 0 && observed != 1)) {
      throw ValidationError(where + ": true and observed must be 0 or 1");
    }
    if (count < 0) throw ValidationError(where + ": count must be nonnegative");
    if (seen[truth][observed]) {
      throw ValidationError(where + ": duplicate cell");
    }
    seen[truth][observed] = true;
    if (truth == 1 && observed == 1) counts.n11 = count;
    if (truth == 0 && observed == 1) counts.n10 = count;
    if (truth == 1 && observed == 0) counts.n01 = count;
    if (truth == 0 && observed == 0) counts.n00 = count;
  }
  const MisclassMatrix pi = estimate_pi(counts);
  json out{{"pi", misclass_to_json(pi)},
           {"determinant", pi.determinant()},
           {"rr1", pi.pi01 > 0.0 ? json(pi.rr1()) : json(nullptr)},
           {"rr0", pi.pi10 > 0.0 ? json(pi.rr0()) : json(nullptr)},
           {"counts",
            {{"n11", counts.n11},
             {"n10", counts.n10},
             {"n01", counts.n01},
             {"n00", counts.n00}}}};
  write_text(opts.out_path, out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"measurement-error-corrected EWMA p-chart toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  CalibrateOpts cal;
  CLI::App* cal_cmd = app.add_subcommand(
      "calibrate", "find the limit coefficient hitting the target ARL0");
  cal_cmd->add_option("--config", cal.config_path, "JSON config")->required();
  cal_cmd->add_option("--out", cal.out_path, "output path ('-' for stdout)");
  add_common(cal_cmd, cal.common);

  ArlOpts arl;
  CLI::App* arl_cmd = app.add_subcommand(
      "arl", "estimate out-of-control ARLs for shifted rates");
  arl_cmd->add_option("--config", arl.config_path, "JSON config")->required();
  arl_cmd->add_option("--delta", arl.deltas, "relative shifts, e.g. 0.1,0.2")
      ->required()
      ->delimiter(',');
  arl_cmd->add_option("--limits", arl.limits_path,
                      "limits JSON from a calibrate run");
  arl_cmd->add_flag("--calibrate", arl.calibrate,
                    "calibrate in place instead of --limits");
  arl_cmd->add_option("--out", arl.out_path, "output path ('-' for stdout)");
  add_common(arl_cmd, arl.common);

  SimulateOpts sim;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "reproduce a bundled reference table and diff against it");
  sim_cmd->add_option("--table", sim.table, "table id 1..8")->required();
  sim_cmd->add_option("--cells", sim.cells,
                      "filter, e.g. n=5,p0=0.05 or delta=0.2");
  sim_cmd->add_option("--out", sim.out_path, "output path ('-' for stdout)");
  sim_cmd->add_option("--reference", sim.reference_dir,
                      "directory holding the bundled reference CSVs");
  add_common(sim_cmd, sim.common);

  MonitorOpts mon;
  CLI::App* mon_cmd = app.add_subcommand(
      "monitor", "chart a count series against calibrated limits");
  mon_cmd->add_option("--config", mon.config_path, "JSON config")->required();
  mon_cmd->add_option("--data", mon.data_path, "count series CSV")->required();
  mon_cmd->add_option("--out", mon.out_path, "series CSV path ('-' for stdout)");
  mon_cmd->add_option("--render", mon.render_path, "write an SVG chart here");
  mon_cmd->add_option("--variant", mon.variant_name,
                      "true, naive, or corrected (default: first in config)");
  mon_cmd->add_option("--phase", mon.phase_name, "chart only IC or OC periods");
  CLI::Option* l_opt =
      mon_cmd->add_option("--l", mon.l_coefficient,
                          "use this limit coefficient, skip calibration");
  mon_cmd->add_option("--limits", mon.limits_path,
                      "limits JSON from a calibrate run")
      ->excludes(l_opt);
  add_common(mon_cmd, mon.common);

  EstimatePiOpts est;
  CLI::App* est_cmd = app.add_subcommand(
      "estimate-pi", "estimate the misclassification matrix from a "
                     "true,observed,count validation table");
  est_cmd->add_option("--data", est.data_path, "validation CSV")->required();
  est_cmd->add_option("--out", est.out_path, "output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    apply_threads(cal.common.threads + arl.common.threads +
                  sim.common.threads + mon.common.threads);
    if (cal_cmd->parsed()) return cmd_calibrate(cal);
    if (arl_cmd->parsed()) return cmd_arl(arl);
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (mon_cmd->parsed()) return cmd_monitor(mon);
    if (est_cmd->parsed()) return cmd_estimate_pi(est);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvergence;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace cewma
