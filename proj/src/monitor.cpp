#include "cewma/monitor.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace cewma {

const char* to_string(Phase phase) { return phase == Phase::IC ? "IC" : "OC"; }

std::vector<int> CountSeries::sizes() const {
  std::vector<int> out;
  out.reserve(periods.size());
  for (const CountPeriod& p : periods) out.push_back(p.n);
  return out;
}

double CountSeries::ic_pooled_proportion() const {
  std::int64_t inspected = 0;
  std::int64_t nonconforming = 0;
  for (const CountPeriod& p : periods) {
    if (p.phase != Phase::IC) continue;
    inspected += p.n;
    nonconforming += p.d;
  }
  if (inspected == 0) {
    throw ValidationError("no IC-labeled periods to pool a rate from");
  }
  return static_cast<double>(nonconforming) / static_cast<double>(inspected);
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_no) + ": " + what);
}

std::int64_t parse_int(const std::string& s, std::size_t line_no,
                       const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    row_error(line_no, std::string("cannot parse ") + what + " from '" + s + "'");
  }
}

Phase parse_phase(const std::string& s, std::size_t line_no) {
  const std::string v = lower(s);
  if (v == "ic") return Phase::IC;
  if (v == "oc") return Phase::OC;
  row_error(line_no, "phase must be IC or OC, got '" + s + "'");
}

}  // namespace

CountSeries ingest_counts(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty input stream");
  const std::vector<std::string> header = split_csv(line);
  std::vector<std::string> names;
  names.reserve(header.size());
  for (const std::string& h : header) names.push_back(lower(h));

  const bool aggregated = names.size() >= 3 && names[0] == "time" &&
                          names[1] == "n" && names[2] == "nonconforming" &&
                          (names.size() == 3 ||
                           (names.size() == 4 && names[3] == "phase"));
  const bool raw = names.size() >= 2 && names[0] == "time" &&
                   names[1] == "value" &&
                   (names.size() == 2 ||
                    (names.size() == 3 && names[2] == "phase"));
  if (!aggregated && !raw) {
    throw ValidationError(
        "unrecognized header '" + line +
        "' (expected time,n,nonconforming[,phase] or time,value[,phase])");
  }
  const bool has_phase = names.size() == (aggregated ? 4u : 3u);

  CountSeries series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != names.size()) {
      row_error(line_no, "expected " + std::to_string(names.size()) +
                             " fields, got " + std::to_string(f.size()));
    }
    const std::int64_t time = parse_int(f[0], line_no, "time");
    if (aggregated) {
      CountPeriod p;
      p.time = time;
      p.n = static_cast<int>(parse_int(f[1], line_no, "n"));
      p.d = static_cast<int>(parse_int(f[2], line_no, "nonconforming"));
      p.phase = has_phase ? parse_phase(f[3], line_no) : Phase::OC;
      if (p.n < 1) row_error(line_no, "n must be at least 1");
      if (p.d < 0) row_error(line_no, "nonconforming count must be nonnegative");
      if (p.d > p.n) {
        row_error(line_no, "nonconforming count " + std::to_string(p.d) +
                               " exceeds subgroup size " + std::to_string(p.n));
      }
      if (!series.periods.empty()) {
        const std::int64_t prev = series.periods.back().time;
        if (time == prev) row_error(line_no, "duplicate period " + f[0]);
        if (time < prev) {
          row_error(line_no, "period indices must increase, got " + f[0] +
                                 " after " + std::to_string(prev));
        }
      }
      series.periods.push_back(p);
    } else {
      const std::int64_t value = parse_int(f[1], line_no, "value");
      if (value != 0 && value != 1) {
        row_error(line_no, "value must be 0 or 1, got " + f[1]);
      }
      const Phase phase = has_phase ? parse_phase(f[2], line_no) : Phase::OC;
      if (!series.periods.empty() && series.periods.back().time == time) {
        CountPeriod& p = series.periods.back();
        if (p.phase != phase) {
          row_error(line_no, "conflicting phase labels within period " + f[0]);
        }
        p.n += 1;
        p.d += static_cast<int>(value);
      } else {
        if (!series.periods.empty() && time < series.periods.back().time) {
          row_error(line_no, "period indices must increase, got " + f[0]);
        }
        CountPeriod p;
        p.time = time;
        p.n = 1;
        p.d = static_cast<int>(value);
        p.phase = phase;
        series.periods.push_back(p);
      }
    }
  }
  if (series.empty()) throw ValidationError("no data rows in input");
  return series;
}

CountSeries load_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file: " + path);
  try {
    return ingest_counts(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

CountSeries filter_phase(const CountSeries& series, Phase keep) {
  CountSeries out;
  for (const CountPeriod& p : series.periods) {
    if (p.phase != keep) continue;
    CountPeriod renumbered = p;
    renumbered.time = static_cast<std::int64_t>(out.periods.size()) + 1;
    out.periods.push_back(renumbered);
  }
  if (out.empty()) {
    throw ValidationError(std::string("no periods labeled ") + to_string(keep));
  }
  return out;
}

int ChartSeries::signal_count() const {
  int count = 0;
  for (const ChartPoint& p : points) count += p.signal ? 1 : 0;
  return count;
}

ChartSeries run_chart(const CountSeries& series, ChartVariant variant,
                      const ChartLimits& limits, const ChartConfig& cfg,
                      const MisclassMatrix& pi) {
  if (series.empty()) throw ValidationError("cannot chart an empty series");
  if (limits.variant != variant) {
    throw ValidationError(std::string("limits were calibrated for the ") +
                          to_string(limits.variant) + " chart, not " +
                          to_string(variant));
  }
  if (variant != ChartVariant::TrueChart) pi.validate();

  ChartConfig local = cfg;
  local.subgroup_sizes = series.sizes();
  local.validate();

  ChartSeries out;
  out.variant = variant;
  out.lambda = cfg.lambda;
  out.l_coefficient = limits.l_coefficient;
  out.center = chart_center(variant, local, pi);
  out.p0_star = variant == ChartVariant::TrueChart
                    ? cfg.p0
                    : mix_proportion(cfg.p0, pi);
  out.ucl_asymptote = ucl_asymptotic(variant, limits.l_coefficient, local, pi);
  out.points.reserve(series.periods.size());

  EwmaState state{0, out.center};
  for (std::size_t i = 0; i < series.periods.size(); ++i) {
    const CountPeriod& period = series.periods[i];
    const double raw =
        static_cast<double>(period.d) / static_cast<double>(period.n);
    const double p_hat = variant == ChartVariant::Corrected
                             ? correct_proportion(raw, pi).value
                             : raw;
    state = ewma_update(state, p_hat, local.lambda);
    ChartPoint point;
    point.time = period.time;
    point.ewma = state.value;
    point.ucl =
        ucl_at(state.t, variant, limits.l_coefficient, local, pi);
    point.signal = state.value >= point.ucl;
    if (point.signal && !out.first_signal) out.first_signal = period.time;
    out.points.push_back(point);
  }
  return out;
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_series_csv(std::ostream& out, const ChartSeries& series) {
  out << "time,ewma,ucl,signal\n";
  for (const ChartPoint& p : series.points) {
    out << p.time << ',' << fmt6(p.ewma) << ',' << fmt6(p.ucl) << ','
        << (p.signal ? 1 : 0) << '\n';
  }
}

std::string series_csv(const ChartSeries& series) {
  std::ostringstream out;
  write_series_csv(out, series);
  return out.str();
}

}  // namespace cewma
