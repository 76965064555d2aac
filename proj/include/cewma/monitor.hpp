#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cewma/chart.hpp"
#include "cewma/misclass.hpp"

namespace cewma {

enum class Phase { IC, OC };

const char* to_string(Phase phase);

// One inspection period: n items checked, d recorded nonconforming.
struct CountPeriod {
  std::int64_t time = 0;
  int n = 0;
  int d = 0;
  Phase phase = Phase::OC;
};

struct CountSeries {
  std::vector<CountPeriod> periods;

  bool empty() const { return periods.empty(); }
  std::vector<int> sizes() const;

  // Pooled nonconforming rate over the IC-labeled periods. Throws when
  // none are labeled IC.
  double ic_pooled_proportion() const;
};

// Reads either aggregated counts (header time,n,nonconforming[,phase]) or
// per-item records (header time,value[,phase], value 0/1, grouped by time
// on load). Errors carry 1-based line numbers.
CountSeries ingest_counts(std::istream& in);

// ingest_counts on a file; missing or unreadable paths raise IoError.
CountSeries load_counts(const std::string& path);

// Keeps one phase and renumbers periods 1..k so the kept stream charts
// from its own first period.
CountSeries filter_phase(const CountSeries& series, Phase keep);

struct ChartPoint {
  std::int64_t time = 0;
  double ewma = 0.0;
  double ucl = 0.0;
  bool signal = false;
};

// A computed chart: header describing the design plus one point per period.
struct ChartSeries {
  ChartVariant variant = ChartVariant::Corrected;
  double lambda = 0.0;
  double l_coefficient = 0.0;
  double center = 0.0;       // EWMA starting value
  double p0_star = 0.0;      // observed in-control rate behind the limits
  double ucl_asymptote = 0.0;
  std::vector<ChartPoint> points;
  std::optional<std::int64_t> first_signal;

  int signal_count() const;
};

// Runs the EWMA recursion over the series against time-varying limits.
// Subgroup sizes come from the data period by period. All periods are
// charted even after a signal; the first signaling period is recorded
// separately. limits.variant must match the requested variant.
ChartSeries run_chart(const CountSeries& series, ChartVariant variant,
                      const ChartLimits& limits, const ChartConfig& cfg,
                      const MisclassMatrix& pi);

// time,ewma,ucl,signal with floats at 6 significant digits.
void write_series_csv(std::ostream& out, const ChartSeries& series);
std::string series_csv(const ChartSeries& series);

}  // namespace cewma
