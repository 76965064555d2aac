#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cewma/errors.hpp"
#include "cewma/misclass.hpp"

namespace cewma {

// Which statistic the chart tracks.
//   TrueChart: sample proportions of the actual status (no recording error).
//   Naive: sample proportions of the recorded status, centered at the
//          observed rate.
//   Corrected: recorded proportions pushed back through the
//              misclassification model, centered at the de-biased rate.
enum class ChartVariant { TrueChart, Naive, Corrected };

const char* to_string(ChartVariant v);
ChartVariant variant_from_string(const std::string& s);

// Chart design plus the Monte Carlo knobs used to calibrate it.
struct ChartConfig {
  double p0 = 0.05;            // in-control true nonconforming proportion
  double lambda = 0.05;        // EWMA smoothing weight, in (0, 1]
  int n = 5;                   // subgroup size
  std::vector<int> subgroup_sizes;  // optional per-period override of n
  double arl0_target = 370.0;
  double l_lo = 0.01;          // search bracket for the limit coefficient
  double l_hi = 10.0;
  std::int64_t max_run_length = 0;  // 0 derives the censoring cap
  std::int64_t replicates = 10001;
  std::uint64_t seed = kDefaultSeed;

  static constexpr std::uint64_t kDefaultSeed = 1000003;

  // Subgroup size at 1-based period t; falls back to n past the override.
  int size_at(std::int64_t t) const;

  std::int64_t resolved_max_run_length() const;

  void validate() const;
};

// EWMA recursion state. t = 0 holds the chart center.
struct EwmaState {
  std::int64_t t = 0;
  double value = 0.0;
};

// value' = lambda * p_hat + (1 - lambda) * value. Rejects lambda
// outside (0, 1].
EwmaState ewma_update(const EwmaState& prev, double p_hat, double lambda);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Mean and variance of the corrected EWMA statistic at period t under
// in-control sampling. The mean is p0 for every t; the variance shrinks
// the observed-rate binomial variance by the squared correction factor.
Moments corrected_ewma_moments(std::int64_t t, const ChartConfig& cfg,
                               const MisclassMatrix& pi);

// Centerline of each variant: p0, the mixed rate, or the corrected rate.
double chart_center(ChartVariant variant, const ChartConfig& cfg,
                    const MisclassMatrix& pi);

// Upper control limit at 1-based period t. Widens monotonically from the
// first period toward the asymptote as the EWMA variance saturates.
double ucl_at(std::int64_t t, ChartVariant variant, double l,
              const ChartConfig& cfg, const MisclassMatrix& pi);

// Large-t limit of ucl_at.
double ucl_asymptotic(ChartVariant variant, double l, const ChartConfig& cfg,
                      const MisclassMatrix& pi);

// A calibrated one-sided design. The lower limit stays at zero and never
// signals; only crossings of the upper limit do.
struct ChartLimits {
  ChartVariant variant = ChartVariant::Corrected;
  double l_coefficient = 0.0;
  double ucl_asymptotic = 0.0;
  double lcl = 0.0;
};

ChartLimits make_limits(ChartVariant variant, double l, const ChartConfig& cfg,
                        const MisclassMatrix& pi);

// Rescales proportion limits to count limits for subgroups of n items.
ChartLimits np_limits(const ChartLimits& limits, int n);

}  // namespace cewma
