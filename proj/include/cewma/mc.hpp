#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cewma/chart.hpp"
#include "cewma/misclass.hpp"

namespace cewma {

struct RunLength {
  std::int64_t length = 0;
  bool censored = false;
};

// Mean run length over a batch of simulated charts.
struct ArlEstimate {
  double mean_rl = 0.0;
  std::int64_t replicates = 0;
  double std_error = 0.0;
  std::int64_t censored = 0;  // runs truncated at the censoring cap
};

struct CalibrationResult {
  double l_star = 0.0;
  double arl0_hat = 0.0;
  int iterations = 0;  // Monte Carlo evaluations spent
  bool converged = false;
};

// An upward shift of the true rate to p1 = (1 + delta) * p0, with the
// observed and corrected rates it induces.
struct ShiftSpec {
  double delta = 0.0;
  double p1 = 0.0;
  double p1_star = 0.0;
  double p1_star_star = 0.0;
};

ShiftSpec make_shift(double delta, const ChartConfig& cfg,
                     const MisclassMatrix& pi);

// Rate to draw per-item observations from, expressed on the variant's own
// scale: the true chart samples the actual status, the naive chart samples
// the recorded (mixed) status, and the corrected chart samples at the
// corrected rate its limits are built for.
double generator_proportion(ChartVariant variant, double p_true,
                            const MisclassMatrix& pi);
double in_control_generator(ChartVariant variant, const ChartConfig& cfg,
                            const MisclassMatrix& pi);
double shifted_generator(ChartVariant variant, const ShiftSpec& shift);

// Periods until the EWMA of subgroup means first reaches the variant's
// upper limit, simulating n draws per period from p_gen (a rate on the
// variant's scale; see generator_proportion). The chart starts at the
// variant's in-control center even when p_gen carries a shift, and the
// limit for period t takes the width factor at the period midpoint,
// 1 - (1 - lambda)^(2t + 1). Deterministic in (cfg.seed, replicate_index)
// alone; capped at resolved_max_run_length().
RunLength simulate_run_length(ChartVariant variant, double l,
                              const ChartConfig& cfg, const MisclassMatrix& pi,
                              double p_gen, std::int64_t replicate_index);

// Mean run length over cfg.replicates independent charts, replicate
// indices 1..M. Parallelized over replicates; run lengths accumulate in
// exact integer sums, so the result is identical for any worker count.
ArlEstimate estimate_arl(ChartVariant variant, double l,
                         const ChartConfig& cfg, const MisclassMatrix& pi,
                         double p_gen);

// Single-threaded twin of estimate_arl. Kept as the plain-loop reference
// the parallel kernel is checked against.
ArlEstimate estimate_arl_reference(ChartVariant variant, double l,
                                   const ChartConfig& cfg,
                                   const MisclassMatrix& pi, double p_gen);

// Finds the limit coefficient whose in-control ARL hits cfg.arl0_target
// within +-1. Every candidate L replays the same replicate streams, which
// makes the estimated ARL a nondecreasing step function of L, so bisection
// over [l_lo, l_hi] converges without stochastic re-evaluation. Candidates
// whose partial sums already prove the target overshot are abandoned early.
// Throws ConvergenceError when the bracket cannot straddle the target.
CalibrationResult calibrate_l(ChartVariant variant, const ChartConfig& cfg,
                              const MisclassMatrix& pi);

// Empirical EWMA moments at chosen periods, over cfg.replicates paths that
// run without stopping. Samples the monitoring statistic itself, so the
// corrected variant corrects each observation drawn from the surrogate
// rate p_gen. Used to check the statistic's distribution against the
// closed-form mean and variance.
struct SampledMoments {
  std::int64_t t = 0;
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
};

std::vector<SampledMoments> sample_ewma_moments(
    ChartVariant variant, const ChartConfig& cfg, const MisclassMatrix& pi,
    double p_gen, const std::vector<std::int64_t>& periods);

// One (n, p0, delta) cell of a shift-performance sweep: the calibrated
// coefficient and out-of-control ARL for each chart variant, with failures
// recorded per variant instead of aborting the sweep.
struct VariantArl {
  double l = 0.0;
  bool converged = false;
  ArlEstimate arl;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct Arl1Cell {
  double p0 = 0.0;
  int n = 0;
  double delta = 0.0;
  ShiftSpec shift;
  std::array<VariantArl, 3> by_variant;  // indexed by variant_index
};

constexpr int variant_index(ChartVariant v) { return static_cast<int>(v); }

std::vector<Arl1Cell> arl1_table(const std::vector<ChartConfig>& grid,
                                 const MisclassMatrix& pi,
                                 const std::vector<double>& deltas);

}  // namespace cewma
