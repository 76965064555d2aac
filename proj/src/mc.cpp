#include "cewma/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cewma/rng.hpp"

namespace cewma {

ShiftSpec make_shift(double delta, const ChartConfig& cfg,
                     const MisclassMatrix& pi) {
  if (!(delta >= 0.0)) throw ValidationError("shift delta must be nonnegative");
  ShiftSpec shift;
  shift.delta = delta;
  shift.p1 = (1.0 + delta) * cfg.p0;
  if (shift.p1 > 1.0) {
    throw ValidationError("shifted proportion (1 + delta) * p0 = " +
                          std::to_string(shift.p1) + " exceeds 1");
  }
  shift.p1_star = mix_proportion(shift.p1, pi);
  shift.p1_star_star = correct_proportion(shift.p1_star, pi).value;
  return shift;
}

double generator_proportion(ChartVariant variant, double p_true,
                            const MisclassMatrix& pi) {
  switch (variant) {
    case ChartVariant::TrueChart:
      return p_true;
    case ChartVariant::Naive:
      return mix_proportion(p_true, pi);
    case ChartVariant::Corrected:
      return correct_proportion(mix_proportion(p_true, pi), pi).value;
  }
  throw ValidationError("unknown chart variant");
}

double in_control_generator(ChartVariant variant, const ChartConfig& cfg,
                            const MisclassMatrix& pi) {
  return generator_proportion(variant, cfg.p0, pi);
}

double shifted_generator(ChartVariant variant, const ShiftSpec& shift) {
  switch (variant) {
    case ChartVariant::TrueChart:
      return shift.p1;
    case ChartVariant::Naive:
      return shift.p1_star;
    case ChartVariant::Corrected:
      return shift.p1_star_star;
  }
  throw ValidationError("unknown chart variant");
}

namespace {

// Everything a replicate needs, precomputed once per (variant, L) so the
// inner loop is draws, one table lookup, and one compare per period.
struct SimPlan {
  double lambda = 0.0;
  double center = 0.0;
  double p_gen = 0.0;
  int n = 0;
  std::int64_t max_run_length = 0;
  std::uint64_t seed = 0;
  std::vector<double> stat_by_count;  // charted statistic for each count
  std::vector<double> ucl;            // ucl[t - 1] for t = 1..max_run_length
};

SimPlan make_plan(ChartVariant variant, double l, const ChartConfig& cfg,
                  const MisclassMatrix& pi, double p_gen) {
  cfg.validate();
  if (!(p_gen >= 0.0 && p_gen <= 1.0)) {
    throw ValidationError("generator proportion must lie in [0, 1]");
  }
  if (!cfg.subgroup_sizes.empty()) {
    throw ValidationError(
        "run-length simulation uses the constant subgroup size n; clear "
        "subgroup_sizes");
  }
  if (variant != ChartVariant::TrueChart) pi.validate();

  SimPlan plan;
  plan.lambda = cfg.lambda;
  plan.center = chart_center(variant, cfg, pi);
  plan.p_gen = p_gen;
  plan.n = cfg.n;
  plan.max_run_length = cfg.resolved_max_run_length();
  plan.seed = cfg.seed;

  // Run lengths are simulated on the variant's own scale: the generator
  // proportion is already expressed there, so the charted statistic is the
  // plain subgroup mean for every variant.
  plan.stat_by_count.resize(static_cast<std::size_t>(cfg.n) + 1);
  for (int count = 0; count <= cfg.n; ++count) {
    plan.stat_by_count[static_cast<std::size_t>(count)] =
        static_cast<double>(count) / static_cast<double>(cfg.n);
  }

  // The simulated limit sequence takes the width factor at the midpoint of
  // each sampling period, so period t uses 1 - (1 - lambda)^(2t + 1).
  const double width = ucl_asymptotic(variant, l, cfg, pi) - plan.center;
  const double decay = (1.0 - cfg.lambda) * (1.0 - cfg.lambda);
  double shrink = 1.0 - cfg.lambda;
  plan.ucl.resize(static_cast<std::size_t>(plan.max_run_length));
  for (std::int64_t t = 1; t <= plan.max_run_length; ++t) {
    shrink *= decay;
    plan.ucl[static_cast<std::size_t>(t - 1)] =
        plan.center + width * std::sqrt(1.0 - shrink);
  }
  return plan;
}

RunLength simulate_plan(const SimPlan& plan, std::int64_t replicate_index) {
  Xoshiro256 rng(plan.seed, static_cast<std::uint64_t>(replicate_index));
  const double lambda = plan.lambda;
  const double keep = 1.0 - plan.lambda;
  const double p = plan.p_gen;
  const int n = plan.n;
  const double* stat = plan.stat_by_count.data();
  const double* ucl = plan.ucl.data();
  double ewma = plan.center;
  for (std::int64_t t = 0; t < plan.max_run_length; ++t) {
    int count = 0;
    for (int i = 0; i < n; ++i) count += rng.u01() < p ? 1 : 0;
    ewma = lambda * stat[count] + keep * ewma;
    if (ewma >= ucl[t]) return {t + 1, false};
  }
  return {plan.max_run_length, true};
}

struct BatchSums {
  std::int64_t total = 0;
  std::int64_t total_sq = 0;
  std::int64_t censored = 0;
};

ArlEstimate finish_estimate(const BatchSums& sums, std::int64_t m) {
  ArlEstimate est;
  est.replicates = m;
  est.censored = sums.censored;
  est.mean_rl = static_cast<double>(sums.total) / static_cast<double>(m);
  if (m > 1) {
    const double total = static_cast<double>(sums.total);
    const double var = (static_cast<double>(sums.total_sq) -
                        total * total / static_cast<double>(m)) /
                       static_cast<double>(m - 1);
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(m));
  }
  return est;
}

struct CappedEval {
  bool completed = false;  // false means the mean provably exceeds the bound
  ArlEstimate estimate;    // valid only when completed
};

// Runs replicates 1..M in fixed growing chunks. Between chunks, if the
// partial sum plus one period for every pending replicate already pushes
// the mean past mean_bound, the candidate is abandoned: the true mean can
// only be larger. Chunk boundaries are constants, so the outcome never
// depends on thread count.
CappedEval run_replicates(const SimPlan& plan, std::int64_t m_total,
                          double mean_bound) {
  BatchSums sums;
  std::int64_t done = 0;
  std::int64_t chunk = 16;
  while (done < m_total) {
    const std::int64_t batch = std::min(chunk, m_total - done);
    std::int64_t total = 0, total_sq = 0, censored = 0;
#pragma omp parallel for schedule(static) \
    reduction(+ : total, total_sq, censored)
    for (std::int64_t m = done + 1; m <= done + batch; ++m) {
      const RunLength rl = simulate_plan(plan, m);
      total += rl.length;
      total_sq += rl.length * rl.length;
      censored += rl.censored ? 1 : 0;
    }
    sums.total += total;
    sums.total_sq += total_sq;
    sums.censored += censored;
    done += batch;
    chunk = std::min<std::int64_t>(chunk * 2, 1024);
    if (done < m_total) {
      const double mean_floor =
          (static_cast<double>(sums.total) +
           static_cast<double>(m_total - done)) /
          static_cast<double>(m_total);
      if (mean_floor > mean_bound) return {false, {}};
    }
  }
  return {true, finish_estimate(sums, m_total)};
}

constexpr double kNoBound = std::numeric_limits<double>::infinity();

}  // namespace

RunLength simulate_run_length(ChartVariant variant, double l,
                              const ChartConfig& cfg, const MisclassMatrix& pi,
                              double p_gen, std::int64_t replicate_index) {
  return simulate_plan(make_plan(variant, l, cfg, pi, p_gen), replicate_index);
}

ArlEstimate estimate_arl(ChartVariant variant, double l,
                         const ChartConfig& cfg, const MisclassMatrix& pi,
                         double p_gen) {
  const SimPlan plan = make_plan(variant, l, cfg, pi, p_gen);
  return run_replicates(plan, cfg.replicates, kNoBound).estimate;
}

ArlEstimate estimate_arl_reference(ChartVariant variant, double l,
                                   const ChartConfig& cfg,
                                   const MisclassMatrix& pi, double p_gen) {
  const SimPlan plan = make_plan(variant, l, cfg, pi, p_gen);
  BatchSums sums;
  for (std::int64_t m = 1; m <= cfg.replicates; ++m) {
    const RunLength rl = simulate_plan(plan, m);
    sums.total += rl.length;
    sums.total_sq += rl.length * rl.length;
    sums.censored += rl.censored ? 1 : 0;
  }
  return finish_estimate(sums, cfg.replicates);
}

CalibrationResult calibrate_l(ChartVariant variant, const ChartConfig& cfg,
                              const MisclassMatrix& pi) {
  cfg.validate();
  const double target = cfg.arl0_target;
  const double bound = target + 1.0;
  const double p_gen = in_control_generator(variant, cfg, pi);

  int evals = 0;
  const auto run = [&](double l) {
    ++evals;
    return run_replicates(make_plan(variant, l, cfg, pi, p_gen),
                          cfg.replicates, bound);
  };

  double best_l = 0.0, best_mean = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  const auto consider = [&](double l, const CappedEval& eval) {
    if (!eval.completed) return;
    const double gap = std::fabs(target - eval.estimate.mean_rl);
    if (gap < best_gap) {
      best_gap = gap;
      best_l = l;
      best_mean = eval.estimate.mean_rl;
    }
  };

  const CappedEval at_lo = run(cfg.l_lo);
  if (!at_lo.completed || at_lo.estimate.mean_rl > target) {
    if (at_lo.completed &&
        std::fabs(target - at_lo.estimate.mean_rl) < 1.0) {
      return {cfg.l_lo, at_lo.estimate.mean_rl, evals, true};
    }
    throw ConvergenceError(
        "in-control ARL already exceeds the target at the lower bracket "
        "l_lo = " +
        std::to_string(cfg.l_lo) + "; widen the bracket downward");
  }
  if (std::fabs(target - at_lo.estimate.mean_rl) < 1.0) {
    return {cfg.l_lo, at_lo.estimate.mean_rl, evals, true};
  }
  consider(cfg.l_lo, at_lo);

  const CappedEval at_hi = run(cfg.l_hi);
  if (at_hi.completed) {
    if (std::fabs(target - at_hi.estimate.mean_rl) < 1.0) {
      return {cfg.l_hi, at_hi.estimate.mean_rl, evals, true};
    }
    if (at_hi.estimate.mean_rl < target) {
      throw ConvergenceError(
          "in-control ARL still falls short of the target at the upper "
          "bracket l_hi = " +
          std::to_string(cfg.l_hi) +
          "; raise the bracket or the censoring cap");
    }
    consider(cfg.l_hi, at_hi);
  }

  double lo = cfg.l_lo;
  double hi = cfg.l_hi;
  for (int step = 0; step < 60; ++step) {
    const double mid = 0.5 * (lo + hi);
    const CappedEval at_mid = run(mid);
    if (!at_mid.completed) {
      hi = mid;
      continue;
    }
    const double mean = at_mid.estimate.mean_rl;
    if (std::fabs(target - mean) < 1.0) return {mid, mean, evals, true};
    consider(mid, at_mid);
    if (mean < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {best_l, best_mean, evals, false};
}

std::vector<SampledMoments> sample_ewma_moments(
    ChartVariant variant, const ChartConfig& cfg, const MisclassMatrix& pi,
    double p_gen, const std::vector<std::int64_t>& periods) {
  if (periods.empty()) throw ValidationError("no periods requested");
  std::int64_t horizon = 0;
  for (std::int64_t t : periods) {
    if (t < 1) throw ValidationError("period index must be at least 1");
    horizon = std::max(horizon, t);
  }
  cfg.validate();
  if (!(p_gen >= 0.0 && p_gen <= 1.0)) {
    throw ValidationError("generator proportion must lie in [0, 1]");
  }
  if (variant != ChartVariant::TrueChart) pi.validate();

  // Unlike run-length simulation, this samples the statistic itself, so the
  // corrected variant applies the observation-level correction to draws from
  // the surrogate proportion.
  const double center = chart_center(variant, cfg, pi);
  std::vector<double> stat_by_count(static_cast<std::size_t>(cfg.n) + 1);
  for (int count = 0; count <= cfg.n; ++count) {
    const double raw = static_cast<double>(count) / static_cast<double>(cfg.n);
    stat_by_count[static_cast<std::size_t>(count)] =
        variant == ChartVariant::Corrected ? correct_proportion(raw, pi).value
                                           : raw;
  }

  const std::size_t k = periods.size();
  std::vector<double> sum1(k, 0.0), sum2(k, 0.0), sum3(k, 0.0), sum4(k, 0.0);
  std::vector<double> path(static_cast<std::size_t>(horizon));
  for (std::int64_t m = 1; m <= cfg.replicates; ++m) {
    Xoshiro256 rng(cfg.seed, static_cast<std::uint64_t>(m));
    double ewma = center;
    for (std::int64_t t = 0; t < horizon; ++t) {
      int count = 0;
      for (int i = 0; i < cfg.n; ++i) count += rng.u01() < p_gen ? 1 : 0;
      ewma = cfg.lambda * stat_by_count[static_cast<std::size_t>(count)] +
             (1.0 - cfg.lambda) * ewma;
      path[static_cast<std::size_t>(t)] = ewma;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double x = path[static_cast<std::size_t>(periods[j] - 1)];
      sum1[j] += x;
      sum2[j] += x * x;
      sum3[j] += x * x * x;
      sum4[j] += x * x * x * x;
    }
  }

  const double m = static_cast<double>(cfg.replicates);
  std::vector<SampledMoments> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double mean = sum1[j] / m;
    const double m2 = sum2[j] / m - mean * mean;
    const double var = m2 * m / (m - 1.0);
    // Central fourth moment, for the sampling error of the variance.
    const double m4 = sum4[j] / m - 4.0 * mean * sum3[j] / m +
                      6.0 * mean * mean * sum2[j] / m - 3.0 * std::pow(mean, 4);
    const double var_of_var =
        (m4 - m2 * m2 * (m - 3.0) / (m - 1.0)) / m;
    out[j].t = periods[j];
    out[j].mean = mean;
    out[j].variance = var;
    out[j].se_mean = std::sqrt(std::max(m2, 0.0) / m);
    out[j].se_variance = std::sqrt(std::max(var_of_var, 0.0));
  }
  return out;
}

std::vector<Arl1Cell> arl1_table(const std::vector<ChartConfig>& grid,
                                 const MisclassMatrix& pi,
                                 const std::vector<double>& deltas) {
  if (deltas.empty()) throw ValidationError("no shift deltas given");
  constexpr ChartVariant kVariants[] = {
      ChartVariant::TrueChart, ChartVariant::Naive, ChartVariant::Corrected};

  std::vector<Arl1Cell> cells;
  cells.reserve(grid.size() * deltas.size());
  for (const ChartConfig& cfg : grid) {
    // One calibration per variant serves every delta of this config.
    std::array<VariantArl, 3> calibrated;
    for (ChartVariant v : kVariants) {
      VariantArl& slot = calibrated[static_cast<std::size_t>(variant_index(v))];
      try {
        const CalibrationResult res = calibrate_l(v, cfg, pi);
        slot.l = res.l_star;
        slot.converged = res.converged;
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
    for (double delta : deltas) {
      Arl1Cell cell;
      cell.p0 = cfg.p0;
      cell.n = cfg.n;
      cell.delta = delta;
      cell.by_variant = calibrated;
      try {
        cell.shift = make_shift(delta, cfg, pi);
      } catch (const std::exception& e) {
        for (auto& slot : cell.by_variant) {
          if (slot.ok()) slot.error = e.what();
        }
        cells.push_back(cell);
        continue;
      }
      for (ChartVariant v : kVariants) {
        VariantArl& slot =
            cell.by_variant[static_cast<std::size_t>(variant_index(v))];
        if (!slot.ok()) continue;
        try {
          slot.arl = estimate_arl(v, slot.l, cfg, pi,
                                  shifted_generator(v, cell.shift));
        } catch (const std::exception& e) {
          slot.error = e.what();
        }
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace cewma
