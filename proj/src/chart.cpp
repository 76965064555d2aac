#include "cewma/chart.hpp"

#include <algorithm>
#include <cmath>

namespace cewma {

const char* to_string(ChartVariant v) {
  switch (v) {
    case ChartVariant::TrueChart:
      return "true";
    case ChartVariant::Naive:
      return "naive";
    case ChartVariant::Corrected:
      return "corrected";
  }
  return "corrected";
}

ChartVariant variant_from_string(const std::string& s) {
  if (s == "true") return ChartVariant::TrueChart;
  if (s == "naive") return ChartVariant::Naive;
  if (s == "corrected") return ChartVariant::Corrected;
  throw ValidationError("unknown chart variant '" + s +
                        "' (expected true, naive, or corrected)");
}

int ChartConfig::size_at(std::int64_t t) const {
  if (t >= 1 && static_cast<std::size_t>(t) <= subgroup_sizes.size()) {
    return subgroup_sizes[static_cast<std::size_t>(t) - 1];
  }
  return n;
}

std::int64_t ChartConfig::resolved_max_run_length() const {
  if (max_run_length > 0) return max_run_length;
  const auto scaled =
      static_cast<std::int64_t>(std::ceil(100.0 * arl0_target));
  return std::max<std::int64_t>(scaled, 5000);
}

void ChartConfig::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) {
    throw ValidationError("p0 must lie strictly inside (0, 1), got " +
                          std::to_string(p0));
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ValidationError("lambda must lie in (0, 1], got " +
                          std::to_string(lambda));
  }
  if (n < 1) throw ValidationError("subgroup size n must be at least 1");
  for (int size : subgroup_sizes) {
    if (size < 1) {
      throw ValidationError("per-period subgroup sizes must be at least 1");
    }
  }
  if (!(arl0_target > 1.0)) {
    throw ValidationError("arl0_target must exceed 1");
  }
  if (!(l_lo > 0.0 && l_lo < l_hi)) {
    throw ValidationError("limit coefficient bracket needs 0 < lower < upper");
  }
  if (max_run_length < 0) {
    throw ValidationError("max_run_length must be nonnegative");
  }
  if (replicates < 1) throw ValidationError("replicates must be at least 1");
}

EwmaState ewma_update(const EwmaState& prev, double p_hat, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ValidationError("lambda must lie in (0, 1], got " +
                          std::to_string(lambda));
  }
  return {prev.t + 1, lambda * p_hat + (1.0 - lambda) * prev.value};
}

namespace {

// lambda * (1 - (1-lambda)^(2t)) / (2 - lambda), the factor by which the
// per-period sampling variance enters the EWMA variance at period t.
double ewma_weight(std::int64_t t, double lambda) {
  return lambda * (1.0 - std::pow(1.0 - lambda, 2.0 * static_cast<double>(t))) /
         (2.0 - lambda);
}

double ewma_weight_asymptotic(double lambda) { return lambda / (2.0 - lambda); }

// Per-period sampling variance of the charted statistic, before the EWMA
// weight is applied. The corrected statistic inherits the observed-rate
// variance inflated by 1/det^2.
double sampling_variance(ChartVariant variant, const ChartConfig& cfg,
                         const MisclassMatrix& pi, int n_t) {
  if (variant == ChartVariant::TrueChart) {
    const ProportionPair p = proportion_pair(cfg.p0);
    return p.p * p.q / static_cast<double>(n_t);
  }
  pi.validate();
  const ProportionPair ps = proportion_pair(mix_proportion(cfg.p0, pi));
  const double base = ps.p * ps.q / static_cast<double>(n_t);
  if (variant == ChartVariant::Naive) return base;
  const double det = pi.determinant();
  return base / (det * det);
}

}  // namespace

Moments corrected_ewma_moments(std::int64_t t, const ChartConfig& cfg,
                               const MisclassMatrix& pi) {
  cfg.validate();
  if (t < 1) throw ValidationError("period index must be at least 1");
  const double var =
      sampling_variance(ChartVariant::Corrected, cfg, pi, cfg.size_at(t)) *
      ewma_weight(t, cfg.lambda);
  return {cfg.p0, var};
}

double chart_center(ChartVariant variant, const ChartConfig& cfg,
                    const MisclassMatrix& pi) {
  switch (variant) {
    case ChartVariant::TrueChart:
      return cfg.p0;
    case ChartVariant::Naive:
      return mix_proportion(cfg.p0, pi);
    case ChartVariant::Corrected:
      return correct_proportion(mix_proportion(cfg.p0, pi), pi).value;
  }
  return cfg.p0;
}

double ucl_at(std::int64_t t, ChartVariant variant, double l,
              const ChartConfig& cfg, const MisclassMatrix& pi) {
  if (t < 1) throw ValidationError("period index must be at least 1");
  if (!(l > 0.0)) throw ValidationError("limit coefficient must be positive");
  const double var = sampling_variance(variant, cfg, pi, cfg.size_at(t)) *
                     ewma_weight(t, cfg.lambda);
  return chart_center(variant, cfg, pi) + l * std::sqrt(var);
}

double ucl_asymptotic(ChartVariant variant, double l, const ChartConfig& cfg,
                      const MisclassMatrix& pi) {
  if (!(l > 0.0)) throw ValidationError("limit coefficient must be positive");
  const double var = sampling_variance(variant, cfg, pi, cfg.n) *
                     ewma_weight_asymptotic(cfg.lambda);
  return chart_center(variant, cfg, pi) + l * std::sqrt(var);
}

ChartLimits make_limits(ChartVariant variant, double l, const ChartConfig& cfg,
                        const MisclassMatrix& pi) {
  cfg.validate();
  ChartLimits limits;
  limits.variant = variant;
  limits.l_coefficient = l;
  limits.ucl_asymptotic = ucl_asymptotic(variant, l, cfg, pi);
  limits.lcl = 0.0;
  return limits;
}

ChartLimits np_limits(const ChartLimits& limits, int n) {
  if (n < 1) throw ValidationError("subgroup size n must be at least 1");
  ChartLimits scaled = limits;
  scaled.ucl_asymptotic = limits.ucl_asymptotic * static_cast<double>(n);
  scaled.lcl = limits.lcl * static_cast<double>(n);
  return scaled;
}

}  // namespace cewma
