#pragma once

#include <cstdint>

#include "cewma/errors.hpp"

namespace cewma {

// A nonconforming proportion p and its complement q = 1 - p.
struct ProportionPair {
  double p = 0.0;
  double q = 1.0;
};

// Builds the pair from p, rejecting values outside [0, 1].
ProportionPair proportion_pair(double p);

// Conditional misclassification probabilities of a binary inspection.
// True status 1 means nonconforming; the recorded status may differ.
//   pi11 = P(recorded 1 | true 1)    pi10 = P(recorded 1 | true 0)
//   pi01 = P(recorded 0 | true 1)    pi00 = P(recorded 0 | true 0)
// Each true class's recorded outcomes sum to one: pi11 + pi01 = 1 and
// pi00 + pi10 = 1.
struct MisclassMatrix {
  double pi11 = 1.0;
  double pi10 = 0.0;
  double pi01 = 0.0;
  double pi00 = 1.0;

  // 1 - pi10 - pi01. Correcting an observed rate divides by this, so a
  // zero determinant means observed rates say nothing about true rates.
  double determinant() const { return pi11 - pi10; }

  bool is_identity() const {
    return pi11 == 1.0 && pi00 == 1.0 && pi10 == 0.0 && pi01 == 0.0;
  }

  // pi / (1 - pi) of each diagonal entry.
  double rr1() const { return pi11 / pi01; }
  double rr0() const { return pi00 / pi10; }

  // Throws ValidationError for out-of-range entries or broken sums and
  // SingularMatrixError when the determinant is numerically zero.
  void validate() const;
};

MisclassMatrix identity_misclass();

// Off-diagonal entries implied by the per-class sums.
MisclassMatrix misclass_from_diagonal(double pi11, double pi00);

// Relative-ratio parameterization: pi11 = rr1/(1+rr1), pi00 = rr0/(1+rr0).
// rr = 1 yields the all-0.5 matrix, which validate() rejects as singular.
MisclassMatrix pi_from_rr(double rr1, double rr0);

// Observed nonconforming rate of a process whose true rate is p0:
// pi11 * p0 + pi10 * (1 - p0).
double mix_proportion(double p0, const MisclassMatrix& pi);

// Inverse of mix_proportion. Finite-sample inputs can land outside [0, 1],
// so the result is reported unclamped.
struct CorrectedProportion {
  double value = 0.0;
  bool in_unit_interval() const { return value >= 0.0 && value <= 1.0; }
};

CorrectedProportion correct_proportion(double p_star, const MisclassMatrix& pi);

// De-biases one recorded 0/1 observation. Averaging these over a subgroup
// gives the same number as correct_proportion of the raw sample proportion.
double correct_observation(double x_star, const MisclassMatrix& pi);

// Confusion counts from a validation study, indexed (recorded k, true l).
struct ValidationCounts {
  std::int64_t n11 = 0;
  std::int64_t n10 = 0;
  std::int64_t n01 = 0;
  std::int64_t n00 = 0;

  std::int64_t true_one_total() const { return n11 + n01; }
  std::int64_t true_zero_total() const { return n10 + n00; }
};

// Cell-frequency estimator pi_kl = n_kl / (true class l total). Throws
// ValidationError when a true class has no observations.
MisclassMatrix estimate_pi(const ValidationCounts& counts);

}  // namespace cewma
