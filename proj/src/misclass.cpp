#include "cewma/misclass.hpp"

#include <cmath>
#include <string>

namespace cewma {

namespace {

constexpr double kSumTol = 1e-9;
constexpr double kSingularTol = 1e-12;

void require_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1], got " +
                          std::to_string(v));
  }
}

}  // namespace

ProportionPair proportion_pair(double p) {
  require_probability(p, "proportion");
  return {p, 1.0 - p};
}

void MisclassMatrix::validate() const {
  require_probability(pi11, "pi11");
  require_probability(pi10, "pi10");
  require_probability(pi01, "pi01");
  require_probability(pi00, "pi00");
  if (std::fabs(pi11 + pi01 - 1.0) > kSumTol) {
    throw ValidationError("pi11 + pi01 must equal 1, got " +
                          std::to_string(pi11 + pi01));
  }
  if (std::fabs(pi00 + pi10 - 1.0) > kSumTol) {
    throw ValidationError("pi00 + pi10 must equal 1, got " +
                          std::to_string(pi00 + pi10));
  }
  if (std::fabs(determinant()) < kSingularTol) {
    throw SingularMatrixError(
        "misclassification matrix is singular (pi11 - pi10 = " +
        std::to_string(determinant()) + "), correction undefined");
  }
}

MisclassMatrix identity_misclass() { return {1.0, 0.0, 0.0, 1.0}; }

MisclassMatrix misclass_from_diagonal(double pi11, double pi00) {
  require_probability(pi11, "pi11");
  require_probability(pi00, "pi00");
  return {pi11, 1.0 - pi00, 1.0 - pi11, pi00};
}

MisclassMatrix pi_from_rr(double rr1, double rr0) {
  if (!(rr1 >= 0.0) || !(rr0 >= 0.0)) {
    throw ValidationError("relative ratios must be nonnegative");
  }
  return misclass_from_diagonal(rr1 / (1.0 + rr1), rr0 / (1.0 + rr0));
}

double mix_proportion(double p0, const MisclassMatrix& pi) {
  require_probability(p0, "p0");
  return pi.pi11 * p0 + pi.pi10 * (1.0 - p0);
}

CorrectedProportion correct_proportion(double p_star,
                                       const MisclassMatrix& pi) {
  const double det = pi.determinant();
  if (std::fabs(det) < kSingularTol) {
    throw SingularMatrixError("cannot correct through a singular matrix");
  }
  return {(p_star - pi.pi10) / det};
}

double correct_observation(double x_star, const MisclassMatrix& pi) {
  if (x_star != 0.0 && x_star != 1.0) {
    throw ValidationError("observation must be 0 or 1, got " +
                          std::to_string(x_star));
  }
  return correct_proportion(x_star, pi).value;
}

MisclassMatrix estimate_pi(const ValidationCounts& counts) {
  if (counts.n11 < 0 || counts.n10 < 0 || counts.n01 < 0 || counts.n00 < 0) {
    throw ValidationError("validation counts must be nonnegative");
  }
  const std::int64_t ones = counts.true_one_total();
  const std::int64_t zeros = counts.true_zero_total();
  if (ones == 0) {
    throw ValidationError("validation data has no truly nonconforming items");
  }
  if (zeros == 0) {
    throw ValidationError("validation data has no truly conforming items");
  }
  MisclassMatrix pi;
  pi.pi11 = static_cast<double>(counts.n11) / static_cast<double>(ones);
  pi.pi01 = static_cast<double>(counts.n01) / static_cast<double>(ones);
  pi.pi10 = static_cast<double>(counts.n10) / static_cast<double>(zeros);
  pi.pi00 = static_cast<double>(counts.n00) / static_cast<double>(zeros);
  return pi;
}

}  // namespace cewma
