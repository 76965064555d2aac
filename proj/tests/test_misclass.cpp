#include <cmath>

#include "cewma/misclass.hpp"
#include "doctest.h"

using namespace cewma;

namespace {

bool near(double a, double b, double tol) { return std::fabs(a - b) < tol; }

}  // namespace

TEST_SUITE("misclass") {

TEST_CASE("proportion_pair complements and validates") {
  const ProportionPair pq = proportion_pair(0.05);
  CHECK(pq.p == 0.05);
  CHECK(pq.q == doctest::Approx(0.95));
  CHECK_THROWS_AS(proportion_pair(-0.1), ValidationError);
  CHECK_THROWS_AS(proportion_pair(1.1), ValidationError);
}

TEST_CASE("constructors fill the off-diagonal") {
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.95);
  CHECK(pi.pi11 == 0.95);
  CHECK(pi.pi10 == doctest::Approx(0.05));
  CHECK(pi.pi01 == doctest::Approx(0.05));
  CHECK(pi.pi00 == 0.95);
  CHECK_NOTHROW(pi.validate());

  const MisclassMatrix id = identity_misclass();
  CHECK(id.is_identity());
  CHECK(id.determinant() == 1.0);
  CHECK_FALSE(pi.is_identity());
}

TEST_CASE("pi_from_rr inverts the odds form") {
  const MisclassMatrix pi = pi_from_rr(19.0, 19.0);
  CHECK(pi.pi11 == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(pi.pi00 == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(pi.rr1() == doctest::Approx(19.0).epsilon(1e-12));
  CHECK(pi.rr0() == doctest::Approx(19.0).epsilon(1e-12));
  CHECK_THROWS_AS(pi_from_rr(-1.0, 19.0), ValidationError);
}

TEST_CASE("validate rejects broken matrices") {
  MisclassMatrix pi{1.2, 0.05, 0.05, 0.95};
  CHECK_THROWS_AS(pi.validate(), ValidationError);

  MisclassMatrix rows{0.95, 0.05, 0.10, 0.95};
  CHECK_THROWS_AS(rows.validate(), ValidationError);

  // pi11 = pi10 makes the observed rate carry no information about p.
  const MisclassMatrix flat = misclass_from_diagonal(0.6, 0.4);
  CHECK(near(flat.determinant(), 0.0, 1e-15));
  CHECK_THROWS_AS(flat.validate(), SingularMatrixError);
  CHECK_THROWS_AS(correct_proportion(0.5, flat), SingularMatrixError);
}

TEST_CASE("mix_proportion matches hand values") {
  const MisclassMatrix hi = misclass_from_diagonal(0.95, 0.95);
  const MisclassMatrix lo = misclass_from_diagonal(0.99, 0.99);
  CHECK(mix_proportion(0.05, hi) == doctest::Approx(0.095).epsilon(1e-12));
  CHECK(mix_proportion(0.05, lo) == doctest::Approx(0.059).epsilon(1e-12));
  CHECK(mix_proportion(0.5, hi) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(mix_proportion(1.5, hi), ValidationError);
}

TEST_CASE("correct_proportion inverts mix_proportion") {
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.99);
  for (double p = 0.01; p < 1.0; p += 0.07) {
    const double round_trip = correct_proportion(mix_proportion(p, pi), pi).value;
    CHECK(near(round_trip, p, 1e-12));
  }
}

TEST_CASE("correct_proportion on the juice rate") {
  const CorrectedProportion a =
      correct_proportion(0.111, misclass_from_diagonal(0.95, 0.95));
  CHECK(a.value == doctest::Approx(0.111 / 0.9 - 0.05 / 0.9).epsilon(1e-12));
  CHECK(near(a.value, 0.0677778, 5e-7));
  CHECK(a.in_unit_interval());

  const CorrectedProportion b =
      correct_proportion(0.111, misclass_from_diagonal(0.99, 0.99));
  CHECK(near(b.value, 0.1030612, 5e-7));
}

TEST_CASE("correction is not clamped") {
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.95);
  const CorrectedProportion low = correct_proportion(0.01, pi);
  CHECK(low.value < 0.0);
  CHECK_FALSE(low.in_unit_interval());
}

TEST_CASE("correct_observation averages to the corrected proportion") {
  const MisclassMatrix pi = misclass_from_diagonal(0.95, 0.99);
  const int n = 40;
  const int d = 7;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += correct_observation(i < d ? 1.0 : 0.0, pi);
  const double phat = static_cast<double>(d) / n;
  CHECK(near(sum / n, correct_proportion(phat, pi).value, 1e-12));
  CHECK_THROWS_AS(correct_observation(0.5, pi), ValidationError);
}

TEST_CASE("estimate_pi divides the validation table") {
  ValidationCounts counts;
  counts.n11 = 93;
  counts.n01 = 7;
  counts.n10 = 15;
  counts.n00 = 485;
  CHECK(counts.true_one_total() == 100);
  CHECK(counts.true_zero_total() == 500);
  const MisclassMatrix pi = estimate_pi(counts);
  CHECK(pi.pi11 == doctest::Approx(0.93).epsilon(1e-12));
  CHECK(pi.pi01 == doctest::Approx(0.07).epsilon(1e-12));
  CHECK(pi.pi10 == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(pi.pi00 == doctest::Approx(0.97).epsilon(1e-12));
  CHECK_NOTHROW(pi.validate());

  ValidationCounts empty_ones;
  empty_ones.n00 = 10;
  CHECK_THROWS_AS(estimate_pi(empty_ones), ValidationError);
  ValidationCounts negative;
  negative.n11 = -1;
  negative.n00 = 1;
  CHECK_THROWS_AS(estimate_pi(negative), ValidationError);
}

}  // TEST_SUITE
