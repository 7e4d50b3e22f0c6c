#include <doctest.h>

#include <cmath>
#include <vector>

#include "rost/errors.hpp"
#include "rost/overlap.hpp"

using namespace rost;

namespace {

OverlapMatrix toeplitz3(double a, double b) {
  OverlapMatrix q(3);
  q.set(0, 1, a);
  q.set(1, 2, a);
  q.set(0, 2, b);
  return q;
}

}  // namespace

TEST_CASE("overlap matrix basics") {
  OverlapMatrix q(3, 0.4);
  CHECK(q.size() == 3);
  CHECK(q(0, 0) == 1.0);
  CHECK(q(0, 2) == 0.4);
  q.set(0, 2, 0.7);
  CHECK(q(2, 0) == 0.7);
  CHECK_NOTHROW(q.validate());

  q.set(1, 2, 1.5);
  CHECK_THROWS_AS(q.validate(), ValidationError);
}

TEST_CASE("entrywise powers act on off-diagonal entries") {
  OverlapMatrix q(2, 0.7);
  OverlapMatrix c = schur_power(q, 3);
  CHECK(c(0, 1) == doctest::Approx(0.343).epsilon(1e-12));
  CHECK(c(0, 0) == 1.0);
  CHECK(schur_power(q, 1)(0, 1) == doctest::Approx(0.7));
  CHECK_THROWS_AS(schur_power(q, 0), ValidationError);
}

TEST_CASE("ultrametricity check flags the violating triple") {
  OverlapMatrix good(3, 0.2);
  good.set(0, 1, 0.5);  // nested: {0,1} tight, 2 attached at 0.2
  CHECK(is_ultrametric(good).ok);

  OverlapMatrix bad(3);
  bad.set(0, 1, 0.5);
  bad.set(0, 2, 0.2);
  bad.set(1, 2, 0.3);
  UltrametricCheck c = is_ultrametric(bad);
  CHECK_FALSE(c.ok);
  CHECK(c.violation == doctest::Approx(0.1).epsilon(1e-9));
  // The reported triple really violates d(i,j) <= max(d(i,k), d(k,j)).
  auto d = [&](std::size_t i, std::size_t j) {
    return i == j ? 0.0 : 1.0 - bad(i, j);
  };
  CHECK(d(c.i, c.j) > std::max(d(c.i, c.k), d(c.k, c.j)) + 1e-12);
}

TEST_CASE("distance between structures: masses, matrix, tail") {
  Rost a, b;
  a.masses.atoms = {0.6, 0.4};
  b.masses.atoms = {0.5, 0.3, 0.2};
  a.overlaps = OverlapMatrix(2);
  b.overlaps = OverlapMatrix(3);
  RostDistance d = rost_distance(a, b);
  CHECK(d.mass_part == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(d.matrix_part == doctest::Approx(0.0));
  CHECK(d.value == doctest::Approx(0.2).epsilon(1e-12));

  Rost id3, all1;
  id3.overlaps = OverlapMatrix(3);
  all1.overlaps = OverlapMatrix(3, 1.0);
  RostDistance m = rost_distance(id3, all1);
  // sum over ordered pairs i != j of 2^-(i+j), 1-based: 2*(1/8+1/16+1/32).
  CHECK(m.matrix_part == doctest::Approx(0.4375).epsilon(1e-12));
  CHECK(m.tail_bound == doctest::Approx(15.0 / 32.0).epsilon(1e-12));
  CHECK(m.value == doctest::Approx(0.4375).epsilon(1e-12));

  CHECK(rost_distance(a, a).value == doctest::Approx(0.0));
}

TEST_CASE("monotone entry maps are applied and post-checked") {
  OverlapMatrix q(3, 0.25);
  OverlapMatrix scaled = apply_overlap_function(q, overlap_scaling_map(0.5));
  CHECK(scaled(0, 1) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(scaled(1, 1) == 1.0);

  CHECK_THROWS_AS(
      apply_overlap_function(q, [](double s) { return 0.5 * s; }),
      ValidationError);  // does not fix 1
  OverlapMatrix mixed = toeplitz3(0.3, 0.6);
  CHECK_THROWS_AS(apply_overlap_function(mixed,
                                         [](double s) {
                                           if (s >= 1.0) return 1.0;
                                           return s > 0.5 ? 0.2 : 0.5;
                                         }),
                  ValidationError);  // decreasing on realized entries

  // An entrywise square root can break positive semidefiniteness: this
  // matrix is on the PSD boundary, its square root is not PSD.
  OverlapMatrix edge = toeplitz3(0.9, 0.62);
  CHECK(psd_min_eigenvalue(edge) >= -1e-9);
  CHECK_THROWS_AS(
      apply_overlap_function(edge, [](double s) { return std::sqrt(s); }),
      NumericError);
}

TEST_CASE("state space merges nearby values and sorts") {
  OverlapMatrix q(4);
  q.set(0, 1, 0.5);
  q.set(2, 3, 0.2);
  q.set(0, 2, 0.2 + 1e-12);
  q.set(0, 3, 0.2);
  q.set(1, 2, 0.2);
  q.set(1, 3, 0.2);
  auto values = state_space(q);
  REQUIRE(values.size() == 2);
  CHECK(values[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(values[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("decomposability detects a particle missing a state value") {
  // Two blocks with the same internal overlap: every row sees {0, 0.5}.
  OverlapMatrix uniform(4);
  uniform.set(0, 1, 0.5);
  uniform.set(2, 3, 0.5);
  CHECK(is_indecomposable(uniform));

  // Different internal overlaps: row 0 never sees 0.6.
  OverlapMatrix split(4);
  split.set(0, 1, 0.3);
  split.set(2, 3, 0.6);
  CHECK_FALSE(is_indecomposable(split));

  CHECK(is_indecomposable(OverlapMatrix(1)));
}

TEST_CASE("minimum eigenvalue of a symmetric matrix") {
  OverlapMatrix q = toeplitz3(0.9, 0.0);
  // Eigenvalues are 1 and 1 +- 0.9 sqrt(2).
  CHECK(psd_min_eigenvalue(q) ==
        doctest::Approx(1.0 - 0.9 * std::sqrt(2.0)).epsilon(1e-9));
  CHECK(psd_min_eigenvalue(OverlapMatrix(5, 0.3)) ==
        doctest::Approx(0.7).epsilon(1e-9));
}
