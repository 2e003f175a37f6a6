#include <cmath>
#include <set>

#include "doctest.h"
#include "grcl/error.hpp"
#include "grcl/numerics.hpp"
#include "grcl/random.hpp"

using namespace grcl;

TEST_CASE("dot, norm and distance") {
  const Vector a{1.0, 2.0, 2.0};
  const Vector b{-1.0, 0.5, 4.0};
  CHECK(dot(a, b) == doctest::Approx(8.0));
  CHECK(norm(a) == doctest::Approx(3.0));
  CHECK(squared_distance(a, b) == doctest::Approx(4.0 + 2.25 + 4.0));
  CHECK_THROWS_AS(dot(a, Vector{1.0}), Error);
}

TEST_CASE("axpy and scale") {
  Vector y{1.0, 1.0};
  axpy(2.0, Vector{3.0, -1.0}, y);
  CHECK(y == Vector{7.0, -1.0});
  scale(0.5, y);
  CHECK(y == Vector{3.5, -0.5});
}

TEST_CASE("l2_normalize") {
  const Vector v = l2_normalize(Vector{3.0, 4.0});
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));
  try {
    l2_normalize(Vector{0.0, 0.0});
    FAIL("zero vector normalized");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_input);
  }
}

TEST_CASE("log_softmax against long double evaluation") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Vector logits(7);
    for (double& v : logits) v = 30.0 * (uniform01(rng) - 0.5);
    const Vector ls = log_softmax(logits);
    long double z = 0.0L;
    for (double v : logits) z += std::exp(static_cast<long double>(v));
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const long double expect = logits[i] - std::log(z);
      CHECK(std::fabs(static_cast<long double>(ls[i]) - expect) < 1e-12L);
    }
  }
}

TEST_CASE("log_sum_exp stays finite for large inputs") {
  CHECK(log_sum_exp(Vector{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_sum_exp(Vector{-1000.0}) == doctest::Approx(-1000.0));
  CHECK_THROWS_AS(log_sum_exp(Vector{}), Error);
}

TEST_CASE("all_finite") {
  CHECK(all_finite(Vector{1.0, -2.0}));
  CHECK_FALSE(all_finite(Vector{1.0, NAN}));
  CHECK_FALSE(all_finite(Vector{INFINITY}));
}

TEST_CASE("gram and solve_spd") {
  const std::vector<Vector> rows{{1.0, 0.0, 1.0}, {0.0, 2.0, 1.0}};
  const Matrix g = gram(rows);
  CHECK(g(0, 0) == 2.0);
  CHECK(g(0, 1) == 1.0);
  CHECK(g(1, 0) == 1.0);
  CHECK(g(1, 1) == 5.0);

  // x = (1, -2): G x = (0, -9)
  const auto x = solve_spd(g, Vector{0.0, -9.0});
  REQUIRE(x);
  CHECK((*x)[0] == doctest::Approx(1.0));
  CHECK((*x)[1] == doctest::Approx(-2.0));

  Matrix singular(2, 2);
  singular(0, 0) = singular(0, 1) = singular(1, 0) = singular(1, 1) = 1.0;
  CHECK_FALSE(solve_spd(singular, Vector{1.0, 1.0}));
}

TEST_CASE("seed streams are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t root : {0ULL, 1ULL, 7ULL}) {
    for (std::uint64_t s = 1; s <= 5; ++s) seen.insert(derive_seed(root, s));
  }
  CHECK(seen.size() == 15);
  Rng a = make_rng(7, SeedStream::batches, 2);
  Rng b = make_rng(7, SeedStream::batches, 2);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
}

TEST_CASE("uniform_index and standard_normal") {
  Rng rng(11);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[uniform_index(rng, 5)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.02);
  CHECK(std::fabs(sum2 / n - 1.0) < 0.02);
}
