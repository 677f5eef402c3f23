#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbmlab/rng.hpp"

using namespace sbmlab;

TEST_CASE("streams are deterministic and independent of construction order") {
  RngStream a(42, 7);
  std::vector<double> first;
  for (int i = 0; i < 16; ++i) first.push_back(a.next_uniform());

  RngStream b(42, 7);
  for (int i = 0; i < 16; ++i) CHECK(b.next_uniform() == first[static_cast<std::size_t>(i)]);

  RngStream c(42, 8);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) any_diff |= (c.next_uniform() != first[static_cast<std::size_t>(i)]);
  CHECK(any_diff);
}

TEST_CASE("uniforms stay inside the open unit interval and look uniform") {
  RngStream r(123, 0);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.next_uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
  CHECK(std::abs(sumsq / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("gaussian moments") {
  RngStream r(9, 3);
  double s1 = 0, s2 = 0, s4 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = r.next_gaussian();
    s1 += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("exponential mean matches the rate") {
  RngStream r(5, 11);
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += r.next_exponential(2.0);
  CHECK(std::abs(s / n - 0.5) < 0.01);
}

TEST_CASE("pairwise sum is order-stable") {
  std::vector<double> xs(1001);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = std::sin(static_cast<double>(i));
  const double a = pairwise_sum(xs);
  const double b = pairwise_sum(xs);
  CHECK(a == b);
  double plain = 0.0;
  for (double x : xs) plain += x;
  CHECK(std::abs(a - plain) < 1e-9);
}
