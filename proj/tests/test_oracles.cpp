#include <doctest.h>

#include <random>

#include "mscme/error.hpp"
#include "mscme/oracles.hpp"
#include "support.hpp"

using namespace mscme;

TEST_CASE("linear marginal intensities") {
  CHECK(lin_marginal_intensity(20, 1, 5, 5) == doctest::Approx(44.0).epsilon(1e-15));
  CHECK(lin_marginal_intensity(20, 1, 5, 5, Method::QSSA) == doctest::Approx(40.0).epsilon(1e-15));
  CHECK_THROWS_AS(lin_marginal_intensity(20, 0, 5, 5), ConfigError);
  CHECK_THROWS_AS(lin_marginal_intensity(20, -1, 5, 5), ConfigError);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<> u(0.01, 50.0);
  for (int i = 0; i < 100; ++i) {
    const double k1v = u(gen), k2 = u(gen), k3 = u(gen), k4 = u(gen);
    const double diff = lin_marginal_intensity(k1v, k2, k3, k4) - lin_marginal_intensity(k1v, k2, k3, k4, Method::QSSA);
    CHECK(diff == doctest::Approx(k1v / k3).epsilon(1e-12));
  }
}

TEST_CASE("linear fiber laws") {
  const auto cma = lin_fiber_law(Method::CMA, 30, 1, 5, 5);
  CHECK(cma.kind == AnalyticLaw::Kind::Binomial);
  CHECK(cma.p == doctest::Approx(5.0 / 11.0).epsilon(1e-15));
  CHECK(lin_fiber_law(Method::QSSA, 30, 1, 5, 5).p == 0.5);
  const auto zero = lin_fiber_law(Method::CMA, 0, 1, 5, 5);
  CHECK(zero.pmf(0) == 1.0);
  CHECK(zero.pmf(1) == 0.0);
  const auto ref = testing::binomial_table(30, 5.0 / 11.0);
  CHECK(testing::linf(cma.table(0, 30), ref) <= 1e-15);
}

TEST_CASE("three-timescale intensity") {
  CHECK(lin2_marginal_intensity(20, 1, 100, 10) == doctest::Approx(64.2).epsilon(1e-14));
  // Decreases in kappa towards (k1V / (k2 gamma)) (3 gamma + 2 k2).
  const double a = lin2_marginal_intensity(20, 1, 100, 10), b = lin2_marginal_intensity(20, 1, 1000, 10);
  CHECK(b < a);
  CHECK(b > 20.0 / 10.0 * (30.0 + 2.0));
  const double sym = 20.0 / (1.0 * 100 * 100) * (100 + 3e4 + 2 * 100);
  CHECK(lin2_marginal_intensity(20, 1, 100, 100) == doctest::Approx(sym).epsilon(1e-14));
}

TEST_CASE("analytic laws sum to one") {
  for (double lambda : {0.3, 44.0, 64.2, 900.0}) {
    const auto law = AnalyticLaw::poisson(lambda);
    const auto hi = static_cast<Count>(lambda + 60.0 * std::sqrt(lambda) + 60.0);
    double total = 0.0;
    for (double p : law.table(0, hi)) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (Count n : {0, 1, 17, 2000}) {
    double total = 0.0;
    for (double p : AnalyticLaw::binomial(n, 0.37).table(0, n)) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(AnalyticLaw::poisson(44).mode() == 43);
  CHECK(AnalyticLaw::poisson(44.5).mode() == 44);
  CHECK_THROWS_AS(AnalyticLaw::poisson(0), ConfigError);
  CHECK_THROWS_AS(AnalyticLaw::binomial(3, 1.5), ConfigError);
}

TEST_CASE("relative l2") {
  const auto a = AnalyticLaw::poisson(44).distribution("S", 0, 200);
  CHECK(relative_l2(a, a) == 0.0);
  const auto b = AnalyticLaw::poisson(40).distribution("S", 0, 150);
  const double direct = testing::rel_l2(align(b, 0, 200), align(a, 0, 200));
  CHECK(relative_l2(b, a) == doctest::Approx(direct).epsilon(1e-15));
  const auto other = AnalyticLaw::poisson(44).distribution("T", 0, 200);
  CHECK_THROWS_AS(relative_l2(a, other), ConfigError);
  CHECK_THROWS_AS(relative_l2(std::vector<double>{1, 2}, std::vector<double>{1}), ConfigError);
}

TEST_CASE("marginalization") {
  {
    auto space = std::make_shared<StateSpace>(StateSpace({"X1", "X2"}, {3, 2}));
    const auto m = marginalize({space, {1.0}}, {1, 1});
    REQUIRE(m.space->size() == 1);
    CHECK(m.space->state(0)[0] == 5);
  }
  // Product of Poisson laws pushed through the sum is Poisson of the sum.
  const double l1 = 20.0, l2 = 24.0;
  const Count hi = 150;
  auto space = std::make_shared<StateSpace>(StateSpace::box({"X1", "X2"}, {0, 0}, {hi, hi}));
  std::vector<double> p(space->size());
  double mass = 0.0;
  for (std::size_t i = 0; i < space->size(); ++i) {
    const auto x = space->state(i);
    p[i] = std::exp(testing::log_poisson(l1, x[0]) + testing::log_poisson(l2, x[1]));
    mass += p[i];
  }
  const Distribution joint{space, p};
  const auto s = marginalize(joint, {1, 1});
  double smass = 0.0;
  for (double v : s.probabilities) smass += v;
  CHECK(std::abs(smass - mass) <= 1e-13);
  for (Count k = 0; k <= 100; ++k)
    CHECK(std::abs(s.probabilities[static_cast<std::size_t>(k)] - std::exp(testing::log_poisson(l1 + l2, k))) <= 1e-12);
  // Under a fast coordinate a fiber law is just reindexed.
  auto fiber = std::make_shared<StateSpace>(StateSpace({"X1", "X2"}, {0, 3, 1, 2, 2, 1, 3, 0}));
  const auto f = marginalize({fiber, {0.1, 0.2, 0.3, 0.4}}, {0, 1}, "F");
  CHECK(f.probabilities == std::vector<double>{0.4, 0.3, 0.2, 0.1});
}

TEST_CASE("peak report") {
  const auto pois = AnalyticLaw::poisson(44).distribution("S", 0, 200);
  const auto peaks = peak_report(pois);
  // pmf(43) == pmf(44) in exact arithmetic; rounding may split the tie.
  REQUIRE(peaks.size() == 1);
  CHECK((peaks[0].position == 43 || peaks[0].position == 44));
  auto line = std::make_shared<StateSpace>(StateSpace::box({"S"}, {0}, {5}));
  CHECK(peak_report({line, {0.3, 0.25, 0.2, 0.15, 0.07, 0.03}}).empty());
  const auto plateau = peak_report({line, {0.1, 0.2, 0.25, 0.25, 0.15, 0.05}});
  REQUIRE(plateau.size() == 1);
  CHECK(plateau[0].position == 2);
  const auto two = peak_report({line, {0.1, 0.3, 0.1, 0.2, 0.3, 0.0}});
  REQUIRE(two.size() == 2);
  CHECK(two[0].position == 1);
  CHECK(two[1].position == 4);
}
