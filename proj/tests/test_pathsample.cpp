#include <doctest.h>

#include <cmath>
#include <functional>

#include "mscme/effective.hpp"
#include "mscme/error.hpp"
#include "mscme/examples.hpp"
#include "mscme/parser.hpp"
#include "mscme/pathsample.hpp"
#include "support.hpp"

using namespace mscme;

namespace {

SparseGenerator from_dense(const Eigen::MatrixXd& g) {
  const auto n = static_cast<std::size_t>(g.rows());
  std::vector<Count> flat(n);
  for (std::size_t i = 0; i < n; ++i) flat[i] = static_cast<Count>(i);
  auto space = std::make_shared<StateSpace>(StateSpace({"S"}, flat));
  std::vector<SparseGenerator::Entry> entries;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (i != j && g(i, j) != 0.0) entries.push_back({i, j, g(i, j)});
  return SparseGenerator(space, n, entries);
}

Eigen::MatrixXd toy3() {
  Eigen::MatrixXd g(3, 3);
  g << -1.5, 0.7, 0.0,
        1.0, -1.9, 2.0,
        0.5, 1.2, -2.0;
  return g;
}

// Random birth-death-jump chain on n states with a few long jumps.
Eigen::MatrixXd random_chain(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<> u(0.2, 3.0);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    if (j + 1 < n) g(j + 1, j) = u(gen);
    if (j > 0) g(j - 1, j) = u(gen);
    if (j >= 2 && j % 3 == 0) g(j - 2, j) = u(gen);
  }
  for (Eigen::Index j = 0; j < g.cols(); ++j) g(j, j) = -g.col(j).sum();
  return g;
}

// Smallest r with P(Poisson(mean) > r) < 2^-52, by a long double tail sum.
std::size_t reference_cutoff(double mean) {
  const long double eps = std::ldexp(1.0L, -52);
  const auto top = static_cast<long>(mean + 40.0 * std::sqrt(mean) + 100.0);
  std::vector<long double> logp(static_cast<std::size_t>(top) + 1);
  for (long k = 0; k <= top; ++k)
    logp[static_cast<std::size_t>(k)] = k * std::log(static_cast<long double>(mean)) - mean - std::lgamma(k + 1.0L);
  long double tail = 0.0L;  // P(N > r) for r = top, top-1, ...
  std::size_t best = static_cast<std::size_t>(top);
  for (long r = top; r >= 0; --r) {
    if (tail >= eps) break;
    best = static_cast<std::size_t>(r);
    tail += std::exp(logp[static_cast<std::size_t>(r)]);
  }
  return best;
}

}  // namespace

TEST_CASE("two-state toggle dominating process") {
  Eigen::MatrixXd g(2, 2);
  g << -1, 1, 1, -1;
  const DominatingProcess dom(from_dense(g));
  CHECK(dom.rho() == 1.0);
  const Eigen::MatrixXd m(dom.transition());
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 0) == 1.0);
  CHECK(m(0, 1) == 1.0);
  for (double t : {0.1, 1.0, 3.0})
    CHECK(transition_probability(dom, t, 0, 0) == doctest::Approx((1 + std::exp(-2 * t)) / 2).epsilon(1e-13));
  CHECK(transition_probability(dom, 0.0, 0, 0) == 1.0);
  CHECK(transition_probability(dom, 0.0, 0, 1) == 0.0);
}

TEST_CASE("zero generator") {
  const DominatingProcess dom(from_dense(Eigen::MatrixXd::Zero(3, 3)));
  CHECK(dom.rho() == 1.0);
  const Eigen::MatrixXd m(dom.transition());
  CHECK(m.isIdentity());
  const double t = 4.0;
  const auto pmf = event_count_pmf(dom, t, 1, 1);
  for (std::size_t r = 0; r <= pmf.r_max; ++r)
    CHECK(pmf.weights[r] == doctest::Approx(std::exp(testing::log_poisson(t, static_cast<long>(r)))).epsilon(1e-12));
  RandomSource rng(1);
  const auto path = sample_conditioned_path(dom, pmf, 0.0, rng);
  CHECK(path.jumps() == 0);
  CHECK(path.states.front() == StateVector{1});
}

TEST_CASE("poisson cutoff") {
  for (double mean : {0.5, 10.0, 201.0, 2013.6})
    CHECK(poisson_cutoff(mean) == reference_cutoff(mean));
}

TEST_CASE("inflation and dominance") {
  const auto g = from_dense(random_chain(30, 4));
  for (double inflation : {1.0, 1.5, 2.0}) {
    DominatingOptions o;
    o.inflation = inflation;
    const DominatingProcess dom(g, o);
    CHECK(dom.rho() == doctest::Approx(inflation * g.max_exit_rate()).epsilon(1e-15));
    CHECK(dom.column_sum_error() <= 1e-12);
    const Eigen::MatrixXd m(dom.transition());
    CHECK(m.minCoeff() >= 0.0);
  }
  DominatingOptions bad;
  bad.inflation = 0.5;
  CHECK_THROWS_AS(DominatingProcess(g, bad), ConfigError);
}

TEST_CASE("transition probabilities against the matrix exponential") {
  const Eigen::MatrixXd dense = random_chain(25, 9);
  const auto g = from_dense(dense);
  const double t = 0.8;
  double base = 0.0;
  for (double inflation : {1.0, 1.5, 2.0}) {
    DominatingOptions o;
    o.inflation = inflation;
    const DominatingProcess dom(g, o);
    const double p = transition_probability(dom, t, 3, 10);
    CHECK(std::abs(p - testing::expm_entry(dense, t, 3, 10)) <= 1e-12);
    if (inflation == 1.0) base = p;
    CHECK(std::abs(p - base) <= 1e-10);
  }
  const DominatingProcess dom(g);
  for (double s : {0.05, 0.7, 5.0}) {
    const auto v = transition_vector(dom, s, 7);
    double total = 0.0;
    for (double x : v) total += x;
    CHECK(std::abs(total - 1.0) <= 1e-10);
    CHECK(std::abs(v[12] - testing::expm_entry(dense, s, 7, 12)) <= 1e-12);
  }
}

TEST_CASE("event-count pmf matches enumeration over short event sequences") {
  const Eigen::MatrixXd dense = toy3();
  const DominatingProcess dom(from_dense(dense));
  const Eigen::MatrixXd m(dom.transition());
  const double t = 0.9;
  const std::size_t x0 = 0, x1 = 2;
  const auto pmf = event_count_pmf(dom, t, x0, x1);
  const double norm = testing::expm_entry(dense, t, x0, x1);
  CHECK(pmf.transition == doctest::Approx(norm).epsilon(1e-12));
  double total = 0.0;
  for (double w : pmf.weights) total += w;
  CHECK(std::abs(total - 1.0) <= 1e-12);
  // Sum of M products over every sequence x0 -> ... -> x1 of r steps.
  std::function<double(std::size_t, std::size_t)> walks = [&](std::size_t from, std::size_t left) {
    if (left == 0) return from == x1 ? 1.0 : 0.0;
    double s = 0.0;
    for (std::size_t to = 0; to < 3; ++to)
      if (m(to, from) != 0.0) s += m(to, from) * walks(to, left - 1);
    return s;
  };
  for (std::size_t r = 0; r <= 6; ++r) {
    const double expect =
        std::exp(testing::log_poisson(dom.rho() * t, static_cast<long>(r))) * walks(x0, r) / norm;
    CHECK(pmf.weights[r] == doctest::Approx(expect).epsilon(1e-11));
  }
  CHECK_THROWS_AS(event_count_pmf(dom, 0.0, x0, x1), ConfigError);
}

TEST_CASE("strategies agree") {
  const auto g = from_dense(random_chain(60, 21));
  std::vector<EventCountPMF> pmfs;
  for (auto st : {PowerStrategy::EigenDecomp, PowerStrategy::CachedPowers, PowerStrategy::MatVec}) {
    DominatingOptions o;
    o.strategy = st;
    const DominatingProcess dom(g, o);
    CHECK(dom.strategy() == st);
    pmfs.push_back(event_count_pmf(dom, 3.0, 5, 40));
  }
  // This transition is far below the eigen round-off, so exact powers are used.
  CHECK(pmfs[0].strategy == PowerStrategy::MatVec);
  for (std::size_t k = 1; k < pmfs.size(); ++k) {
    REQUIRE(pmfs[k].r_max == pmfs[0].r_max);
    CHECK(testing::linf(pmfs[k].weights, pmfs[0].weights) <= 1e-10);
    CHECK(pmfs[k].transition == doctest::Approx(pmfs[0].transition).epsilon(1e-10));
  }
  DominatingOptions tight;
  tight.strategy = PowerStrategy::CachedPowers;
  tight.dense_limit = 10;
  CHECK_THROWS_AS(DominatingProcess(g, tight), ConfigError);
  DominatingOptions automatic;
  automatic.dense_limit = 10;
  CHECK(DominatingProcess(g, automatic).strategy() == PowerStrategy::MatVec);
  CHECK(parse_power_strategy("eigen") == PowerStrategy::EigenDecomp);
  CHECK(parse_power_strategy("powers") == PowerStrategy::CachedPowers);
  CHECK(parse_power_strategy("matvec") == PowerStrategy::MatVec);
  CHECK_THROWS_AS(parse_power_strategy("magic"), ConfigError);
}

TEST_CASE("bridges hit both endpoints and only use generator transitions") {
  const Eigen::MatrixXd dense = random_chain(40, 5);
  const auto g = from_dense(dense);
  for (auto st : {PowerStrategy::EigenDecomp, PowerStrategy::CachedPowers, PowerStrategy::MatVec}) {
    DominatingOptions o;
    o.strategy = st;
    const DominatingProcess dom(g, o);
    const auto pmf = event_count_pmf(dom, 2.0, 3, 30);
    for (std::uint64_t k = 0; k < 100; ++k) {
      RandomSource rng(17, k);
      PathInfo info;
      const auto path = sample_conditioned_path(dom, pmf, 1.0, rng, &info);
      REQUIRE(path.epochs() >= 1);
      CHECK(path.times.front() == 1.0);
      CHECK(path.indices.front() == 3);
      CHECK(path.indices.back() == 30);
      CHECK(info.jumps == path.jumps());
      CHECK(info.events >= info.jumps);
      for (std::size_t e = 1; e < path.epochs(); ++e) {
        CHECK(path.times[e] > path.times[e - 1]);
        CHECK(path.times[e] < 3.0);
        CHECK(dense(static_cast<Eigen::Index>(path.indices[e]),
                    static_cast<Eigen::Index>(path.indices[e - 1])) > 0.0);
      }
    }
  }
}

TEST_CASE("unreachable endpoints") {
  Eigen::MatrixXd g(2, 2);
  g << -1, 0, 1, 0;  // 0 -> 1 only
  const DominatingProcess dom(from_dense(g));
  CHECK_THROWS_AS(event_count_pmf(dom, 1.0, 1, 0), NumericalError);
  RandomSource rng(1);
  CHECK_THROWS_AS(sample_conditioned_path(dom, 1, 0, 0.0, 1.0, rng), NumericalError);
}

TEST_CASE("dominating rate of the linear CMA generator") {
  const auto lin = parse_network(examples::kLinear);
  const auto eff = cma_effective_generator(lin.network, *lin.basis, {{0}, {400}});
  const DominatingProcess dom(eff.generator);
  // 20 + 399 * 5/11: the top state cannot be born out of the domain.
  CHECK(dom.rho() == doctest::Approx(20.0 + 399.0 * 5.0 / 11.0).epsilon(1e-12));
  CHECK(dom.strategy() == PowerStrategy::EigenDecomp);
  CHECK_FALSE(dom.degraded());
  CHECK(event_count_pmf(dom, 10.0, 44, 44).strategy == PowerStrategy::EigenDecomp);
}
