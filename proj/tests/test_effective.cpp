#include <doctest.h>

#include <sstream>

#include "mscme/effective.hpp"
#include "mscme/error.hpp"
#include "mscme/examples.hpp"
#include "mscme/parser.hpp"
#include "support.hpp"

using namespace mscme;

namespace {

std::string linear_text(double k3, double k4) {
  return "species X1 X2\nreaction R1: 0 -> X1 @ 20\nreaction R2: X2 -> 0 @ 1\n"
         "reaction R3: X1 -> X2 @ " + std::to_string(k3) + "\nreaction R4: X2 -> X1 @ " +
         std::to_string(k4) + "\nslow S = X1 + X2\nfast F = X2\n";
}

double death_rate_at(const EffectiveGenerator& eff, Count s) {
  const std::size_t i = eff.slow_space->find(IntVector{s});
  for (std::size_t k = 0; k < eff.slow_reaction_names.size(); ++k)
    if (eff.slow_reaction_names[k] == "R2") return eff.propensities[i][k];
  return -1.0;
}

void check_generator(const SparseGenerator& g) {
  CHECK(g.column_sum_error() <= 1e-12);
  for (const auto& e : g.entries()) {
    if (e.row == e.col) CHECK(e.rate <= 0.0);
    else CHECK(e.rate >= 0.0);
  }
}

bool same_matrix(const SparseGenerator& a, const SparseGenerator& b) {
  const auto ea = a.entries(), eb = b.entries();
  if (ea.size() != eb.size()) return false;
  for (std::size_t i = 0; i < ea.size(); ++i)
    if (ea[i].row != eb[i].row || ea[i].col != eb[i].col || ea[i].rate != eb[i].rate) return false;
  return true;
}

}  // namespace

TEST_CASE("slow reactions") {
  const auto lin = parse_network(examples::kLinear);
  CHECK(slow_reactions(lin.network, *lin.basis) == std::vector<std::size_t>{0, 1});
  const auto bis = parse_network(examples::kBistable);
  CHECK(slow_reactions(bis.network, *bis.basis) == std::vector<std::size_t>{0, 1, 2, 3, 6});
  const VariableBasis none({}, {{"A", {1, 0}}, {"B", {0, 1}}});
  CHECK(slow_reactions(lin.network, none).empty());
}

TEST_CASE("effective propensity is a fiber expectation") {
  const auto lin = parse_network(examples::kLinear);
  const Count s = 30;
  auto space = std::make_shared<StateSpace>(
      enumerate_states(lin.network, {}, slow_constraints(*lin.basis, {s})));
  auto fiber_law = [&](double p) {
    const auto law = testing::binomial_table(s, p);
    std::vector<double> probs(space->size());
    for (std::size_t i = 0; i < space->size(); ++i)
      probs[i] = law[static_cast<std::size_t>(space->state(i)[1])];
    return Distribution{space, probs};
  };
  const auto cma = fiber_law(5.0 / 11.0);
  CHECK(effective_propensity(cma, [](auto) { return 7.5; }) == doctest::Approx(7.5).epsilon(1e-14));
  CHECK(effective_propensity(cma, lin.network.reaction(1)) == doctest::Approx(5.0 / 11.0 * s).epsilon(1e-13));
  CHECK(effective_propensity(fiber_law(0.5), lin.network.reaction(1)) == doctest::Approx(0.5 * s).epsilon(1e-13));
}

TEST_CASE("CMA on the linear system") {
  const auto lin = parse_network(examples::kLinear);
  const auto eff = cma_effective_generator(lin.network, *lin.basis, {{0}, {400}});
  check_generator(eff.generator);
  CHECK(eff.method == Method::CMA);
  for (Count s : {1, 10, 44, 399}) {
    const std::size_t i = eff.slow_space->find(IntVector{s});
    CHECK(eff.propensities[i][0] == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(std::abs(death_rate_at(eff, s) / s - 5.0 / 11.0) <= 1e-10);
  }
  const auto pi = stationary_distribution(eff.generator);
  CHECK(testing::rel_l2(pi.probabilities, testing::poisson_table(44.0, 0, 400)) <= 1e-8);
}

TEST_CASE("QSSA on the linear system") {
  const auto lin = parse_network(examples::kLinear);
  const auto eff = qssa_effective_generator(lin.network, *lin.basis, {}, {{0}, {400}});
  check_generator(eff.generator);
  for (Count s : {1, 10, 44, 399}) CHECK(std::abs(death_rate_at(eff, s) / s - 0.5) <= 1e-10);
  const auto pi = stationary_distribution(eff.generator);
  CHECK(testing::rel_l2(pi.probabilities, testing::poisson_table(40.0, 0, 400)) <= 1e-8);
  const double err = testing::rel_l2(pi.probabilities, testing::poisson_table(44.0, 0, 400));
  CHECK(err == doctest::Approx(0.4322).epsilon(1e-3 / 0.4322));
  // The CMA death rate is strictly below the QSSA one here.
  const auto cma = cma_effective_generator(lin.network, *lin.basis, {{0}, {400}});
  CHECK(death_rate_at(cma, 10) < death_rate_at(eff, 10));
}

TEST_CASE("single-state slow domain gives a zero generator") {
  const auto lin = parse_network(examples::kLinear);
  const auto eff = cma_effective_generator(lin.network, *lin.basis, {{0}, {0}});
  CHECK(eff.generator.dimension() == 1);
  CHECK(eff.generator.dense()(0, 0) == 0.0);
}

TEST_CASE("CMA approaches the QSSA as the fast rates grow") {
  double previous = 1e300;
  for (double c : {1.0, 10.0, 100.0}) {
    const auto d = parse_network(linear_text(5.0 * c, 5.0 * c));
    const auto cma = cma_effective_generator(d.network, *d.basis, {{0}, {50}});
    const auto qssa = qssa_effective_generator(d.network, *d.basis, {}, {{0}, {50}});
    const double gap = std::abs(death_rate_at(cma, 20) - death_rate_at(qssa, 20)) / 20.0;
    // Closed forms: k2 k3 / (k2 + k3 + k4) against k2 k3 / (k3 + k4).
    CHECK(gap == doctest::Approx(5 * c / (10 * c) - 5 * c / (1 + 10 * c)).epsilon(1e-9));
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("merging duplicate projected reactions leaves the generator unchanged") {
  const auto bis = parse_network(examples::kBistable);
  EffectiveOptions merged, apart;
  apart.merge_duplicates = false;
  const auto a = cma_effective_generator(bis.network, *bis.basis, {{0}, {80}}, {}, merged);
  const auto b = cma_effective_generator(bis.network, *bis.basis, {{0}, {80}}, {}, apart);
  const Eigen::MatrixXd da = a.generator.dense(), db = b.generator.dense();
  CHECK((da - db).cwiseAbs().maxCoeff() <= 1e-12 * da.cwiseAbs().maxCoeff());
  check_generator(a.generator);
}

TEST_CASE("effective generators do not depend on the worker count") {
  const auto bis = parse_network(examples::kBistable);
  EffectiveOptions one, four;
  four.workers = 4;
  const auto a = cma_effective_generator(bis.network, *bis.basis, {{0}, {120}}, {}, one);
  const auto b = cma_effective_generator(bis.network, *bis.basis, {{0}, {120}}, {}, four);
  CHECK(same_matrix(a.generator, b.generator));
  CHECK(a.propensities == b.propensities);
}

TEST_CASE("depth-one plan reproduces the plain CMA") {
  const auto lin = parse_network(examples::kLinear);
  const auto plain = cma_effective_generator(lin.network, *lin.basis, {{0}, {100}});
  const auto nested =
      nested_effective_generator(lin.network, ReductionPlan::single(*lin.basis), Method::CMA, {{0}, {100}});
  CHECK(same_matrix(plain.generator, nested.generator));
  const auto pq = qssa_effective_generator(lin.network, *lin.basis, {}, {{0}, {100}});
  const auto nq =
      nested_effective_generator(lin.network, ReductionPlan::single(*lin.basis), Method::QSSA, {{0}, {100}});
  CHECK(same_matrix(pq.generator, nq.generator));
}

TEST_CASE("nested CMA on a small slow domain") {
  // A reflecting birth-death truncation of a Poisson law is the renormalized
  // truncated law, so the comparison stays exact on 0..60.
  const auto ts = parse_network(examples::kThreeScale);
  const auto plan = parse_plan(examples::kThreeScalePlan, ts.network.species());
  CHECK(plan.depth() == 2);
  EffectiveOptions opt;
  opt.cache = std::make_shared<FiberCache>();
  const auto eff = nested_effective_generator(ts.network, plan, Method::CMA, {{0}, {60}}, opt);
  check_generator(eff.generator);
  CHECK(opt.cache->size() >= 61);
  const auto pi = stationary_distribution(eff.generator);
  auto ref = testing::poisson_table(64.2, 0, 60);
  double mass = 0.0;
  for (double p : ref) mass += p;
  for (double& p : ref) p /= mass;
  CHECK(testing::rel_l2(pi.probabilities, ref) <= 1e-8);
  // A fiber law is a distribution over the level-1 fiber.
  const auto fiber = reduced_fiber_distribution(ts.network, plan, Method::CMA, {12});
  double total = 0.0;
  for (std::size_t i = 0; i < fiber.space->size(); ++i) {
    const auto x = fiber.space->state(i);
    CHECK(x[0] + x[1] + x[2] == 12);
    total += fiber.probabilities[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const auto q = nested_effective_generator(ts.network, plan, Method::QSSA, {{0}, {60}});
  check_generator(q.generator);
}

TEST_CASE("plan validation") {
  const auto ts = parse_network(examples::kThreeScale);
  const auto& sp = ts.network.species();
  CHECK_THROWS_AS(parse_plan("slow S = X1\n", sp), ParseError);
  CHECK_THROWS_AS(parse_plan("level\nfast F = X1\n", sp), ParseError);
  CHECK_THROWS_AS(parse_plan("level\nslow S = X1 + X2 + X3\nfast A = X2\nfast B = X3\nwobble\n", sp), ParseError);
  // Second level without a new slow variable.
  CHECK_THROWS_AS(parse_plan("level\nslow S1 = X1 + X2 + X3\nfast A = X2\nfast B = X3\n"
                             "level\nfast C = X2\nfast D = X3\n", sp),
                  ParseError);
  // A QSSA fast set may not contain reactions that move the slow variable.
  const auto bis = parse_network(examples::kBistable);
  CHECK_THROWS_AS(qssa_effective_generator(bis.network, *bis.basis, {"R1"}, {{0}, {5}}), ConfigError);
  CHECK_THROWS_AS(qssa_effective_generator(bis.network, *bis.basis, {"R99"}, {{0}, {5}}), ConfigError);
  CHECK(parse_method("cma") == Method::CMA);
  CHECK(parse_method("qssa") == Method::QSSA);
  CHECK_THROWS_AS(parse_method("tau"), ConfigError);
}

TEST_CASE("fiber failures name the fiber") {
  // 2A -> 2B splits every fiber of S = A + B into parity classes.
  const auto d = parse_network(
      "species A B\nreaction In: 0 -> A @ 1\nreaction Pair: 2*A -> 2*B @ 1\n"
      "slow S = A + B\nfast F = B\n");
  try {
    cma_effective_generator(d.network, *d.basis, {{0}, {5}});
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("level 1, s=(1)") != std::string::npos);
  }
}

TEST_CASE("effective CSV exports") {
  const auto lin = parse_network(examples::kLinear);
  const auto eff = cma_effective_generator(lin.network, *lin.basis, {{0}, {2}});
  std::ostringstream g, p;
  write_effective_generator_csv(g, eff);
  write_effective_propensities_csv(p, eff);
  std::istringstream gs(g.str()), ps(p.str());
  std::string line;
  std::getline(gs, line);
  CHECK(line == "s_from,s_to,rate,method");
  std::size_t rows = 0;
  while (std::getline(gs, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "cma");
  }
  CHECK(rows == 4);  // 0->1, 1->0, 1->2, 2->1
  std::getline(ps, line);
  CHECK(line == "s,reaction,alpha_eff");
}
