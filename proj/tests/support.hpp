#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's solvers; generators are rebuilt densely from propensities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mscme/generator.hpp"
#include "mscme/model.hpp"
#include "mscme/parser.hpp"

namespace mscme::testing {

inline double log_poisson(double lambda, long k) {
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

inline std::vector<double> poisson_table(double lambda, long lo, long hi) {
  std::vector<double> out;
  for (long k = lo; k <= hi; ++k) out.push_back(std::exp(log_poisson(lambda, k)));
  return out;
}

inline std::vector<double> binomial_table(long n, double p) {
  std::vector<double> out;
  for (long k = 0; k <= n; ++k) {
    double lp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    if (k > 0) lp += k * std::log(p);
    if (k < n) lp += (n - k) * std::log1p(-p);
    out.push_back(std::exp(lp));
  }
  return out;
}

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

inline double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
  return w;
}

/// Mass-action propensity written out independently of Reaction::propensity.
inline double mass_action(const Reaction& r, std::span<const Count> x) {
  for (const auto& g : r.guards)
    if (x[g.species] < g.min_count) return 0.0;
  double a = r.rate;
  for (const auto& t : r.reactants) {
    const double v = static_cast<double>(x[t.species]);
    if (t.count == 1) a *= v;
    else a *= v * (v - 1.0) * (r.halve_homodimer ? 0.5 : 1.0);
  }
  return std::max(a, 0.0);
}

/// Dense generator over a space, reflecting at the boundary.
inline Eigen::MatrixXd dense_generator(const ReactionNetwork& net, const StateSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  StateVector y(space.dimension());
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto x = space.state(static_cast<std::size_t>(j));
    for (const auto& r : net.reactions()) {
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] + r.stoichiometry[k];
      const std::size_t i = space.find(y);
      if (i == StateSpace::npos || static_cast<Eigen::Index>(i) == j) continue;
      const double a = mass_action(r, x);
      g(static_cast<Eigen::Index>(i), j) += a;
      g(j, j) -= a;
    }
  }
  return g;
}

/// Kernel vector of a dense generator by full pivoting LU, normalized.
inline std::vector<double> dense_kernel(const Eigen::MatrixXd& g) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  lu.setThreshold(1e-11);
  const Eigen::MatrixXd k = lu.kernel();
  Eigen::VectorXd v = k.col(0);
  v /= v.sum();
  return {v.data(), v.data() + v.size()};
}

/// [exp(G t)]_{x1, x0} by Pade scaling and squaring.
inline double expm_entry(const Eigen::MatrixXd& g, double t, std::size_t x0, std::size_t x1) {
  const Eigen::MatrixXd e = (g * t).exp();
  return e(static_cast<Eigen::Index>(x1), static_cast<Eigen::Index>(x0));
}

/// Small random network with births and deaths of every species, so that
/// every box domain is a single communicating class.
struct RandomSystem {
  ReactionNetwork network;
  VariableBasis basis;
  std::vector<LinearBound> bounds;
};

inline RandomSystem random_system(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(gen); };
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };

  const int d = pick(2, 3);
  std::vector<std::string> species;
  for (int i = 0; i < d; ++i) species.push_back("X" + std::to_string(i + 1));

  std::vector<Reaction> reactions;
  auto add = [&](std::vector<Term> reactants, IntVector nu, double rate) {
    Reaction r;
    r.name = "R" + std::to_string(reactions.size() + 1);
    r.reactants = std::move(reactants);
    r.stoichiometry = std::move(nu);
    r.rate = rate;
    reactions.push_back(std::move(r));
  };
  for (int i = 0; i < d; ++i) {
    IntVector up(d, 0), down(d, 0);
    up[i] = 1;
    down[i] = -1;
    add({}, up, uniform(0.5, 5.0));
    add({{static_cast<std::size_t>(i), 1}}, down, uniform(0.2, 2.0));
  }
  const int extra = pick(1, 4);
  for (int e = 0; e < extra; ++e) {
    const int a = pick(0, d - 1);
    int b = pick(0, d - 2);
    if (b >= a) ++b;
    IntVector nu(d, 0);
    switch (pick(0, 2)) {
      case 0:  // Xa -> Xb
        nu[a] = -1;
        nu[b] = 1;
        add({{static_cast<std::size_t>(a), 1}}, nu, uniform(0.5, 10.0));
        break;
      case 1:  // 2 Xa -> Xb
        nu[a] = -2;
        nu[b] = 1;
        add({{static_cast<std::size_t>(a), 2}}, nu, uniform(0.05, 1.0));
        break;
      default: {  // Xa + Xb -> Xb
        nu[a] = -1;
        std::vector<Term> t{{static_cast<std::size_t>(std::min(a, b)), 1},
                            {static_cast<std::size_t>(std::max(a, b)), 1}};
        add(t, nu, uniform(0.05, 1.0));
      }
    }
  }
  RandomSystem sys{ReactionNetwork(species, 1.0, reactions), {}, {}};

  // S = X1 + c2 X2 + ..., fast variables X2..Xd: determinant 1.
  Variable s{"S", IntVector(d, 0)};
  s.coefficients[0] = 1;
  for (int i = 1; i < d; ++i) s.coefficients[i] = pick(1, 2);
  std::vector<Variable> fast;
  for (int i = 1; i < d; ++i) {
    Variable f{"F" + std::to_string(i), IntVector(d, 0)};
    f.coefficients[i] = 1;
    fast.push_back(f);
  }
  sys.basis = VariableBasis({s}, fast);
  const Count hi = d == 2 ? 14 : 6;
  for (int i = 0; i < d; ++i) {
    LinearBound b{species[i], IntVector(d, 0), 0, hi};
    b.coefficients[i] = 1;
    sys.bounds.push_back(b);
  }
  return sys;
}

}  // namespace mscme::testing
