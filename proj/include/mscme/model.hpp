#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mscme {

using Count = std::int64_t;
using IntVector = std::vector<Count>;
/// Copy numbers, one entry per species.
using StateVector = std::vector<Count>;

struct Term {
  std::size_t species = 0;
  Count count = 0;
  bool operator==(const Term&) const = default;
};

/// Propensity is forced to zero unless x[species] >= min_count.
struct Guard {
  std::size_t species = 0;
  Count min_count = 1;
  bool operator==(const Guard&) const = default;
};

/// A mass-action reaction. The rate is stored already scaled by volume
/// (k*V for zeroth order, k/V for second order), so volume never enters
/// propensity evaluation:
///   0       -> rate
///   X       -> rate * X
///   X + Y   -> rate * X * Y
///   2X      -> rate * X * (X - 1)    (times 1/2 if halve_homodimer)
///
/// After projection onto a constrained subsystem the stoichiometry need not
/// equal products - reactants any more, so both are stored.
struct Reaction {
  std::string name;
  std::vector<Term> reactants;  // sorted by species, counts > 0
  IntVector stoichiometry;      // one entry per species
  double rate = 0.0;
  std::vector<Guard> guards;    // sorted by species
  bool halve_homodimer = false;

  Count order() const;
  double propensity(std::span<const Count> x) const;
  /// Same reactants, guards and convention; rates may differ.
  bool same_propensity_form(const Reaction& other) const;
};

class ReactionNetwork {
 public:
  ReactionNetwork() = default;
  /// Throws ConfigError when species are duplicated, volume <= 0, or a
  /// reaction is malformed (unknown species, order > 2, null stoichiometry,
  /// non-positive rate).
  ReactionNetwork(std::vector<std::string> species, double volume,
                  std::vector<Reaction> reactions);

  const std::vector<std::string>& species() const noexcept { return species_; }
  std::size_t dimension() const noexcept { return species_.size(); }
  double volume() const noexcept { return volume_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  std::size_t size() const noexcept { return reactions_.size(); }
  const Reaction& reaction(std::size_t i) const { return reactions_.at(i); }

  /// Index of a species by name; throws ConfigError if unknown.
  std::size_t species_index(const std::string& name) const;
  /// Index of a reaction by name; throws ConfigError if unknown.
  std::size_t reaction_index(const std::string& name) const;

  /// Writes alpha_i(x) into out (size() entries) and returns alpha_0.
  double propensities(std::span<const Count> x, std::span<double> out) const;

  /// Network restricted to the given reaction indices, in the given order.
  ReactionNetwork subset(std::span<const std::size_t> indices) const;

  /// Human readable one-line description of reaction i.
  std::string describe(std::size_t i) const;

 private:
  std::vector<std::string> species_;
  double volume_ = 1.0;
  std::vector<Reaction> reactions_;
};

struct Propensities {
  std::vector<double> values;
  double total = 0.0;
};

Propensities propensities(const ReactionNetwork& net, std::span<const Count> x);

/// Named integer linear combination of species counts.
struct Variable {
  std::string name;
  IntVector coefficients;
};

/// Slow and fast variables forming a basis of the species space.
///
/// The change of basis is inverted once over the rationals (Bareiss
/// determinant plus adjugate). The stoichiometric projector
/// B^{-1} diag(0..0, 1..1) B must be integral, otherwise construction throws.
class VariableBasis {
 public:
  VariableBasis() = default;
  VariableBasis(std::vector<Variable> slow, std::vector<Variable> fast);

  const std::vector<Variable>& slow() const noexcept { return slow_; }
  const std::vector<Variable>& fast() const noexcept { return fast_; }
  std::size_t dimension() const noexcept { return dimension_; }
  /// Index of a variable by name among slow then fast; -1 if absent.
  int find(const std::string& name) const;

  /// Constrained stoichiometric projector: zero the slow coordinates of nu,
  /// keep the fast ones, map back to species space.
  IntVector project(std::span<const Count> nu) const;
  const std::vector<IntVector>& projector() const noexcept { return projector_; }

  IntVector slow_values(std::span<const Count> x) const;
  IntVector fast_values(std::span<const Count> x) const;
  /// Species vector with the given slow and fast coordinates; throws
  /// ConfigError if it is not integral.
  StateVector compose(std::span<const Count> slow, std::span<const Count> fast) const;

 private:
  std::vector<Variable> slow_;
  std::vector<Variable> fast_;
  std::size_t dimension_ = 0;
  Count determinant_ = 0;
  std::vector<IntVector> adjugate_;   // det * B^{-1}
  std::vector<IntVector> projector_;  // integral
};

/// lo <= coefficients . x <= hi. Equality constraints use lo == hi.
struct LinearBound {
  std::string name;
  IntVector coefficients;
  Count lo = 0;
  Count hi = 0;
};

Count dot(std::span<const Count> a, std::span<const Count> b);

std::pair<IntVector, IntVector> evaluate_variables(const VariableBasis& basis,
                                                   std::span<const Count> x);

IntVector project_stoichiometry(const VariableBasis& basis, std::span<const Count> nu);

/// Applies the projector to every stoichiometric vector. Reactions whose
/// projection is null are removed. A reaction whose projected change can
/// take a species below zero without its propensity vanishing gets a guard.
/// With merge_duplicates, reactions with equal projected stoichiometry and
/// equal propensity form are fused by adding rates (name "A+B").
ReactionNetwork derive_constrained_subsystem(const ReactionNetwork& net,
                                             const VariableBasis& basis,
                                             bool merge_duplicates = true);

}  // namespace mscme
