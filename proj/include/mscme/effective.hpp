#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mscme/generator.hpp"
#include "mscme/model.hpp"

namespace mscme {

enum class Method { CMA, QSSA };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

/// One level of a reduction hierarchy. The basis carries every slow
/// variable fixed so far (outer levels first) plus this level's fast
/// variables.
struct ReductionLevel {
  VariableBasis basis;
  std::vector<LinearBound> fiber_bounds;
  /// QSSA only: names of the fast reactions kept at this level. Defaults to
  /// every reaction of the parent system that leaves this level's slow
  /// variables unchanged.
  std::optional<std::vector<std::string>> fast_reactions;
};

struct ReductionPlan {
  std::vector<ReductionLevel> levels;

  static ReductionPlan single(VariableBasis basis, std::vector<LinearBound> fiber_bounds = {});
  std::size_t depth() const noexcept { return levels.size(); }
};

/// Plan file: blocks introduced by a `level` line, each followed by
/// `slow`, `fast`, optional `bound <species> in lo..hi` and optional
/// `fast-reactions R3 R4 ...` lines. Slow variables accumulate down the
/// levels. Throws ParseError / ConfigError.
ReductionPlan parse_plan(std::string_view text, const std::vector<std::string>& species);

/// Fiber distributions keyed by (level, slow values); first insert wins.
class FiberCache {
 public:
  explicit FiberCache(std::size_t max_level = 1) : max_level_(max_level) {}
  std::shared_ptr<const Distribution> find(std::size_t level, const IntVector& key) const;
  std::shared_ptr<const Distribution> insert(std::size_t level, const IntVector& key,
                                             std::shared_ptr<const Distribution> d);
  std::size_t max_level() const noexcept { return max_level_; }
  std::size_t size() const;

 private:
  std::size_t max_level_;
  mutable std::mutex mu_;
  std::map<std::pair<std::size_t, IntVector>, std::shared_ptr<const Distribution>> entries_;
};

struct EffectiveOptions {
  unsigned workers = 1;
  StationaryOptions stationary{};
  bool merge_duplicates = true;
  std::shared_ptr<FiberCache> cache;  // optional
};

/// Generator over slow-variable values whose rates are fiber-averaged slow
/// propensities.
struct EffectiveGenerator {
  SpacePtr slow_space;
  SparseGenerator generator;
  Method method = Method::CMA;
  std::vector<std::size_t> slow_reactions;  // indices into the full network
  std::vector<std::string> slow_reaction_names;
  /// propensities[state][k]: effective rate of slow_reactions[k].
  std::vector<std::vector<double>> propensities;
};

/// Reactions with S . nu != 0 for some slow row.
std::vector<std::size_t> slow_reactions(const ReactionNetwork& net, const VariableBasis& basis);

/// Expectation of alpha over a fiber distribution.
double effective_propensity(const Distribution& dist, const Reaction& reaction);
template <class F>
double effective_propensity(const Distribution& dist, F&& alpha) {
  double e = 0.0;
  for (std::size_t i = 0; i < dist.space->size(); ++i)
    if (dist.probabilities[i] != 0.0) e += dist.probabilities[i] * alpha(dist.space->state(i));
  return e;
}

/// Box of slow values, one [lo, hi] range per slow variable of level 1.
struct SlowDomain {
  IntVector lo;
  IntVector hi;
};

EffectiveGenerator cma_effective_generator(const ReactionNetwork& net, const VariableBasis& basis,
                                           const SlowDomain& omega,
                                           std::vector<LinearBound> fiber_bounds = {},
                                           const EffectiveOptions& options = {});

/// Fiber dynamics use only the fast reactions, unprojected. fast_set holds
/// reaction names; empty means the complement of slow_reactions.
EffectiveGenerator qssa_effective_generator(const ReactionNetwork& net, const VariableBasis& basis,
                                            const std::vector<std::string>& fast_set,
                                            const SlowDomain& omega,
                                            std::vector<LinearBound> fiber_bounds = {},
                                            const EffectiveOptions& options = {});

/// Recursive reduction: a level-k fiber distribution is q(v) * p_v where p_v
/// are level-(k+1) fiber distributions and q is the stationary law of the
/// effective generator over the level-(k+1) slow values inside the fiber.
/// The deepest fibers are solved directly.
EffectiveGenerator nested_effective_generator(const ReactionNetwork& net, const ReductionPlan& plan,
                                              Method method, const SlowDomain& omega,
                                              const EffectiveOptions& options = {});

/// Distribution of the level-1 fiber at the given slow values, as used by
/// the reduction (exposed for inspection and tests).
Distribution reduced_fiber_distribution(const ReactionNetwork& net, const ReductionPlan& plan,
                                        Method method, const IntVector& slow_values,
                                        const EffectiveOptions& options = {});

/// `s_from,s_to,rate,method` (one slow variable per s column; multi-slow
/// tuples are joined with ';').
void write_effective_generator_csv(std::ostream& os, const EffectiveGenerator& eff);
/// `s,reaction,alpha_eff`
void write_effective_propensities_csv(std::ostream& os, const EffectiveGenerator& eff);

}  // namespace mscme
