#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mscme/model.hpp"
#include "mscme/rng.hpp"

namespace mscme {

/// Piecewise-constant jump path. Entry k holds the state entered at
/// times[k] and the reaction that caused the jump (-1 for the initial epoch).
struct Trajectory {
  std::vector<std::string> species;
  std::vector<std::string> reaction_names;  // lookup for reaction_ids
  std::vector<double> times;
  std::vector<StateVector> states;
  std::vector<int> reaction_ids;
  /// Positions in a StateSpace when the path was sampled on one; empty otherwise.
  std::vector<std::size_t> indices;

  std::size_t epochs() const noexcept { return times.size(); }
  std::size_t jumps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
  /// State occupied at time t (t >= times.front()).
  const StateVector& state_at(double t) const;
};

/// Gillespie's direct method. Waiting time -log(u)/alpha_0, reaction j with
/// probability alpha_j/alpha_0 (scan of cumulative propensities against
/// u*alpha_0, lowest index wins on ties). Stops before the first epoch past
/// t_end or when alpha_0 = 0.
Trajectory simulate_ssa(const ReactionNetwork& net, const StateVector& x0, double t_end,
                        RandomSource& rng, double t0 = 0.0);

/// SSA on the constrained subsystem; the slow variables stay at `slow`.
/// Throws ConfigError if (slow, fast0) is not an admissible state.
Trajectory simulate_constrained(const ReactionNetwork& net, const VariableBasis& basis,
                                const IntVector& slow, const IntVector& fast0, double t_end,
                                RandomSource& rng);

struct ReactionFrequency {
  std::string name;
  std::size_t count = 0;
  double share = 0.0;
};

/// Keyed by reaction id; counts sum to the number of jumps.
std::map<int, ReactionFrequency> reaction_frequencies(const Trajectory& traj);

/// Time average of coefficients . x over [times.front(), t_end].
double time_average(const Trajectory& traj, const IntVector& coefficients, double t_end);

/// Header `t,<species...>,reaction`; times with 17 significant digits. With
/// a path id the column `path_id` is appended.
void write_trajectory_header(std::ostream& os, const std::vector<std::string>& species,
                             bool with_path_id = false);
void write_trajectory_rows(std::ostream& os, const Trajectory& traj, long path_id = -1);
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

std::string format_double(double v);

}  // namespace mscme
