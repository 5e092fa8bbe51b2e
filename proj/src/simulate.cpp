#include "mscme/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mscme/error.hpp"

namespace mscme {

const StateVector& Trajectory::state_at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) throw ConfigError("time before trajectory start");
  return states[static_cast<std::size_t>(it - times.begin()) - 1];
}

Trajectory simulate_ssa(const ReactionNetwork& net, const StateVector& x0, double t_end,
                        RandomSource& rng, double t0) {
  if (x0.size() != net.dimension()) throw ConfigError("initial state has wrong dimension");
  if (std::any_of(x0.begin(), x0.end(), [](Count c) { return c < 0; }))
    throw ConfigError("initial state has negative counts");
  if (!(t_end > t0)) throw ConfigError("t_end must exceed the start time");

  Trajectory traj;
  traj.species = net.species();
  for (const auto& r : net.reactions()) traj.reaction_names.push_back(r.name);
  traj.times.push_back(t0);
  traj.states.push_back(x0);
  traj.reaction_ids.push_back(-1);

  std::vector<double> alpha(net.size());
  StateVector x = x0;
  double t = t0;
  for (;;) {
    const double a0 = net.propensities(x, alpha);
    if (!(a0 > 0.0)) break;
    t += -std::log(rng.uniform_positive()) / a0;
    if (t > t_end) break;
    const double threshold = rng.uniform() * a0;
    double cum = 0.0;
    std::size_t j = net.size();
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < net.size(); ++k) {
      if (alpha[k] > 0.0) last_positive = k;
      cum += alpha[k];
      if (cum > threshold) {
        j = k;
        break;
      }
    }
    if (j == net.size()) j = last_positive;  // rounding in the cumulative sum
    const auto& nu = net.reaction(j).stoichiometry;
    for (std::size_t s = 0; s < x.size(); ++s) x[s] += nu[s];
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.reaction_ids.push_back(static_cast<int>(j));
  }
  return traj;
}

Trajectory simulate_constrained(const ReactionNetwork& net, const VariableBasis& basis,
                                const IntVector& slow, const IntVector& fast0, double t_end,
                                RandomSource& rng) {
  StateVector x0 = basis.compose(slow, fast0);
  if (std::any_of(x0.begin(), x0.end(), [](Count c) { return c < 0; }))
    throw ConfigError("slow/fast values map to a state with negative counts");
  // Unmerged so reaction ids keep the original names.
  const ReactionNetwork constrained = derive_constrained_subsystem(net, basis, false);
  return simulate_ssa(constrained, x0, t_end, rng);
}

std::map<int, ReactionFrequency> reaction_frequencies(const Trajectory& traj) {
  std::map<int, ReactionFrequency> out;
  const std::size_t jumps = traj.jumps();
  for (std::size_t k = 1; k < traj.reaction_ids.size(); ++k) {
    const int id = traj.reaction_ids[k];
    auto& f = out[id];
    if (f.count == 0 && id >= 0 && static_cast<std::size_t>(id) < traj.reaction_names.size())
      f.name = traj.reaction_names[static_cast<std::size_t>(id)];
    ++f.count;
  }
  for (auto& [id, f] : out) f.share = static_cast<double>(f.count) / static_cast<double>(jumps);
  return out;
}

double time_average(const Trajectory& traj, const IntVector& coefficients, double t_end) {
  if (traj.times.empty()) throw ConfigError("empty trajectory");
  const double start = traj.times.front();
  if (!(t_end > start)) throw ConfigError("averaging window is empty");
  double acc = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double a = traj.times[k];
    if (a >= t_end) break;
    const double b = k + 1 < traj.times.size() ? std::min(traj.times[k + 1], t_end) : t_end;
    acc += static_cast<double>(dot(coefficients, traj.states[k])) * (b - a);
  }
  return acc / (t_end - start);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_header(std::ostream& os, const std::vector<std::string>& species,
                             bool with_path_id) {
  os << "t";
  for (const auto& s : species) os << ',' << s;
  os << ",reaction";
  if (with_path_id) os << ",path_id";
  os << '\n';
}

void write_trajectory_rows(std::ostream& os, const Trajectory& traj, long path_id) {
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_double(traj.times[k]);
    for (Count c : traj.states[k]) os << ',' << c;
    os << ',';
    const int id = traj.reaction_ids[k];
    if (id >= 0 && static_cast<std::size_t>(id) < traj.reaction_names.size())
      os << traj.reaction_names[static_cast<std::size_t>(id)];
    if (path_id >= 0) os << ',' << path_id;
    os << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  write_trajectory_header(os, traj.species);
  write_trajectory_rows(os, traj);
}

}  // namespace mscme
