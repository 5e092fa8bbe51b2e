#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mscme/model.hpp"

namespace mscme {

/// Finite set of integer states in lexicographic order (species order),
/// stored as one flat row-major array. Lookup is a binary search.
class StateSpace {
 public:
  StateSpace(std::vector<std::string> species, std::vector<Count> flat,
             std::vector<LinearBound> description = {});

  /// Every integer point of the box lo..hi (inclusive), lexicographic.
  static StateSpace box(std::vector<std::string> names, const IntVector& lo, const IntVector& hi);

  std::size_t size() const noexcept { return size_; }
  std::size_t dimension() const noexcept { return species_.size(); }
  const std::vector<std::string>& species() const noexcept { return species_; }
  /// Bounds and constraints the space was enumerated from.
  const std::vector<LinearBound>& description() const noexcept { return description_; }

  std::span<const Count> state(std::size_t i) const {
    return {flat_.data() + i * dimension(), dimension()};
  }
  StateVector vector(std::size_t i) const {
    auto s = state(i);
    return {s.begin(), s.end()};
  }
  /// Position of x, or npos.
  std::size_t find(std::span<const Count> x) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> species_;
  std::vector<Count> flat_;
  std::size_t size_ = 0;
  std::vector<LinearBound> description_;
};

using SpacePtr = std::shared_ptr<const StateSpace>;

/// All nonnegative integer states satisfying every bound and every
/// constraint. Equality constraints eliminate the last species they involve;
/// rows with nonnegative coefficients cap the remaining species. Throws
/// ConfigError for an empty result or an unbounded species.
StateSpace enumerate_states(const std::vector<std::string>& species,
                            std::span<const LinearBound> bounds,
                            std::span<const LinearBound> constraints = {});
StateSpace enumerate_states(const ReactionNetwork& net, std::span<const LinearBound> bounds,
                            std::span<const LinearBound> constraints = {});

/// Equality constraints slow_k . x = values[k] for every slow variable.
std::vector<LinearBound> slow_constraints(const VariableBasis& basis, const IntVector& values);

/// Generator of dp/dt = G p on a StateSpace: entry (i, j), i != j, is the
/// rate of j -> i and every column sums to zero.
class SparseGenerator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
  struct Entry {
    std::size_t row, col;
    double rate;
  };

  SparseGenerator() = default;
  /// Off-diagonal transitions (to, from, rate); duplicates are summed,
  /// self-loops ignored, the diagonal is minus the column sum.
  SparseGenerator(SpacePtr space, std::size_t n, std::span<const Entry> transitions);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const Matrix& matrix() const noexcept { return matrix_; }
  const SpacePtr& space() const noexcept { return space_; }
  double max_exit_rate() const;
  /// max_j |sum_i G_ij| / max(1, max |G_ij| in column j).
  double column_sum_error() const;
  std::vector<Entry> entries() const;
  Eigen::MatrixXd dense() const;

 private:
  SpacePtr space_;
  Matrix matrix_;
};

/// Transitions x -> x + nu_r with rate alpha_r(x) whose target lies inside
/// the space. Transitions leaving the space are dropped from both the
/// off-diagonal and the diagonal (reflecting truncation).
SparseGenerator assemble_generator(const ReactionNetwork& net, SpacePtr space);

struct Distribution {
  SpacePtr space;
  std::vector<double> probabilities;
};

struct StationaryOptions {
  double shift_factor = 1e-10;  // sigma = shift_factor * max exit rate
  double tolerance = 1e-12;     // on ||G p||_inf / max |G|
  double accept = 1e-10;        // hard limit for the final residual
  int max_iterations = 500;
  double clip = 1e-12;          // negatives down to -clip are set to 0
  bool check_ergodic = true;
};

struct StationaryReport {
  int iterations = 0;
  double residual = 0.0;  // relative to max |G|
  bool dense_fallback = false;
};

/// Right null vector of G by shifted inverse iteration with a sparse LU of
/// G - sigma I, sigma > 0 small. Throws NumericalError for reducible chains
/// (more than one closed class), non-convergence, or large negative entries.
Distribution stationary_distribution(const SparseGenerator& g,
                                     const StationaryOptions& options = {},
                                     StationaryReport* report = nullptr);

/// Direct dense least-squares solve of [G; 1^T] p = [0; 1]; n <= 2000.
/// Throws NumericalError when the null space is not one dimensional.
Distribution dense_null_space(const SparseGenerator& g);

/// Number of closed communicating classes (1 for an ergodic chain).
std::size_t closed_class_count(const SparseGenerator& g);

struct PropensityShare {
  std::vector<double> field;          // per state
  std::optional<double> expectation;  // sum field * pi
};

/// (sum of alpha_r over the fast set) / alpha_0 per state, 0 where alpha_0 = 0.
PropensityShare fast_propensity_share(const ReactionNetwork& net,
                                      std::span<const std::size_t> fast_set,
                                      const StateSpace& space,
                                      const Distribution* pi = nullptr);

/// `state_index,<species...>,probability`
void write_distribution_csv(std::ostream& os, const Distribution& d);
/// Reads the format above; states are re-sorted into a fresh StateSpace.
Distribution read_distribution_csv(std::istream& is);
/// `row,col,rate`, off-diagonal and diagonal entries.
void write_generator_csv(std::ostream& os, const SparseGenerator& g);

}  // namespace mscme
