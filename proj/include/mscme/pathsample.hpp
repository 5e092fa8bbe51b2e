#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mscme/generator.hpp"
#include "mscme/rng.hpp"
#include "mscme/simulate.hpp"

namespace mscme {

/// How rows of M^m are evaluated.
///  EigenDecomp:  spectral decomposition of a diagonal similarity of M,
///                entries summed over the spectrum.
///  CachedPowers: dense M^0..M^K stored, higher powers combined blockwise.
///  MatVec:       backward vectors (M^T)^m e_x1 by sparse products, with
///                checkpoints every ~sqrt(r) steps.
enum class PowerStrategy { Auto, EigenDecomp, CachedPowers, MatVec };

std::string_view to_string(PowerStrategy s);
PowerStrategy parse_power_strategy(std::string_view s);  // eigen | powers | matvec | auto

struct DominatingOptions {
  double inflation = 1.0;  // rho = inflation * max exit rate
  PowerStrategy strategy = PowerStrategy::Auto;
  std::size_t dense_limit = 2000;      // largest n for the dense strategies
  std::size_t max_cached_powers = 64;  // K for CachedPowers
  std::size_t memory_cap = std::size_t{1} << 30;  // bytes for stored powers
  double eigen_check = 1e-8;  // reconstruction tolerance, else fall back to powers
  // Per endpoint pair: use MatVec when the transition probability is below
  // 1e6 times the scaled reconstruction error of the eigen decomposition.
  bool eigen_query_check = true;
};

/// Uniformized chain: M = G / rho + I. With dp/dt = G p, M is column
/// stochastic and M(i, j) is the probability of the step j -> i.
class DominatingProcess {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  explicit DominatingProcess(const SparseGenerator& g, const DominatingOptions& options = {});

  double rho() const noexcept { return rho_; }
  std::size_t dimension() const noexcept { return n_; }
  const SpacePtr& space() const noexcept { return space_; }
  const Sparse& transition() const noexcept { return m_; }
  /// The strategy actually in use (Auto resolved, eigen fallback applied).
  PowerStrategy strategy() const noexcept { return strategy_; }
  /// True when EigenDecomp was requested but failed the reconstruction check.
  bool degraded() const noexcept { return degraded_; }
  /// ||V D V^-1 - B||_inf for the rescaled matrix B = D^-1 M D.
  double eigen_reconstruction_error() const noexcept { return eigen_error_; }
  double column_sum_error() const;

  /// [M^m]_{x1,x} for m = 0..count-1.
  std::vector<double> backward_series(std::size_t x1, std::size_t x, std::size_t count) const;
  /// Same with an explicit strategy: the prepared one or MatVec.
  std::vector<double> backward_series(std::size_t x1, std::size_t x, std::size_t count,
                                      PowerStrategy mode) const;
  /// Absolute error bound of eigen based entries [M^m]_{x1,x}; 0 otherwise.
  double eigen_noise(std::size_t x1, std::size_t x) const;
  bool eigen_query_check() const noexcept { return query_check_; }

  // Evaluation of [M^m]_{x1, x} for one fixed x1 while m walks downwards.
  class Walk {
   public:
    Walk(const DominatingProcess& dom, std::size_t x1, std::size_t top, PowerStrategy mode);
    /// Positions the walk at power m (m <= top). Cheapest when m decreases.
    void seek(std::size_t m);
    double at(std::size_t x) const;

   private:
    const DominatingProcess& dom_;
    PowerStrategy mode_;
    std::size_t x1_, top_, m_ = 0;
    std::size_t block_ = 0;      // checkpoint spacing
    std::size_t loaded_ = static_cast<std::size_t>(-1);  // block currently materialized
    // MatVec
    std::vector<std::vector<double>> checkpoints_;  // b_{c*block}
    std::vector<std::vector<double>> rows_;         // b_m for the loaded block
    // CachedPowers: u_c = e_x1^T (M^K)^c
    std::vector<Eigen::RowVectorXd> prefixes_;
    // EigenDecomp: lambda^(c*block) and lambda^j
    std::vector<Eigen::VectorXcd> lambda_hi_;
    std::vector<Eigen::VectorXcd> lambda_lo_;
    Eigen::VectorXcd weights_;  // V(x1, k) * lambda_k^m for the current m
    friend class DominatingProcess;
  };

 private:
  void prepare_eigen(const DominatingOptions& options);
  void prepare_powers(const DominatingOptions& options);
  std::vector<double> transpose_apply(const std::vector<double>& b) const;

  SpacePtr space_;
  std::size_t n_ = 0;
  double rho_ = 1.0;
  Sparse m_;
  PowerStrategy strategy_ = PowerStrategy::MatVec;
  bool degraded_ = false;
  double eigen_error_ = 0.0;
  bool query_check_ = true;
  // EigenDecomp, of B = D^-1 M D with D = diag(exp(log_scale_))
  std::vector<double> log_scale_;
  Eigen::VectorXcd lambda_;
  Eigen::MatrixXcd v_, vinv_;
  // CachedPowers: powers_[j] = M^j, j = 0..K
  std::vector<Eigen::MatrixXd> powers_;
};

DominatingProcess build_dominating(const SparseGenerator& g, double inflation = 1.0);

/// Smallest r with P(Poisson(mean) > r) < 2^-52.
std::size_t poisson_cutoff(double mean);

/// P(N_U = r | X(0) = x0, X(t) = x1) for r = 0..r_max.
struct EventCountPMF {
  double t = 0.0;
  std::size_t x0 = 0, x1 = 0;
  double rho = 0.0;
  std::size_t r_max = 0;
  std::vector<double> weights;  // r_max + 1 entries, sum 1
  double transition = 0.0;      // [exp(G t)]_{x1,x0}
  PowerStrategy strategy = PowerStrategy::MatVec;  // used for this endpoint pair

  /// Inverse-CDF draw.
  std::size_t sample(RandomSource& rng) const;
};

/// Throws NumericalError when x1 cannot be reached from x0 within t.
EventCountPMF event_count_pmf(const DominatingProcess& dom, double t, std::size_t x0,
                              std::size_t x1);

/// [exp(G t)]_{x1,x0}, the probability of being at x1 at time t after
/// starting from x0, by the uniformization series.
double transition_probability(const DominatingProcess& dom, double t, std::size_t x0,
                              std::size_t x1);
/// The whole distribution at time t started from x0.
std::vector<double> transition_vector(const DominatingProcess& dom, double t, std::size_t x0);

struct PathInfo {
  std::size_t events = 0;  // sampled r, including virtual events
  std::size_t jumps = 0;
  double seconds = 0.0;
};

/// Bridge from x0 at t0 to x1 at t1. Virtual (self) events are not emitted.
/// Throws NumericalError if the probabilities degrade beyond 1e-10.
Trajectory sample_conditioned_path(const DominatingProcess& dom, const EventCountPMF& pmf,
                                   double t0, RandomSource& rng, PathInfo* info = nullptr);
Trajectory sample_conditioned_path(const DominatingProcess& dom, std::size_t x0, std::size_t x1,
                                   double t0, double t1, RandomSource& rng,
                                   PathInfo* info = nullptr);

}  // namespace mscme
