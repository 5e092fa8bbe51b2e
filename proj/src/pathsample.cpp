#include "mscme/pathsample.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "mscme/error.hpp"

namespace mscme {

std::string_view to_string(PowerStrategy s) {
  switch (s) {
    case PowerStrategy::Auto: return "auto";
    case PowerStrategy::EigenDecomp: return "eigen";
    case PowerStrategy::CachedPowers: return "powers";
    case PowerStrategy::MatVec: return "matvec";
  }
  return "auto";
}

PowerStrategy parse_power_strategy(std::string_view s) {
  if (s == "auto") return PowerStrategy::Auto;
  if (s == "eigen") return PowerStrategy::EigenDecomp;
  if (s == "powers") return PowerStrategy::CachedPowers;
  if (s == "matvec") return PowerStrategy::MatVec;
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected eigen, powers or matvec)");
}

namespace {

constexpr double kTail = 0x1.0p-52;
constexpr double kClip = 1e-10;

double log_poisson(std::size_t k, double mean) {
  const double kd = static_cast<double>(k);
  return kd * std::log(mean) - mean - std::lgamma(kd + 1.0);
}

std::size_t block_for(std::size_t top) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(top) + 1.0))));
}

// Negative values within round-off are clipped, larger ones are an error.
double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string(what) + " is not finite; the power strategy has lost accuracy");
  if (v >= 0.0) return v;
  if (v >= -kClip) return 0.0;
  throw NumericalError(std::string(what) + " became negative (" + format_double(v) +
                       "); the power strategy has lost accuracy");
}

}  // namespace

std::size_t poisson_cutoff(double mean) {
  if (!(mean > 0.0)) return 0;
  const auto k_end =
      static_cast<std::size_t>(std::ceil(mean + 40.0 * std::sqrt(mean) + 50.0));
  double tail = 0.0;
  std::size_t answer = k_end;
  for (std::size_t k = k_end; k > 0; --k) {
    tail += std::exp(log_poisson(k, mean));  // now P(N >= k)
    if (tail >= kTail) break;
    answer = k - 1;
  }
  return answer;
}

DominatingProcess::DominatingProcess(const SparseGenerator& g, const DominatingOptions& options)
    : space_(g.space()), n_(g.dimension()) {
  if (n_ == 0) throw ConfigError("empty generator");
  if (!(options.inflation >= 1.0)) throw ConfigError("inflation must be at least 1");
  rho_ = options.inflation * g.max_exit_rate();
  if (!(rho_ > 0.0)) rho_ = 1.0;

  std::vector<Eigen::Triplet<double>> trip;
  const auto& gm = g.matrix();
  for (Eigen::Index j = 0; j < gm.outerSize(); ++j) {
    double diag = 1.0;
    for (SparseGenerator::Matrix::InnerIterator it(gm, j); it; ++it) {
      if (it.row() == j)
        diag += it.value() / rho_;
      else if (it.value() != 0.0)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value() / rho_);
    }
    if (diag < 0.0) diag = 0.0;  // rho equal to the exit rate, up to round-off
    trip.emplace_back(static_cast<int>(j), static_cast<int>(j), diag);
  }
  m_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  m_.setFromTriplets(trip.begin(), trip.end());
  m_.makeCompressed();

  PowerStrategy want = options.strategy;
  if (want == PowerStrategy::Auto)
    want = n_ <= options.dense_limit ? PowerStrategy::EigenDecomp : PowerStrategy::MatVec;
  if (want != PowerStrategy::MatVec && n_ > options.dense_limit)
    throw ConfigError("dense power strategies are limited to " + std::to_string(options.dense_limit) +
                      " states (use matvec)");
  strategy_ = want;
  query_check_ = options.eigen_query_check;
  if (want == PowerStrategy::EigenDecomp) prepare_eigen(options);
  if (strategy_ == PowerStrategy::CachedPowers) prepare_powers(options);
}

void DominatingProcess::prepare_eigen(const DominatingOptions& options) {
  // The stationary law of a truncated chain can span hundreds of orders of
  // magnitude, which leaves the eigenvectors of M numerically singular.
  // Decompose B = D^-1 M D instead, with d_j / d_i = sqrt(M(j,i) / M(i,j))
  // along edges present in both directions (d = sqrt(pi) for a reversible
  // chain, where B is symmetric).
  const auto nn = static_cast<Eigen::Index>(n_);
  log_scale_.assign(n_, std::numeric_limits<double>::quiet_NaN());
  const Eigen::MatrixXd dense(m_);
  std::vector<std::size_t> queue;
  for (std::size_t root = 0; root < n_; ++root) {
    if (!std::isnan(log_scale_[root])) continue;
    log_scale_[root] = 0.0;
    queue.assign(1, root);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const auto i = static_cast<Eigen::Index>(queue[q]);
      for (Sparse::InnerIterator it(m_, i); it; ++it) {
        const Eigen::Index j = it.row();
        if (j == i || !(it.value() > 0.0) || !(dense(i, j) > 0.0)) continue;
        if (!std::isnan(log_scale_[static_cast<std::size_t>(j)])) continue;
        log_scale_[static_cast<std::size_t>(j)] =
            log_scale_[static_cast<std::size_t>(i)] + 0.5 * (std::log(it.value()) - std::log(dense(i, j)));
        queue.push_back(static_cast<std::size_t>(j));
      }
    }
  }
  Eigen::MatrixXd b(nn, nn);
  for (Eigen::Index j = 0; j < nn; ++j)
    for (Eigen::Index i = 0; i < nn; ++i)
      b(i, j) = dense(i, j) == 0.0 ? 0.0
                                   : dense(i, j) * std::exp(log_scale_[static_cast<std::size_t>(j)] -
                                                            log_scale_[static_cast<std::size_t>(i)]);

  const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
  bool ok = true;
  if (asym <= 1e-13 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    const Eigen::MatrixXd sym = 0.5 * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    ok = es.info() == Eigen::Success;
    if (ok) {
      lambda_ = es.eigenvalues().cast<std::complex<double>>();
      v_ = es.eigenvectors().cast<std::complex<double>>();
      vinv_ = v_.transpose();
    }
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(b);
    ok = es.info() == Eigen::Success;
    if (ok) {
      lambda_ = es.eigenvalues();
      v_ = es.eigenvectors();
      vinv_ = Eigen::PartialPivLU<Eigen::MatrixXcd>(v_).inverse();
    }
  }
  eigen_error_ = std::numeric_limits<double>::infinity();
  if (ok) {
    const Eigen::MatrixXd back = (v_ * lambda_.asDiagonal() * vinv_).real();
    eigen_error_ = (back - b).cwiseAbs().rowwise().sum().maxCoeff();
    ok = std::isfinite(eigen_error_) && eigen_error_ < options.eigen_check;
  }
  if (!ok) {
    degraded_ = true;
    strategy_ = PowerStrategy::CachedPowers;
    lambda_.resize(0);
    v_.resize(0, 0);
    vinv_.resize(0, 0);
    log_scale_.clear();
  }
}

void DominatingProcess::prepare_powers(const DominatingOptions& options) {
  const std::size_t bytes = n_ * n_ * sizeof(double);
  std::size_t k = std::max<std::size_t>(1, options.max_cached_powers);
  if (bytes > 0) k = std::min(k, std::max<std::size_t>(2, options.memory_cap / bytes) - 1);
  powers_.reserve(k + 1);
  powers_.push_back(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_)));
  for (std::size_t j = 1; j <= k; ++j) powers_.push_back(m_ * powers_.back());
}

double DominatingProcess::column_sum_error() const {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m_.outerSize(); ++j) {
    double s = 0.0;
    for (Sparse::InnerIterator it(m_, j); it; ++it) s += it.value();
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::vector<double> DominatingProcess::transpose_apply(const std::vector<double>& b) const {
  std::vector<double> out(n_, 0.0);
  for (Eigen::Index x = 0; x < m_.outerSize(); ++x) {
    double s = 0.0;
    for (Sparse::InnerIterator it(m_, x); it; ++it) s += it.value() * b[static_cast<std::size_t>(it.row())];
    out[static_cast<std::size_t>(x)] = s;
  }
  return out;
}

std::vector<double> DominatingProcess::backward_series(std::size_t x1, std::size_t x,
                                                       std::size_t count) const {
  return backward_series(x1, x, count, strategy_);
}

double DominatingProcess::eigen_noise(std::size_t x1, std::size_t x) const {
  if (strategy_ != PowerStrategy::EigenDecomp) return 0.0;
  return std::max(eigen_error_, std::numeric_limits<double>::epsilon()) * std::exp(log_scale_[x1] - log_scale_[x]);
}

std::vector<double> DominatingProcess::backward_series(std::size_t x1, std::size_t x, std::size_t count,
                                                       PowerStrategy mode) const {
  if (x1 >= n_ || x >= n_) throw ConfigError("state index out of range");
  if (mode != strategy_ && mode != PowerStrategy::MatVec) throw ConfigError("power strategy not prepared");
  std::vector<double> out(count, 0.0);
  if (count == 0) return out;
  switch (mode) {
    case PowerStrategy::MatVec: {
      std::vector<double> b(n_, 0.0);
      b[x1] = 1.0;
      for (std::size_t m = 0; m < count; ++m) {
        out[m] = b[x];
        if (m + 1 < count) b = transpose_apply(b);
      }
      break;
    }
    case PowerStrategy::CachedPowers: {
      const std::size_t k = powers_.size() - 1;
      Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n_));
      u(static_cast<Eigen::Index>(x1)) = 1.0;
      const auto xi = static_cast<Eigen::Index>(x);
      for (std::size_t m = 0; m < count; ++m) {
        const std::size_t j = m % k;
        if (m > 0 && j == 0) u = u * powers_[k];
        out[m] = u.dot(powers_[j].col(xi));
      }
      break;
    }
    default: {
      const auto xi = static_cast<Eigen::Index>(x);
      const double ratio = std::exp(log_scale_[x1] - log_scale_[x]);
      Eigen::VectorXcd c = ratio * v_.row(static_cast<Eigen::Index>(x1)).transpose().cwiseProduct(vinv_.col(xi));
      for (std::size_t m = 0; m < count; ++m) {
        out[m] = c.sum().real();
        c = c.cwiseProduct(lambda_);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Walk

DominatingProcess::Walk::Walk(const DominatingProcess& dom, std::size_t x1, std::size_t top,
                              PowerStrategy mode)
    : dom_(dom), mode_(mode), x1_(x1), top_(top) {
  if (x1 >= dom.n_) throw ConfigError("state index out of range");
  if (mode != dom.strategy_ && mode != PowerStrategy::MatVec) throw ConfigError("power strategy not prepared");
  const std::size_t n = dom.n_;
  switch (mode_) {
    case PowerStrategy::MatVec: {
      block_ = block_for(top);
      std::vector<double> b(n, 0.0);
      b[x1] = 1.0;
      for (std::size_t m = 0; m <= top; ++m) {
        if (m % block_ == 0) checkpoints_.push_back(b);
        if (m < top) b = dom.transpose_apply(b);
      }
      break;
    }
    case PowerStrategy::CachedPowers: {
      block_ = dom.powers_.size() - 1;
      Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n));
      u(static_cast<Eigen::Index>(x1)) = 1.0;
      for (std::size_t c = 0; c * block_ <= top; ++c) {
        prefixes_.push_back(u);
        if ((c + 1) * block_ <= top) u = u * dom.powers_[block_];
      }
      break;
    }
    default: {
      block_ = block_for(top);
      const Eigen::Index nn = static_cast<Eigen::Index>(n);
      Eigen::VectorXcd p = Eigen::VectorXcd::Ones(nn);
      for (std::size_t j = 0; j < block_; ++j) {
        lambda_lo_.push_back(p);
        p = p.cwiseProduct(dom.lambda_);
      }
      const Eigen::VectorXcd step = p;  // lambda^block
      Eigen::VectorXcd h = Eigen::VectorXcd::Ones(nn);
      for (std::size_t c = 0; c * block_ <= top; ++c) {
        lambda_hi_.push_back(h);
        h = h.cwiseProduct(step);
      }
      break;
    }
  }
  seek(top);
}

void DominatingProcess::Walk::seek(std::size_t m) {
  if (m > top_) throw ConfigError("walk position beyond its top power");
  m_ = m;
  const std::size_t c = m / block_;
  const std::size_t j = m % block_;
  switch (mode_) {
    case PowerStrategy::MatVec: {
      if (loaded_ != c) {
        rows_.clear();
        std::vector<double> b = checkpoints_[c];
        const std::size_t end = std::min(top_, (c + 1) * block_ - 1);
        for (std::size_t q = c * block_; q <= end; ++q) {
          rows_.push_back(b);
          if (q < end) b = dom_.transpose_apply(b);
        }
        loaded_ = c;
      }
      break;
    }
    case PowerStrategy::CachedPowers:
      break;
    default:
      weights_ = dom_.v_.row(static_cast<Eigen::Index>(x1_)).transpose()
                     .cwiseProduct(lambda_hi_[c])
                     .cwiseProduct(lambda_lo_[j]);
      break;
  }
}

double DominatingProcess::Walk::at(std::size_t x) const {
  const std::size_t c = m_ / block_;
  const std::size_t j = m_ % block_;
  switch (mode_) {
    case PowerStrategy::MatVec:
      return rows_[j][x];
    case PowerStrategy::CachedPowers:
      return prefixes_[c].dot(dom_.powers_[j].col(static_cast<Eigen::Index>(x)));
    default:
      return weights_.cwiseProduct(dom_.vinv_.col(static_cast<Eigen::Index>(x))).sum().real() *
             std::exp(dom_.log_scale_[x1_] - dom_.log_scale_[x]);
  }
}

DominatingProcess build_dominating(const SparseGenerator& g, double inflation) {
  DominatingOptions o;
  o.inflation = inflation;
  return DominatingProcess(g, o);
}

// ---------------------------------------------------------------------------

std::size_t EventCountPMF::sample(RandomSource& rng) const {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    cum += weights[r];
    if (u < cum) return r;
  }
  // Round-off left u above the last partial sum: take the last supported r.
  for (std::size_t r = weights.size(); r-- > 0;)
    if (weights[r] > 0.0) return r;
  return 0;
}

namespace {

struct Series {
  PowerStrategy strategy = PowerStrategy::MatVec;
  std::size_t r_max = 0;
  std::vector<double> terms;  // Poisson(r) * [M^r]_{x1,x0}
  double total = 0.0;
};

Series uniformization_series(const DominatingProcess& dom, double t, std::size_t x0, std::size_t x1) {
  if (!(t >= 0.0)) throw ConfigError("time must be nonnegative");
  Series s;
  const double mean = dom.rho() * t;
  s.r_max = poisson_cutoff(mean);
  auto sum = [&](PowerStrategy mode) {
    const auto b = dom.backward_series(x1, x0, s.r_max + 1, mode);
    // Eigen entries are exact only up to their absolute noise.
    const double clip = mode == PowerStrategy::EigenDecomp ? 1e3 * dom.eigen_noise(x1, x0) : 0.0;
    s.strategy = mode;
    s.terms.assign(s.r_max + 1, 0.0);
    s.total = 0.0;
    for (std::size_t r = 0; r <= s.r_max; ++r) {
      const double w = mean > 0.0 ? std::exp(log_poisson(r, mean)) : (r == 0 ? 1.0 : 0.0);
      const double v = b[r] < 0.0 && b[r] >= -clip ? 0.0 : b[r];
      s.terms[r] = w * checked(v, "matrix power entry");
      s.total += s.terms[r];
    }
  };
  if (dom.strategy() != PowerStrategy::EigenDecomp || !dom.eigen_query_check()) {
    sum(dom.strategy());
    return s;
  }
  // Rare transitions sit below the eigen round-off and need exact powers.
  bool reliable = true;
  try {
    sum(PowerStrategy::EigenDecomp);
    reliable = s.total >= 1e6 * dom.eigen_noise(x1, x0);
  } catch (const NumericalError&) {
    reliable = false;
  }
  if (!reliable) sum(PowerStrategy::MatVec);
  return s;
}

}  // namespace

EventCountPMF event_count_pmf(const DominatingProcess& dom, double t, std::size_t x0, std::size_t x1) {
  if (!(t > 0.0)) throw ConfigError("bridge duration must be positive");
  Series s = uniformization_series(dom, t, x0, x1);
  if (!(s.total > 0.0))
    throw NumericalError("state " + std::to_string(x1) + " cannot be reached from state " +
                         std::to_string(x0) + " within time " + format_double(t));
  EventCountPMF pmf;
  pmf.t = t;
  pmf.x0 = x0;
  pmf.x1 = x1;
  pmf.rho = dom.rho();
  pmf.r_max = s.r_max;
  pmf.transition = s.total;
  pmf.strategy = s.strategy;
  pmf.weights = std::move(s.terms);
  for (auto& w : pmf.weights) w /= s.total;
  return pmf;
}

double transition_probability(const DominatingProcess& dom, double t, std::size_t x0, std::size_t x1) {
  if (x0 >= dom.dimension() || x1 >= dom.dimension()) throw ConfigError("state index out of range");
  if (t == 0.0) return x0 == x1 ? 1.0 : 0.0;
  return uniformization_series(dom, t, x0, x1).total;
}

std::vector<double> transition_vector(const DominatingProcess& dom, double t, std::size_t x0) {
  const std::size_t n = dom.dimension();
  if (x0 >= n) throw ConfigError("state index out of range");
  if (!(t >= 0.0)) throw ConfigError("time must be nonnegative");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  p(static_cast<Eigen::Index>(x0)) = 1.0;
  if (t == 0.0) return {p.data(), p.data() + p.size()};
  const double mean = dom.rho() * t;
  const std::size_t r_max = poisson_cutoff(mean);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r <= r_max; ++r) {
    acc += std::exp(log_poisson(r, mean)) * p;
    if (r < r_max) p = dom.transition() * p;
  }
  return {acc.data(), acc.data() + acc.size()};
}

Trajectory sample_conditioned_path(const DominatingProcess& dom, const EventCountPMF& pmf, double t0,
                                   RandomSource& rng, PathInfo* info) {
  const auto start = std::chrono::steady_clock::now();
  const auto& space = dom.space();
  Trajectory traj;
  if (space) traj.species = space->species();
  auto emit = [&](double t, std::size_t idx) {
    traj.times.push_back(t);
    traj.indices.push_back(idx);
    traj.reaction_ids.push_back(-1);
    if (space)
      traj.states.push_back(space->vector(idx));
    else
      traj.states.push_back({static_cast<Count>(idx)});
  };
  emit(t0, pmf.x0);

  const std::size_t r = pmf.sample(rng);
  std::vector<double> times(r);
  for (auto& s : times) s = t0 + pmf.t * rng.uniform();
  std::sort(times.begin(), times.end());

  const auto& m = dom.transition();
  std::size_t y = pmf.x0;
  if (r > 0) {
    DominatingProcess::Walk walk(dom, pmf.x1, r - 1, pmf.strategy);
    std::vector<std::pair<std::size_t, double>> cand;
    for (std::size_t j = 1; j <= r; ++j) {
      walk.seek(r - j);
      cand.clear();
      double total = 0.0;
      for (DominatingProcess::Sparse::InnerIterator it(m, static_cast<Eigen::Index>(y)); it; ++it) {
        if (!(it.value() > 0.0)) continue;
        const auto x = static_cast<std::size_t>(it.row());
        const double w = it.value() * walk.at(x);
        cand.emplace_back(x, w);
        total += w;
      }
      if (!(total > 0.0))
        throw NumericalError("bridge probabilities vanished at event " + std::to_string(j));
      double kept = 0.0;
      for (auto& [x, w] : cand) {
        w = checked(w / total, "bridge step probability");
        kept += w;
      }
      if (!(kept > 0.0))
        throw NumericalError("bridge probabilities vanished at event " + std::to_string(j));
      const double u = rng.uniform() * kept;
      double cum = 0.0;
      std::size_t next = cand.back().first;
      for (const auto& [x, w] : cand) {
        if (!(w > 0.0)) continue;
        next = x;
        cum += w;
        if (u < cum) break;
      }
      if (next != y) emit(times[j - 1], next);
      y = next;
    }
  }
  if (y != pmf.x1) throw NumericalError("bridge did not end at the requested state");
  if (info) {
    info->events = r;
    info->jumps = traj.jumps();
    info->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return traj;
}

Trajectory sample_conditioned_path(const DominatingProcess& dom, std::size_t x0, std::size_t x1,
                                   double t0, double t1, RandomSource& rng, PathInfo* info) {
  if (!(t1 > t0)) throw ConfigError("t1 must exceed t0");
  const EventCountPMF pmf = event_count_pmf(dom, t1 - t0, x0, x1);
  return sample_conditioned_path(dom, pmf, t0, rng, info);
}

}  // namespace mscme
