#include "mscme/generator.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mscme/error.hpp"
#include "mscme/simulate.hpp"

namespace mscme {

namespace {

constexpr Count kUnbounded = std::numeric_limits<Count>::max();

Count floor_div(Count a, Count b) {
  Count q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Count ceil_div(Count a, Count b) { return -floor_div(-a, b); }

bool lex_less(std::span<const Count> a, std::span<const Count> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct Row {
  IntVector c;
  Count lo, hi;
  bool equality;
  bool nonnegative;
  int last;  // last species with nonzero coefficient, -1 if none
};

class Enumerator {
 public:
  Enumerator(std::size_t dim, std::vector<Row> rows, IntVector lo, IntVector hi,
             const std::vector<std::string>& names)
      : dim_(dim), rows_(std::move(rows)), lo_(std::move(lo)), hi_(std::move(hi)),
        names_(names), partial_(rows_.size(), 0), x_(dim, 0) {}

  std::vector<Count> run() {
    for (const auto& r : rows_)
      if (r.last < 0 && (r.lo > 0 || r.hi < 0)) return {};
    if (dim_ == 0) return {};
    visit(0);
    return std::move(out_);
  }

 private:
  void visit(std::size_t i) {
    Count lo = lo_[i], hi = hi_[i];
    bool determined = false;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const Row& r = rows_[k];
      const Count c = r.c[i];
      if (c == 0) continue;
      if (r.last == static_cast<int>(i)) {
        // Every other species of this row is fixed: solve or bound directly.
        const Count rem_lo = r.lo - partial_[k];
        const Count rem_hi = r.hi == kUnbounded ? kUnbounded : r.hi - partial_[k];
        if (r.equality) {
          if (rem_lo % c != 0) return;
          const Count v = rem_lo / c;
          if (determined && v != lo) return;
          lo = std::max(lo, v);
          hi = std::min(hi, v);
          determined = true;
        } else if (c > 0) {
          lo = std::max(lo, ceil_div(rem_lo, c));
          if (r.hi != kUnbounded) hi = std::min(hi, floor_div(rem_hi, c));
        } else {
          if (r.hi != kUnbounded) lo = std::max(lo, ceil_div(rem_hi, c));
          hi = std::min(hi, floor_div(rem_lo, c));
        }
      } else if (r.nonnegative && c > 0 && r.hi != kUnbounded) {
        // Remaining species contribute >= 0.
        hi = std::min(hi, floor_div(r.hi - partial_[k], c));
      }
    }
    if (lo > hi) return;
    if (hi == kUnbounded)
      throw ConfigError("state space is unbounded in species '" + names_[i] + "'");
    for (Count v = lo; v <= hi; ++v) {
      x_[i] = v;
      bool ok = true;
      for (std::size_t k = 0; k < rows_.size(); ++k) {
        partial_[k] += rows_[k].c[i] * v;
        if (rows_[k].last == static_cast<int>(i) &&
            (partial_[k] < rows_[k].lo || partial_[k] > rows_[k].hi))
          ok = false;
      }
      if (ok) {
        if (i + 1 == dim_)
          out_.insert(out_.end(), x_.begin(), x_.end());
        else
          visit(i + 1);
      }
      for (std::size_t k = 0; k < rows_.size(); ++k) partial_[k] -= rows_[k].c[i] * v;
    }
  }

  std::size_t dim_;
  std::vector<Row> rows_;
  IntVector lo_, hi_;
  const std::vector<std::string>& names_;
  IntVector partial_;
  StateVector x_;
  std::vector<Count> out_;
};

}  // namespace

StateSpace::StateSpace(std::vector<std::string> species, std::vector<Count> flat,
                       std::vector<LinearBound> description)
    : species_(std::move(species)), flat_(std::move(flat)), description_(std::move(description)) {
  const std::size_t d = species_.size();
  if (d == 0) throw ConfigError("state space needs at least one coordinate");
  if (flat_.size() % d != 0) throw ConfigError("state array size is not a multiple of dimension");
  size_ = flat_.size() / d;
  for (std::size_t i = 1; i < size_; ++i)
    if (!lex_less(state(i - 1), state(i)))
      throw ConfigError("states must be strictly increasing in lexicographic order");
}

StateSpace StateSpace::box(std::vector<std::string> names, const IntVector& lo, const IntVector& hi) {
  const std::size_t d = names.size();
  if (lo.size() != d || hi.size() != d) throw ConfigError("box bounds have wrong dimension");
  std::vector<Count> flat;
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (lo[k] > hi[k]) throw ConfigError("empty box");
    total *= static_cast<std::size_t>(hi[k] - lo[k] + 1);
  }
  flat.reserve(total * d);
  StateVector x = lo;
  for (std::size_t n = 0; n < total; ++n) {
    flat.insert(flat.end(), x.begin(), x.end());
    for (std::size_t k = d; k-- > 0;) {
      if (++x[k] <= hi[k]) break;
      x[k] = lo[k];
    }
  }
  std::vector<LinearBound> desc;
  for (std::size_t k = 0; k < d; ++k) {
    IntVector c(d, 0);
    c[k] = 1;
    desc.push_back({names[k], c, lo[k], hi[k]});
  }
  return StateSpace(std::move(names), std::move(flat), std::move(desc));
}

std::size_t StateSpace::find(std::span<const Count> x) const {
  if (x.size() != dimension()) return npos;
  std::size_t lo = 0, hi = size_;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (lex_less(state(mid), x))
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo < size_ && std::equal(x.begin(), x.end(), state(lo).begin())) return lo;
  return npos;
}

StateSpace enumerate_states(const std::vector<std::string>& species,
                            std::span<const LinearBound> bounds,
                            std::span<const LinearBound> constraints) {
  const std::size_t d = species.size();
  IntVector lo(d, 0), hi(d, kUnbounded);
  std::vector<Row> rows;
  std::vector<LinearBound> desc;
  auto add = [&](const LinearBound& b, bool equality) {
    if (b.coefficients.size() != d)
      throw ConfigError("bound '" + b.name + "' has wrong dimension");
    desc.push_back(b);
    int nonzero = 0, last = -1;
    bool nonneg = true;
    for (std::size_t i = 0; i < d; ++i) {
      if (b.coefficients[i] != 0) {
        ++nonzero;
        last = static_cast<int>(i);
      }
      if (b.coefficients[i] < 0) nonneg = false;
    }
    const Count blo = b.lo, bhi = equality ? b.lo : b.hi;
    if (nonzero == 1 && !equality) {
      const auto i = static_cast<std::size_t>(last);
      const Count c = b.coefficients[i];
      if (c > 0) {
        lo[i] = std::max(lo[i], ceil_div(blo, c));
        if (bhi != kUnbounded) hi[i] = std::min(hi[i], floor_div(bhi, c));
      } else {
        if (bhi != kUnbounded) lo[i] = std::max(lo[i], ceil_div(bhi, c));
        hi[i] = std::min(hi[i], floor_div(blo, c));
      }
      return;
    }
    rows.push_back({b.coefficients, blo, bhi, equality, nonneg, last});
  };
  for (const auto& b : bounds) add(b, false);
  for (const auto& c : constraints) add(c, true);
  Enumerator e(d, std::move(rows), lo, hi, species);
  std::vector<Count> flat = e.run();
  if (flat.empty()) throw ConfigError("empty state space");
  return StateSpace(species, std::move(flat), std::move(desc));
}

StateSpace enumerate_states(const ReactionNetwork& net, std::span<const LinearBound> bounds,
                            std::span<const LinearBound> constraints) {
  return enumerate_states(net.species(), bounds, constraints);
}

std::vector<LinearBound> slow_constraints(const VariableBasis& basis, const IntVector& values) {
  if (values.size() != basis.slow().size()) throw ConfigError("wrong number of slow values");
  std::vector<LinearBound> out;
  for (std::size_t k = 0; k < values.size(); ++k)
    out.push_back({basis.slow()[k].name, basis.slow()[k].coefficients, values[k], values[k]});
  return out;
}

SparseGenerator::SparseGenerator(SpacePtr space, std::size_t n, std::span<const Entry> transitions)
    : space_(std::move(space)) {
  if (space_ && space_->size() != n) throw ConfigError("generator size does not match its space");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(transitions.size() + n);
  std::vector<double> exit(n, 0.0);
  for (const auto& e : transitions) {
    if (e.row >= n || e.col >= n) throw ConfigError("generator entry out of range");
    if (e.row == e.col || e.rate == 0.0) continue;
    if (e.rate < 0.0) throw ConfigError("negative transition rate");
    trip.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.rate);
    exit[e.col] += e.rate;
  }
  for (std::size_t j = 0; j < n; ++j)
    trip.emplace_back(static_cast<int>(j), static_cast<int>(j), -exit[j]);
  matrix_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  matrix_.setFromTriplets(trip.begin(), trip.end());
  matrix_.makeCompressed();
  // setFromTriplets sums duplicates, so recompute the diagonal exactly from
  // the compressed off-diagonal entries.
  for (Eigen::Index j = 0; j < matrix_.outerSize(); ++j) {
    double off = 0.0;
    double* diag = nullptr;
    for (Matrix::InnerIterator it(matrix_, j); it; ++it) {
      if (it.row() == j)
        diag = &it.valueRef();
      else
        off += it.value();
    }
    if (diag) *diag = -off;
  }
}

double SparseGenerator::max_exit_rate() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < matrix_.outerSize(); ++j)
    m = std::max(m, -matrix_.coeff(j, j));
  return m;
}

double SparseGenerator::column_sum_error() const {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < matrix_.outerSize(); ++j) {
    double sum = 0.0, mag = 0.0;
    for (Matrix::InnerIterator it(matrix_, j); it; ++it) {
      sum += it.value();
      mag = std::max(mag, std::abs(it.value()));
    }
    worst = std::max(worst, std::abs(sum) / std::max(1.0, mag));
  }
  return worst;
}

std::vector<SparseGenerator::Entry> SparseGenerator::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (Eigen::Index j = 0; j < matrix_.outerSize(); ++j)
    for (Matrix::InnerIterator it(matrix_, j); it; ++it)
      out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(j), it.value()});
  return out;
}

Eigen::MatrixXd SparseGenerator::dense() const { return Eigen::MatrixXd(matrix_); }

SparseGenerator assemble_generator(const ReactionNetwork& net, SpacePtr space) {
  if (!space || space->size() == 0) throw ConfigError("cannot assemble on an empty state space");
  if (space->dimension() != net.dimension())
    throw ConfigError("state space dimension does not match the network");
  const std::size_t n = space->size();
  std::vector<SparseGenerator::Entry> trans;
  trans.reserve(n * net.size());
  std::vector<double> alpha(net.size());
  StateVector target(net.dimension());
  for (std::size_t j = 0; j < n; ++j) {
    auto x = space->state(j);
    net.propensities(x, alpha);
    for (std::size_t r = 0; r < net.size(); ++r) {
      if (!(alpha[r] > 0.0)) continue;
      const auto& nu = net.reaction(r).stoichiometry;
      for (std::size_t s = 0; s < target.size(); ++s) target[s] = x[s] + nu[s];
      const std::size_t i = space->find(target);
      if (i == StateSpace::npos) continue;
      trans.push_back({i, j, alpha[r]});
    }
  }
  return SparseGenerator(space, n, trans);
}

std::size_t closed_class_count(const SparseGenerator& g) {
  // Iterative Tarjan over edges j -> i for positive off-diagonal G(i, j).
  const auto& m = g.matrix();
  const auto n = static_cast<std::size_t>(m.rows());
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kNone), low(n, 0), comp(n, kNone);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::size_t next_index = 0, ncomp = 0;
  struct Frame {
    std::size_t v;
    SparseGenerator::Matrix::InnerIterator it;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kNone) continue;
    call.push_back({root, SparseGenerator::Matrix::InnerIterator(m, static_cast<Eigen::Index>(root))});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& f = call.back();
      bool descended = false;
      for (; f.it; ++f.it) {
        const auto w = static_cast<std::size_t>(f.it.row());
        if (w == f.v || !(f.it.value() > 0.0)) continue;
        if (index[w] == kNone) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          ++f.it;
          call.push_back({w, SparseGenerator::Matrix::InnerIterator(m, static_cast<Eigen::Index>(w))});
          descended = true;
          break;
        }
        if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
      }
      if (descended) continue;
      const std::size_t v = f.v;
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  std::vector<char> leaves(ncomp, 0);
  for (Eigen::Index j = 0; j < m.outerSize(); ++j)
    for (SparseGenerator::Matrix::InnerIterator it(m, j); it; ++it)
      if (it.row() != j && it.value() > 0.0 &&
          comp[static_cast<std::size_t>(it.row())] != comp[static_cast<std::size_t>(j)])
        leaves[comp[static_cast<std::size_t>(j)]] = 1;
  return static_cast<std::size_t>(std::count(leaves.begin(), leaves.end(), 0));
}

namespace {

double relative_residual(const SparseGenerator::Matrix& m, const Eigen::VectorXd& p, double scale) {
  const Eigen::VectorXd r = m * p;
  return r.lpNorm<Eigen::Infinity>() / scale;
}

std::vector<double> clip_and_normalize(Eigen::VectorXd p, double clip) {
  const double sum = p.sum();
  if (!(std::abs(sum) > 0.0) || !std::isfinite(sum))
    throw NumericalError("stationary solve produced a vector with zero or non-finite sum");
  p /= sum;
  if (p.minCoeff() < -clip)
    throw NumericalError("stationary vector has negative entries down to " +
                         format_double(p.minCoeff()));
  p = p.cwiseMax(0.0);
  p /= p.sum();
  return {p.data(), p.data() + p.size()};
}

}  // namespace

Distribution dense_null_space(const SparseGenerator& g) {
  const auto n = static_cast<Eigen::Index>(g.dimension());
  if (n > 2000) throw ConfigError("dense null-space solve is limited to 2000 states");
  if (n == 0) throw ConfigError("empty generator");
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = g.dense();
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n)
    throw NumericalError("generator null space has dimension above one (reducible chain)");
  Eigen::VectorXd p = qr.solve(b);
  // Iterative refinement; keep the iterate with the smallest residual.
  double best = (a * p - b).lpNorm<Eigen::Infinity>();
  Eigen::VectorXd q = p;
  for (int k = 0; k < 3; ++k) {
    q += qr.solve(b - a * q);
    const double r = (a * q - b).lpNorm<Eigen::Infinity>();
    if (r < best) {
      best = r;
      p = q;
    }
  }
  return {g.space(), clip_and_normalize(std::move(p), 1e-12)};
}

Distribution stationary_distribution(const SparseGenerator& g, const StationaryOptions& options,
                                     StationaryReport* report) {
  const std::size_t n = g.dimension();
  if (n == 0) throw ConfigError("empty generator");
  StationaryReport local;
  StationaryReport& rep = report ? *report : local;
  rep = {};
  if (n == 1) return {g.space(), {1.0}};
  if (options.check_ergodic) {
    const std::size_t closed = closed_class_count(g);
    if (closed != 1)
      throw NumericalError("reducible chain: " + std::to_string(closed) + " closed classes");
  }
  const double scale = g.max_exit_rate();
  if (!(scale > 0.0)) throw NumericalError("generator has no transitions");

  using Matrix = SparseGenerator::Matrix;
  Matrix shifted = g.matrix();
  const double sigma = options.shift_factor * scale;
  for (Eigen::Index j = 0; j < shifted.outerSize(); ++j) shifted.coeffRef(j, j) -= sigma;
  shifted.makeCompressed();

  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(shifted);
  lu.factorize(shifted);
  if (lu.info() != Eigen::Success) {
    if (n <= 2000) {
      rep.dense_fallback = true;
      return dense_null_space(g);
    }
    throw NumericalError("sparse LU factorization failed: " + lu.lastErrorMessage());
  }

  Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  double residual = relative_residual(g.matrix(), x, scale);
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    const double s = y.sum();
    if (!std::isfinite(s) || s == 0.0) throw NumericalError("inverse iteration broke down");
    y /= s;
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = std::move(y);
    residual = relative_residual(g.matrix(), x, scale);
    rep.iterations = it;
    // A small residual alone leaves an error of order sigma / gap; also wait
    // for the iterate to settle.
    const double size = x.lpNorm<Eigen::Infinity>();
    if (residual <= options.tolerance && change <= 1e-13 * size) break;
    if (change <= 1e-15 * size) break;  // stagnated at round-off
  }
  rep.residual = residual;
  if (!(residual <= options.accept)) {
    if (n <= 2000) {
      rep.dense_fallback = true;
      return dense_null_space(g);
    }
    throw NumericalError("inverse iteration did not converge (residual " + format_double(residual) +
                         " after " + std::to_string(rep.iterations) + " iterations)");
  }
  return {g.space(), clip_and_normalize(std::move(x), options.clip)};
}

PropensityShare fast_propensity_share(const ReactionNetwork& net,
                                      std::span<const std::size_t> fast_set,
                                      const StateSpace& space, const Distribution* pi) {
  if (fast_set.empty()) throw ConfigError("fast reaction set is empty");
  for (auto r : fast_set)
    if (r >= net.size()) throw ConfigError("fast reaction index out of range");
  if (pi && pi->probabilities.size() != space.size())
    throw ConfigError("distribution does not match the state space");
  PropensityShare out;
  out.field.resize(space.size());
  std::vector<double> alpha(net.size());
  double e = 0.0;
  for (std::size_t j = 0; j < space.size(); ++j) {
    const double a0 = net.propensities(space.state(j), alpha);
    double fast = 0.0;
    for (auto r : fast_set) fast += alpha[r];
    out.field[j] = a0 > 0.0 ? fast / a0 : 0.0;
    if (pi) e += out.field[j] * pi->probabilities[j];
  }
  if (pi) out.expectation = e;
  return out;
}

void write_distribution_csv(std::ostream& os, const Distribution& d) {
  os << "state_index";
  for (const auto& s : d.space->species()) os << ',' << s;
  os << ",probability\n";
  for (std::size_t i = 0; i < d.space->size(); ++i) {
    os << i;
    for (Count c : d.space->state(i)) os << ',' << c;
    os << ',' << format_double(d.probabilities[i]) << '\n';
  }
}

Distribution read_distribution_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty distribution file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      header.push_back(cell);
    }
  }
  if (header.size() < 3 || header.front() != "state_index" || header.back() != "probability")
    throw ConfigError("distribution header must be state_index,<species...>,probability");
  std::vector<std::string> species(header.begin() + 1, header.end() - 1);
  const std::size_t d = species.size();
  std::vector<std::pair<StateVector, double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != d + 2) throw ParseError(lineno, "wrong number of columns");
    StateVector x(d);
    try {
      for (std::size_t k = 0; k < d; ++k) x[k] = std::stoll(cells[k + 1]);
      rows.emplace_back(std::move(x), std::stod(cells.back()));
    } catch (const std::exception&) {
      throw ParseError(lineno, "malformed number");
    }
  }
  if (rows.empty()) throw ConfigError("distribution file has no rows");
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Count> flat;
  std::vector<double> p;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].first == rows[i - 1].first) throw ConfigError("duplicate state in distribution");
    flat.insert(flat.end(), rows[i].first.begin(), rows[i].first.end());
    p.push_back(rows[i].second);
  }
  return {std::make_shared<StateSpace>(species, std::move(flat)), std::move(p)};
}

void write_generator_csv(std::ostream& os, const SparseGenerator& g) {
  os << "row,col,rate\n";
  for (const auto& e : g.entries()) os << e.row << ',' << e.col << ',' << format_double(e.rate) << '\n';
}

}  // namespace mscme
