#pragma once

// Exact re-certification.
//
// Everything the planner decides in floating point is re-decided here in
// exact rational arithmetic over a deliberately separate code path: dense
// tableau instead of a sparse basis inverse, largest-coefficient pivoting
// (with a Bland fallback against cycling) instead of pure Bland, recursive
// slice enumeration instead of meet-in-the-middle.  Inputs are snapped to
// small-denominator rationals, so data that was meant to be 1/3 is 1/3 here,
// and equality tests below are exact, not tolerance-based.

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

#include "planner.hpp"
#include "splits.hpp"

namespace flatplan {

using Rational = boost::multiprecision::cpp_rational;

namespace exact {

// Snap: nearest rational with denominator <= 10^6 when one sits within
// kSemanticTol, otherwise the exact binary value of the double.
inline Rational from_double(double x) {
  int64_t num = 0, den = 1;
  if (detail::snap_to_rational(x, 1000000, num, den))
    return Rational(num, den);
  return Rational(x);
}

inline double to_double(const Rational& r) {
  return static_cast<double>(numerator(r)) / static_cast<double>(denominator(r));
}

// ---------------------------------------------------------------------------
// Dense rational simplex
// ---------------------------------------------------------------------------

class RationalSimplex {
 public:
  // Columns are index vectors into per-axis row blocks: column j has a unit
  // entry in block k at row cols[j][k].  b holds the stacked marginals.
  RationalSimplex(const std::vector<std::vector<int>>& cols,
                  const std::vector<size_t>& block_sizes,
                  const std::vector<Rational>& b)
      : m_(b.size()), n_(cols.size()) {
    row_base_.resize(block_sizes.size());
    size_t acc = 0;
    for (size_t k = 0; k < block_sizes.size(); ++k) {
      row_base_[k] = acc;
      acc += block_sizes[k];
    }
    tab_.assign(m_, std::vector<Rational>(n_ + m_ + 1, Rational(0)));
    for (size_t i = 0; i < m_; ++i) {
      tab_[i][n_ + i] = 1; // artificial start basis
      tab_[i][n_ + m_] = b[i];
      if (b[i] < 0) throw MassError("exact marginals must be nonnegative");
    }
    for (size_t j = 0; j < n_; ++j)
      for (size_t k = 0; k < block_sizes.size(); ++k)
        tab_[row_base_[k] + static_cast<size_t>(cols[j][k])][j] = 1;
    basis_.resize(m_);
    for (size_t i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  // Minimizes the artificial sum.  Feasible iff the exact optimum is zero.
  bool phase1() {
    std::vector<Rational> cost(n_ + m_, Rational(0));
    for (size_t j = n_; j < n_ + m_; ++j) cost[j] = 1;
    run(cost, /*allow_artificials=*/false);
    Rational infeas(0);
    for (size_t i = 0; i < m_; ++i)
      if (basis_[i] >= n_) infeas += tab_[i][n_ + m_];
    return infeas == 0;
  }

  // Minimizes c over the structural columns (phase1 must have succeeded).
  Rational phase2(const std::vector<Rational>& c) {
    std::vector<Rational> cost(n_ + m_, Rational(0));
    for (size_t j = 0; j < n_; ++j) cost[j] = c[j];
    run(cost, /*allow_artificials=*/false);
    Rational v(0);
    for (size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) v += c[basis_[i]] * tab_[i][n_ + m_];
    return v;
  }

  std::vector<Rational> solution() const {
    std::vector<Rational> x(n_, Rational(0));
    for (size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = tab_[i][n_ + m_];
    return x;
  }

 private:
  void run(const std::vector<Rational>& cost, bool allow_artificials) {
    // Reduced costs for the current basis, maintained under pivots.
    std::vector<Rational> red(n_ + m_);
    for (size_t j = 0; j < n_ + m_; ++j) {
      Rational zj(0);
      for (size_t i = 0; i < m_; ++i)
        if (!(cost[basis_[i]] == 0)) zj += cost[basis_[i]] * tab_[i][j];
      red[j] = cost[j] - zj;
    }
    size_t degenerate_run = 0;
    bool bland = false;
    const size_t max_iter = 2000 + 40 * (m_ + n_);
    for (size_t iter = 0; iter < max_iter; ++iter) {
      size_t enter = SIZE_MAX;
      if (bland) {
        for (size_t j = 0; j < n_ + m_; ++j) {
          if (!allow_artificials && j >= n_ && cost[j] == 0) continue;
          if (red[j] < 0) { enter = j; break; }
        }
      } else {
        Rational best(0);
        for (size_t j = 0; j < n_ + m_; ++j) {
          if (!allow_artificials && j >= n_ && cost[j] == 0) continue;
          if (red[j] < best) { best = red[j]; enter = j; }
        }
      }
      if (enter == SIZE_MAX) return; // optimal
      size_t leave = SIZE_MAX;
      Rational theta(0);
      for (size_t i = 0; i < m_; ++i) {
        if (!(tab_[i][enter] > 0)) continue;
        const Rational ratio = tab_[i][n_ + m_] / tab_[i][enter];
        if (leave == SIZE_MAX || ratio < theta ||
            (ratio == theta && basis_[i] < basis_[leave])) {
          leave = i;
          theta = ratio;
        }
      }
      if (leave == SIZE_MAX)
        throw CertificateError("exact simplex found an unbounded direction");
      if (theta == 0) {
        if (++degenerate_run > 3 * m_ + 20) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter, red);
    }
    throw IterationLimit("exact simplex exceeded its iteration budget");
  }

  void pivot(size_t leave, size_t enter, std::vector<Rational>& red) {
    const Rational piv = tab_[leave][enter];
    for (Rational& v : tab_[leave]) v /= piv;
    for (size_t i = 0; i < m_; ++i) {
      if (i == leave || tab_[i][enter] == 0) continue;
      const Rational f = tab_[i][enter];
      for (size_t j = 0; j <= n_ + m_; ++j)
        if (!(tab_[leave][j] == 0)) tab_[i][j] -= f * tab_[leave][j];
    }
    const Rational rf = red[enter];
    if (!(rf == 0)) {
      for (size_t j = 0; j < n_ + m_; ++j)
        if (!(tab_[leave][j] == 0)) red[j] -= rf * tab_[leave][j];
    }
    basis_[leave] = enter;
  }

  size_t m_, n_;
  std::vector<size_t> row_base_;
  std::vector<std::vector<Rational>> tab_;
  std::vector<size_t> basis_;
};

// ---------------------------------------------------------------------------
// Exact problem data
// ---------------------------------------------------------------------------

struct ExactGrid {
  Rational h;
  std::vector<Rational> origin;   // first node per axis
  std::vector<size_t> nodes;      // node count per axis
  Rational c;

  Rational node(size_t axis, size_t i) const {
    return origin[axis] + Rational(static_cast<int64_t>(i)) * h;
  }
};

inline ExactGrid snap_grid(const Grid& g, double C) {
  ExactGrid eg;
  eg.h = from_double(g.h);
  eg.c = from_double(C);
  for (const auto& axis : g.axes) {
    eg.origin.push_back(from_double(axis.front()));
    eg.nodes.push_back(axis.size());
  }
  return eg;
}

// Snaps a marginal and repairs the (tiny) rounding defect on its largest
// weight, so each exact marginal sums to exactly 1.
inline std::vector<Rational> snap_marginal(const std::vector<double>& hist) {
  std::vector<Rational> out;
  out.reserve(hist.size());
  Rational total(0);
  size_t largest = 0;
  for (size_t i = 0; i < hist.size(); ++i) {
    if (hist[i] < -kWeightTol) throw MassError("negative marginal weight");
    out.push_back(from_double(std::max(0.0, hist[i])));
    total += out.back();
    if (hist[i] > hist[largest]) largest = i;
  }
  const Rational defect = Rational(1) - total;
  if (boost::multiprecision::abs(defect) > Rational(1, 10000000))
    throw MassError("marginal is too far from unit mass to repair");
  out[largest] += defect;
  if (out[largest] < 0) throw MassError("marginal repair made a weight negative");
  return out;
}

} // namespace exact

// ---------------------------------------------------------------------------
// Oracle entry points
// ---------------------------------------------------------------------------

inline constexpr size_t kOracleMaxVars = 200000;

namespace detail {

// All index vectors over the exact grid, optionally restricted to exact
// coordinate sum == C.  Plain recursion with partial-sum pruning.
inline void oracle_columns(const exact::ExactGrid& g, bool slice_only,
                           std::vector<std::vector<int>>& out) {
  const size_t n = g.nodes.size();
  // For pruning: min/max achievable remaining index sums.
  std::vector<long> max_rest(n + 1, 0);
  for (size_t k = n; k-- > 0;)
    max_rest[k] = max_rest[k + 1] + static_cast<long>(g.nodes[k]) - 1;
  Rational origin_sum(0);
  for (const Rational& o : g.origin) origin_sum += o;
  long target = -1;
  if (slice_only) {
    const Rational span = (g.c - origin_sum) / g.h;
    if (denominator(span) != 1) return; // plane misses the lattice entirely
    if (numerator(span) < 0 || numerator(span) > max_rest[0]) return;
    target = static_cast<long>(numerator(span));
  }
  std::vector<int> v(n, 0);
  const auto rec = [&](auto&& self, size_t k, long sum) -> void {
    if (out.size() > kOracleMaxVars)
      throw SizeExceeded("oracle problem exceeds the variable budget");
    if (k == n) {
      if (!slice_only || sum == target) out.push_back(v);
      return;
    }
    for (size_t i = 0; i < g.nodes[k]; ++i) {
      const long s = sum + static_cast<long>(i);
      if (slice_only && (s > target || s + max_rest[k + 1] < target)) continue;
      v[k] = static_cast<int>(i);
      self(self, k + 1, s);
    }
  };
  rec(rec, 0, 0);
}

} // namespace detail

struct OracleValue {
  Rational min_cost;   // exact minimum of sum w * (sum x - C)^2
  double min_cost_d;   // the same, rounded once for reporting
  Coupling coupling;   // an exact minimizer, weights rounded to double
};

namespace detail {

inline void oracle_check_exact(const std::vector<std::vector<int>>& cols,
                               const std::vector<std::vector<Rational>>& hists,
                               const std::vector<Rational>& x) {
  std::vector<std::vector<Rational>> marg(hists.size());
  for (size_t k = 0; k < hists.size(); ++k) marg[k].assign(hists[k].size(), Rational(0));
  for (size_t j = 0; j < cols.size(); ++j) {
    if (x[j] == 0) continue;
    if (x[j] < 0) throw CertificateError("oracle solution has a negative weight");
    for (size_t k = 0; k < hists.size(); ++k)
      marg[k][static_cast<size_t>(cols[j][k])] += x[j];
  }
  for (size_t k = 0; k < hists.size(); ++k)
    for (size_t i = 0; i < hists[k].size(); ++i)
      if (!(marg[k][i] == hists[k][i]))
        throw CertificateError("oracle solution does not reproduce the marginals exactly");
}

} // namespace detail

// Exact minimum of the squared plane deviation over all couplings of the
// given marginals (full product grid, no band restriction).
inline OracleValue oracle_min_cost(const Grid& g,
                                   const std::vector<std::vector<double>>& hists,
                                   double C) {
  const exact::ExactGrid eg = exact::snap_grid(g, C);
  std::vector<std::vector<Rational>> ehists;
  ehists.reserve(hists.size());
  for (const auto& hist : hists) ehists.push_back(exact::snap_marginal(hist));
  std::vector<std::vector<int>> cols;
  detail::oracle_columns(eg, /*slice_only=*/false, cols);
  if (cols.size() > kOracleMaxVars)
    throw SizeExceeded("oracle problem exceeds the variable budget");
  std::vector<size_t> blocks;
  std::vector<Rational> b;
  for (const auto& eh : ehists) {
    blocks.push_back(eh.size());
    b.insert(b.end(), eh.begin(), eh.end());
  }
  exact::RationalSimplex lp(cols, blocks, b);
  if (!lp.phase1())
    throw CertificateError("product couplings are always feasible; phase 1 disagreed");
  std::vector<Rational> cost;
  cost.reserve(cols.size());
  for (const auto& v : cols) {
    Rational s(0);
    for (size_t k = 0; k < eg.nodes.size(); ++k) s += eg.node(k, static_cast<size_t>(v[k]));
    const Rational dev = s - eg.c;
    cost.push_back(dev * dev);
  }
  OracleValue out;
  out.min_cost = lp.phase2(cost);
  out.min_cost_d = exact::to_double(out.min_cost);
  const std::vector<Rational> x = lp.solution();
  detail::oracle_check_exact(cols, ehists, x);
  for (size_t j = 0; j < cols.size(); ++j) {
    if (x[j] == 0) continue;
    out.coupling.idx.push_back(cols[j]);
    out.coupling.w.push_back(exact::to_double(x[j]));
  }
  return out;
}

// Exact feasibility of a coupling concentrated on the plane itself.
inline bool oracle_slice_feasible(const Grid& g,
                                  const std::vector<std::vector<double>>& hists,
                                  double C) {
  const exact::ExactGrid eg = exact::snap_grid(g, C);
  std::vector<std::vector<Rational>> ehists;
  ehists.reserve(hists.size());
  for (const auto& hist : hists) ehists.push_back(exact::snap_marginal(hist));
  std::vector<std::vector<int>> cols;
  detail::oracle_columns(eg, /*slice_only=*/true, cols);
  if (cols.empty()) return false;
  std::vector<size_t> blocks;
  std::vector<Rational> b;
  for (const auto& eh : ehists) {
    blocks.push_back(eh.size());
    b.insert(b.end(), eh.begin(), eh.end());
  }
  exact::RationalSimplex lp(cols, blocks, b);
  return lp.phase1();
}

} // namespace flatplan
