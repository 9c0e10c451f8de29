#pragma once

// Grid discretization and flat-plan construction.
//
// The planner puts each item of a tuple on a shared-spacing grid (cell masses
// via the distribution function), enumerates the product-grid points whose
// coordinate sum lies within `band` of the plane constant, and looks for a
// coupling supported there with the discretized marginals.  Existence is a
// pure feasibility question, answered by a phase-1 simplex in floating point;
// the oracle header re-answers it in exact arithmetic over a separate code
// path (dense tableau, rational pivots, different pivot rule).

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "flatness.hpp"

namespace flatplan {

// Grid endpoints are not on the requested lattice.
struct AlignmentError : Error { using Error::Error; };
// No common spacing of usable size exists for the tuple's endpoints.
struct NoAlignment : Error { using Error::Error; };
// The requested coupling does not exist.
struct Infeasible : Error { using Error::Error; };
// No product-grid point has a coordinate sum within the band.
struct SliceEmpty : Error { using Error::Error; };
// Problem size above the configured variable budget.
struct SizeExceeded : Error { using Error::Error; };
// Simplex failed to converge within its iteration budget.
struct IterationLimit : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

struct Grid {
  double h = 0.0;
  std::vector<std::vector<double>> axes; // node coordinates, one list per item
  bool aligned = true; // endpoints sit on the lattice (within kSemanticTol)
};

inline Grid make_grid(const std::vector<Segment>& segs, double h,
                      bool require_aligned = true) {
  if (!(h > 0.0)) throw DomainError("grid spacing must be positive");
  Grid g;
  g.h = h;
  for (const Segment& s : segs) {
    const double w = width(s);
    long n = std::lround(w / h);
    if (std::abs(w - static_cast<double>(n) * h) > kSemanticTol) {
      if (require_aligned)
        throw AlignmentError("segment width " + std::to_string(w) +
                             " is not a multiple of the spacing");
      g.aligned = false;
      n = static_cast<long>(std::ceil(w / h - 0.5)); // cells must cover [l, r]
    }
    if (n > 200000)
      throw SizeExceeded("axis would need " + std::to_string(n + 1) + " nodes");
    std::vector<double> axis;
    axis.reserve(static_cast<size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) axis.push_back(s.l + static_cast<double>(i) * h);
    g.axes.push_back(std::move(axis));
  }
  return g;
}

inline std::vector<Segment> tuple_segments(const MeasureTuple& t) {
  std::vector<Segment> segs;
  segs.reserve(t.items.size());
  for (const DecreasingMeasure& m : t.items) segs.push_back(m.seg);
  return segs;
}

// ---------------------------------------------------------------------------
// Spacing snap
// ---------------------------------------------------------------------------

namespace detail {

// Best rational approximation with denominator <= max_den, by continued
// fractions.  Fails (returns false) when nothing lands within kSemanticTol.
inline bool snap_to_rational(double x, int64_t max_den, int64_t& num, int64_t& den) {
  const double sign = x < 0 ? -1.0 : 1.0;
  double v = std::abs(x);
  if (v > 1e12) return false;
  int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int iter = 0; iter < 64; ++iter) {
    const double fl = std::floor(frac);
    if (fl > 9e17) return false;
    const int64_t a = static_cast<int64_t>(fl);
    const int64_t p2 = a * p1 + p0;
    const int64_t q2 = a * q1 + q0;
    if (q2 > max_den || p2 < 0 || q2 < 0) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (std::abs(v - static_cast<double>(p1) / static_cast<double>(q1)) <= kSemanticTol) {
      num = static_cast<int64_t>(sign) * p1;
      den = q1;
      return true;
    }
    const double rem = frac - fl;
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  if (q1 > 0 &&
      std::abs(v - static_cast<double>(p1) / static_cast<double>(q1)) <= kSemanticTol) {
    num = static_cast<int64_t>(sign) * p1;
    den = q1;
    return true;
  }
  return false;
}

inline int64_t gcd64(int64_t a, int64_t b) { return std::gcd(a, b); }

} // namespace detail

// Largest spacing h <= target_h such that every endpoint, every interior
// density breakpoint, and the plane constant is an integer multiple of h,
// found by snapping each value to a rational with denominator <= 10^6 and
// taking an integer fraction of the rational gcd.  Interior breakpoints
// matter: when they sit on the lattice, cell masses are symmetric within
// each constant-density stretch and discretization preserves every mean
// exactly, which is what keeps genuinely flat tuples feasible at band 0.
// Fails when the snapped spacing would drop below 1e-6.
inline double snap_spacing(const MeasureTuple& t, double target_h) {
  if (!(target_h > 0.0)) throw DomainError("target spacing must be positive");
  std::vector<double> values{t.c};
  for (const DecreasingMeasure& m : t.items) {
    values.push_back(m.seg.l);
    values.push_back(m.seg.r);
    for (const UniformPart& p : m.parts) values.push_back(p.hi);
  }
  int64_t gnum = 0, gden = 1;
  for (double v : values) {
    if (v == 0.0) continue;
    int64_t num = 0, den = 1;
    if (!detail::snap_to_rational(v, 1000000, num, den))
      throw NoAlignment("endpoint " + std::to_string(v) +
                        " has no small-denominator rational nearby");
    num = std::abs(num);
    // gcd(gnum/gden, num/den) = gcd(gnum*den, num*gden) / (gden*den), reduced
    if (gnum == 0) {
      gnum = num; gden = den;
    } else {
      if (gden > (int64_t{1} << 31) || den > (int64_t{1} << 31))
        throw NoAlignment("endpoint denominators grow past the supported range");
      const int64_t a = gnum * den, b = num * gden;
      gnum = detail::gcd64(a, b);
      gden = gden * den;
      const int64_t g = detail::gcd64(gnum, gden);
      gnum /= g; gden /= g;
      if (gnum > (int64_t{1} << 40))
        throw NoAlignment("endpoint numerators grow past the supported range");
    }
  }
  if (gnum == 0) return target_h; // every endpoint at the origin: free choice
  const double g = static_cast<double>(gnum) / static_cast<double>(gden);
  const double scale = std::ceil(g / target_h - 1e-12);
  const double h = g / std::max(1.0, scale);
  if (h < 1e-6)
    throw NoAlignment("aligned spacing would fall below 1e-6");
  return h;
}

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

// Cell masses: node i receives the measure of [x_i - h/2, x_i + h/2), with
// the first and last cells extended to infinity so the weights always total
// exactly 1 and the discretized mean sits within h/2 of the true mean.
inline std::vector<std::vector<double>> discretize(const MeasureTuple& t,
                                                   const Grid& g) {
  if (g.axes.size() != t.items.size())
    throw DomainError("grid and tuple have different lengths");
  std::vector<std::vector<double>> hists;
  hists.reserve(g.axes.size());
  for (size_t k = 0; k < g.axes.size(); ++k) {
    const DecreasingMeasure& m = t.items[k];
    const std::vector<double>& axis = g.axes[k];
    std::vector<double> w(axis.size());
    double prev = 0.0; // F(lower cell edge), starting at F(-inf)
    for (size_t i = 0; i < axis.size(); ++i) {
      const double next =
          (i + 1 == axis.size()) ? 1.0 : cdf(m, axis[i] + 0.5 * g.h);
      w[i] = next - prev;
      prev = next;
    }
    hists.push_back(std::move(w));
  }
  return hists;
}

// ---------------------------------------------------------------------------
// Couplings and plane slices
// ---------------------------------------------------------------------------

struct Coupling {
  std::vector<std::vector<int>> idx; // node index per axis, lex-sorted
  std::vector<double> w;
};

inline std::vector<double> coupling_point(const Coupling& c, const Grid& g, size_t e) {
  std::vector<double> x(c.idx[e].size());
  for (size_t k = 0; k < x.size(); ++k) x[k] = g.axes[k][static_cast<size_t>(c.idx[e][k])];
  return x;
}

namespace detail {

// All index vectors whose coordinate sum lies within band of C, lex-sorted.
// Enumerated half-by-half: the back half is bucketed by index sum so the
// front half only visits compatible totals, never the full product grid.
inline std::vector<std::vector<int>> enumerate_slice(const Grid& g, double C,
                                                     double band) {
  const size_t n = g.axes.size();
  double sum_l = 0.0;
  for (const auto& axis : g.axes) sum_l += axis.front();
  // Acceptance depends only on the total index sum S: |sum_l + h*S - C| <= band + tol.
  const double lo = (C - band - kSemanticTol - sum_l) / g.h;
  const double hi = (C + band + kSemanticTol - sum_l) / g.h;
  long s_lo = static_cast<long>(std::ceil(lo));
  long s_hi = static_cast<long>(std::floor(hi));
  long max_total = 0;
  for (const auto& axis : g.axes) max_total += static_cast<long>(axis.size()) - 1;
  s_lo = std::max(s_lo, 0L);
  s_hi = std::min(s_hi, max_total);
  if (s_lo > s_hi) return {};

  const size_t front = n / 2;
  // Bucket the back half by its index sum.
  std::vector<std::vector<std::vector<int>>> buckets;
  long back_max = 0;
  double back_count = 1.0;
  for (size_t k = front; k < n; ++k) {
    back_max += static_cast<long>(g.axes[k].size()) - 1;
    back_count *= static_cast<double>(g.axes[k].size());
  }
  if (back_count > 2e6)
    throw SizeExceeded("slice enumeration would materialize too many partial points");
  buckets.resize(static_cast<size_t>(back_max) + 1);
  std::vector<int> combo(n - front, 0);
  for (;;) {
    long s = 0;
    for (int v : combo) s += v;
    buckets[static_cast<size_t>(s)].push_back(combo);
    size_t pos = combo.size();
    while (pos > 0) {
      --pos;
      if (combo[pos] + 1 < static_cast<int>(g.axes[front + pos].size())) {
        ++combo[pos];
        std::fill(combo.begin() + static_cast<long>(pos) + 1, combo.end(), 0);
        break;
      }
      if (pos == 0) { combo.clear(); break; }
    }
    if (combo.empty()) break;
    if (n == front) break;
  }

  std::vector<std::vector<int>> out;
  std::vector<int> head(front, 0);
  for (;;) {
    long s_head = 0;
    for (int v : head) s_head += v;
    std::vector<std::vector<int>> tails;
    for (long s = std::max(0L, s_lo - s_head); s <= std::min(back_max, s_hi - s_head); ++s)
      for (const auto& tail : buckets[static_cast<size_t>(s)]) tails.push_back(tail);
    std::sort(tails.begin(), tails.end()); // lex within this head
    for (const auto& tail : tails) {
      if (out.size() >= 2000000)
        throw SizeExceeded("slice holds too many points for the solver");
      std::vector<int> v;
      v.reserve(n);
      v.insert(v.end(), head.begin(), head.end());
      v.insert(v.end(), tail.begin(), tail.end());
      out.push_back(std::move(v));
    }
    if (front == 0) break;
    size_t pos = front;
    bool done = false;
    while (pos > 0) {
      --pos;
      if (head[pos] + 1 < static_cast<int>(g.axes[pos].size())) {
        ++head[pos];
        std::fill(head.begin() + static_cast<long>(pos) + 1, head.end(), 0);
        break;
      }
      if (pos == 0) done = true;
    }
    if (done) break;
  }
  return out;
}

// Sparse phase-1 simplex with Bland's rule.  Columns are slice points with a
// single 1 per axis; the basis inverse is kept densely and updated per pivot.
// Returns the infeasibility measure (phase-1 optimum); on (near-)zero the
// basic solution is written to `x`.
inline double phase1_feasibility(const std::vector<std::vector<int>>& cols,
                                 const std::vector<std::vector<double>>& hists,
                                 std::vector<double>& x) {
  const size_t n_axes = hists.size();
  std::vector<size_t> row_base(n_axes, 0);
  size_t m = 0;
  for (size_t k = 0; k < n_axes; ++k) {
    row_base[k] = m;
    m += hists[k].size();
  }
  const size_t nv = cols.size();
  std::vector<double> b;
  b.reserve(m);
  for (const auto& hist : hists) b.insert(b.end(), hist.begin(), hist.end());

  std::vector<std::vector<double>> binv(m, std::vector<double>(m, 0.0));
  for (size_t r = 0; r < m; ++r) binv[r][r] = 1.0;
  std::vector<double> xb = b;               // artificial start: xB = b >= 0
  std::vector<size_t> basis(m);             // basis[r] = variable id
  for (size_t r = 0; r < m; ++r) basis[r] = nv + r;
  std::vector<char> artificial_gone(m, 0);

  auto col_rows = [&](size_t j, std::vector<size_t>& rows) {
    rows.clear();
    for (size_t k = 0; k < n_axes; ++k)
      rows.push_back(row_base[k] + static_cast<size_t>(cols[j][k]));
  };

  const size_t max_iter = 20000 + 50 * (m + nv);
  std::vector<size_t> rows;
  std::vector<double> y(m), d(m);
  for (size_t iter = 0; iter < max_iter; ++iter) {
    // y = (phase-1 costs of basis) * B^-1
    std::fill(y.begin(), y.end(), 0.0);
    for (size_t s = 0; s < m; ++s) {
      if (basis[s] < nv) continue; // structural: cost 0
      for (size_t r = 0; r < m; ++r) y[r] += binv[s][r];
    }
    // Bland: first variable with negative reduced cost.  Structural columns
    // first (cost 0 - y.A_j), then surviving artificials (cost 1 - y_r).
    size_t enter = SIZE_MAX;
    double best = 0.0;
    for (size_t j = 0; j < nv && enter == SIZE_MAX; ++j) {
      col_rows(j, rows);
      double red = 0.0;
      for (size_t r : rows) red -= y[r];
      if (red < -kPivotTol) { enter = j; best = red; }
    }
    for (size_t r = 0; r < m && enter == SIZE_MAX; ++r) {
      if (artificial_gone[r]) continue;
      const double red = 1.0 - y[r];
      if (red < -kPivotTol) { enter = nv + r; best = red; }
    }
    (void)best;
    if (enter == SIZE_MAX) break; // optimal

    // d = B^-1 * A_enter
    std::fill(d.begin(), d.end(), 0.0);
    if (enter < nv) {
      col_rows(enter, rows);
      for (size_t s = 0; s < m; ++s) {
        double acc = 0.0;
        for (size_t r : rows) acc += binv[s][r];
        d[s] = acc;
      }
    } else {
      for (size_t s = 0; s < m; ++s) d[s] = binv[s][enter - nv];
    }
    size_t leave = SIZE_MAX;
    double theta = 0.0;
    for (size_t s = 0; s < m; ++s) {
      if (d[s] <= kPivotTol) continue;
      const double ratio = xb[s] / d[s];
      if (leave == SIZE_MAX || ratio < theta - 1e-15 ||
          (std::abs(ratio - theta) <= 1e-15 && basis[s] < basis[leave])) {
        leave = s;
        theta = ratio;
      }
    }
    if (leave == SIZE_MAX)
      throw IterationLimit("phase-1 direction unbounded (numerical stall)");
    if (basis[leave] >= nv) artificial_gone[basis[leave] - nv] = 1;
    for (size_t s = 0; s < m; ++s) {
      if (s == leave) continue;
      xb[s] -= theta * d[s];
      if (xb[s] < 0.0) xb[s] = 0.0;
    }
    xb[leave] = theta;
    basis[leave] = enter;
    const double piv = d[leave];
    for (size_t r = 0; r < m; ++r) binv[leave][r] /= piv;
    for (size_t s = 0; s < m; ++s) {
      if (s == leave || d[s] == 0.0) continue;
      const double f = d[s];
      for (size_t r = 0; r < m; ++r) binv[s][r] -= f * binv[leave][r];
    }
    if (iter + 1 == max_iter)
      throw IterationLimit("phase-1 exceeded its iteration budget");
  }

  double infeas = 0.0;
  for (size_t s = 0; s < m; ++s)
    if (basis[s] >= nv) infeas += xb[s];
  x.assign(nv, 0.0);
  if (infeas <= kPivotTol)
    for (size_t s = 0; s < m; ++s)
      if (basis[s] < nv) x[basis[s]] = xb[s];
  return infeas;
}

} // namespace detail

// Builds a coupling concentrated on the band around the plane, with the given
// marginals.  Throws SliceEmpty when no grid point reaches the band and
// Infeasible (with the measured gap) when the marginals cannot be met there.
inline Coupling build_flat_plan(const Grid& g,
                                const std::vector<std::vector<double>>& hists,
                                double C, double band = 0.0) {
  if (hists.size() != g.axes.size())
    throw DomainError("marginal count does not match the grid");
  for (size_t k = 0; k < hists.size(); ++k) {
    if (hists[k].size() != g.axes[k].size())
      throw DomainError("marginal length does not match axis " + std::to_string(k + 1));
    double mass = 0.0;
    for (double wi : hists[k]) {
      if (wi < -kWeightTol) throw MassError("negative marginal weight");
      mass += wi;
    }
    if (std::abs(mass - 1.0) > kSemanticTol)
      throw MassError("marginal " + std::to_string(k + 1) + " does not sum to 1");
  }
  const std::vector<std::vector<int>> slice = detail::enumerate_slice(g, C, band);
  if (slice.empty())
    throw SliceEmpty("no grid point has a coordinate sum within the band");
  std::vector<double> x;
  const double gap = detail::phase1_feasibility(slice, hists, x);
  if (gap > kPivotTol)
    throw Infeasible("no coupling on the slice matches the marginals (gap " +
                     std::to_string(gap) + ")");
  Coupling c;
  for (size_t j = 0; j < slice.size(); ++j) {
    if (x[j] > 1e-15) {
      c.idx.push_back(slice[j]);
      c.w.push_back(x[j]);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Verification and costs
// ---------------------------------------------------------------------------

struct CouplingCheck {
  double max_marginal_dev = 0.0; // against the supplied marginals
  double max_plane_dev = 0.0;    // max |sum(x) - C| over entries
  double mass_defect = 0.0;      // |total weight - 1|
};

inline CouplingCheck verify_coupling(const Coupling& c, const Grid& g,
                                     const std::vector<std::vector<double>>& hists,
                                     double C) {
  CouplingCheck out;
  std::vector<std::vector<double>> marg(g.axes.size());
  for (size_t k = 0; k < g.axes.size(); ++k) marg[k].assign(g.axes[k].size(), 0.0);
  double mass = 0.0;
  for (size_t e = 0; e < c.w.size(); ++e) {
    mass += c.w[e];
    double sum = 0.0;
    for (size_t k = 0; k < g.axes.size(); ++k) {
      sum += g.axes[k][static_cast<size_t>(c.idx[e][k])];
      marg[k][static_cast<size_t>(c.idx[e][k])] += c.w[e];
    }
    out.max_plane_dev = std::max(out.max_plane_dev, std::abs(sum - C));
  }
  out.mass_defect = std::abs(mass - 1.0);
  for (size_t k = 0; k < hists.size(); ++k)
    for (size_t i = 0; i < hists[k].size(); ++i)
      out.max_marginal_dev =
          std::max(out.max_marginal_dev, std::abs(marg[k][i] - hists[k][i]));
  return out;
}

struct CostReport {
  double pairwise = 0.0;          // sum_e w * sum_{i,j} -(x_i - x_j)^2
  double sum_sq = 0.0;            // sum_e w * (sum_k x_k)^2
  double sum_sq_about_c = 0.0;    // sum_e w * (sum_k x_k - C)^2
  double identity_residual = 0.0; // | pairwise - (2*sum_sq - 2N*sum second moments) |
};

// The pairwise interaction cost and the identity that pins it to the
// squared-sum functional: integrating sum_{i,j} -(x_i - x_j)^2 equals
// 2 * integral (sum x)^2 minus 2N * sum of the marginals' second moments.
// The left side is summed entry by entry (double loop over coordinates), the
// right side from the coupling's own marginals, so the residual genuinely
// cross-checks two computations.
inline CostReport cost_report_points(const std::vector<std::vector<double>>& pts,
                                     const std::vector<double>& w, double C) {
  CostReport rep;
  if (pts.size() != w.size()) throw DomainError("one weight per support point, please");
  if (pts.empty()) return rep;
  const size_t n = pts.front().size();
  std::vector<double> second(n, 0.0);
  for (size_t e = 0; e < w.size(); ++e) {
    const std::vector<double>& x = pts[e];
    if (x.size() != n) throw DomainError("support points of mixed dimension");
    double pair = 0.0, sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      sum += x[i];
      second[i] += w[e] * x[i] * x[i];
      for (size_t j = 0; j < n; ++j) pair -= (x[i] - x[j]) * (x[i] - x[j]);
    }
    rep.pairwise += w[e] * pair;
    rep.sum_sq += w[e] * sum * sum;
    rep.sum_sq_about_c += w[e] * (sum - C) * (sum - C);
  }
  double second_total = 0.0;
  for (double s : second) second_total += s;
  rep.identity_residual = std::abs(
      rep.pairwise - (2.0 * rep.sum_sq - 2.0 * static_cast<double>(n) * second_total));
  return rep;
}

inline CostReport cost_report(const Coupling& c, const Grid& g, double C) {
  std::vector<std::vector<double>> pts;
  pts.reserve(c.w.size());
  for (size_t e = 0; e < c.w.size(); ++e) pts.push_back(coupling_point(c, g, e));
  return cost_report_points(pts, c.w, C);
}

} // namespace flatplan
