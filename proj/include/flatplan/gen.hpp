#pragma once

// Seeded instance generators for the property suites and the CLI selftest.
//
// All randomness flows through pick(), a plain modulo draw on mt19937_64, so
// identical seeds give identical instances on every toolchain (the standard
// leaves std::uniform_int_distribution's algorithm unspecified; we don't care
// about its negligible modulo bias, we care about reproducibility).  Every
// generated coordinate sits on a coarse rational grid so that spacing
// snapping and exact-rational reconstruction downstream are guaranteed to
// succeed.

#include <random>
#include <string>
#include <vector>

#include "flatness.hpp"
#include "planner.hpp"

namespace flatplan {
namespace gen {

using Rng = std::mt19937_64;

// Uniform draw from {0, 1, ..., n-1}.
inline size_t pick(Rng& rng, size_t n) {
  return n <= 1 ? 0 : static_cast<size_t>(rng() % n);
}

// Uniform draw from {lo, lo+step, ..., lo+steps*step}.
inline double grid_pick(Rng& rng, double lo, double step, size_t steps) {
  return lo + step * static_cast<double>(pick(rng, steps + 1));
}

// A random measure supported exactly on [l, l+w], with every density
// breakpoint on the step lattice.  Shapes: plain uniform, two uniform parts,
// or an atom at l over a full-width uniform.  w = 0 degenerates to a point
// mass.
inline DecreasingMeasure random_shape(Rng& rng, double l, double w, double step) {
  if (w <= 0.0) return make_dirac(l);
  const size_t inner = static_cast<size_t>(w / step + 0.5) - 1; // interior knots
  const size_t mode = pick(rng, 3);
  if (mode == 1 && inner >= 1) {
    const double t = l + step * static_cast<double>(1 + pick(rng, inner));
    const double w_lo = 0.125 * static_cast<double>(1 + pick(rng, 6));
    return make_measure({l, l + w}, 0.0, {{t, w_lo}, {l + w, 1.0 - w_lo}});
  }
  if (mode == 2) {
    const double atom = 0.125 * static_cast<double>(1 + pick(rng, 6));
    return make_measure({l, l + w}, atom, {{l + w, 1.0 - atom}});
  }
  return make_uniform(l, l + w);
}

// Uniform measure of width w anchored at l.
inline DecreasingMeasure uniform_w(double l, double w) { return make_uniform(l, l + w); }

// A left endpoint from the step lattice in [-1, 1].
inline double random_left(Rng& rng, double step) {
  const size_t n = static_cast<size_t>(2.0 / step + 0.5);
  return -1.0 + step * static_cast<double>(pick(rng, n + 1));
}

// A tuple inside the flat family with criterion slack >= min_slack at every
// index.  For n == 2 the family forces equal-width plain uniforms (slack is
// identically zero there, so min_slack must be <= 0).  For n >= 3, draws
// shapes until the slack target holds, falling back to equal-width uniforms,
// whose slack is (n/2 - 1) * w.
inline MeasureTuple random_family_tuple(Rng& rng, size_t n, double min_slack,
                                        double step = 0.25, size_t max_width_steps = 4) {
  if (n == 2) {
    if (min_slack > 0.0)
      throw DomainError("two-item family tuples never have positive slack");
    const double w = step * static_cast<double>(1 + pick(rng, max_width_steps - 1));
    return make_tuple({uniform_w(random_left(rng, step), w),
                       uniform_w(random_left(rng, step), w)});
  }
  for (int attempt = 0; attempt < 500; ++attempt) {
    std::vector<DecreasingMeasure> items;
    items.reserve(n);
    for (size_t k = 0; k < n; ++k) {
      const double w = step * static_cast<double>(1 + pick(rng, max_width_steps - 1));
      items.push_back(random_shape(rng, random_left(rng, step), w, step));
    }
    MeasureTuple t = make_tuple(std::move(items));
    const FlatVerdict v = flat_verdict(t);
    double worst = v.slacks.front();
    for (double s : v.slacks) worst = std::min(worst, s);
    if (worst >= min_slack) return t;
  }
  const double w = step * static_cast<double>(max_width_steps);
  if ((0.5 * static_cast<double>(n) - 1.0) * w < min_slack)
    throw DomainError("slack target out of reach for this shape family");
  std::vector<DecreasingMeasure> items;
  for (size_t k = 0; k < n; ++k)
    items.push_back(uniform_w(random_left(rng, step), w));
  return make_tuple(std::move(items));
}

// A tuple violating the criterion by at least `margin` at one index: build
// n-1 modest items, then give the victim a full-width uniform too wide for
// the headroom the others leave.  (Victim mean offset = w/2, so the victim's
// slack is sum(other offsets) - w/2.)
inline MeasureTuple random_violating_tuple(Rng& rng, size_t n, double margin,
                                           double step = 0.25, size_t max_width_steps = 2) {
  std::vector<DecreasingMeasure> items;
  double offsets = 0.0;
  for (size_t k = 0; k + 1 < n; ++k) {
    const double w = step * static_cast<double>(pick(rng, max_width_steps + 1));
    DecreasingMeasure m = random_shape(rng, random_left(rng, step), w, step);
    offsets += expectation(m) - m.seg.l;
    items.push_back(std::move(m));
  }
  const double need = 2.0 * (offsets + margin);
  const double w = step * std::ceil(need / step - 1e-9) + step;
  items.push_back(uniform_w(random_left(rng, step), w));
  // Put the victim at a random position.
  const size_t at = pick(rng, n);
  std::swap(items[at], items[n - 1]);
  MeasureTuple t = make_tuple(std::move(items));
  const FlatVerdict v = flat_verdict(t);
  if (v.flat) throw Error("violating-tuple generator produced a flat tuple");
  return t;
}

// An all-uniform tuple meeting the midpoint-split hypothesis at index `at`:
// that item's width equals the sum of the other widths, which makes the
// right-endpoint sum tight there.
inline MeasureTuple midpoint_instance(Rng& rng, size_t n, size_t at, double step = 0.25) {
  std::vector<DecreasingMeasure> items;
  double total = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (k == at) {
      items.push_back(make_dirac(0.0)); // placeholder
      continue;
    }
    const double w = step * static_cast<double>(1 + pick(rng, 3));
    total += w;
    items.push_back(uniform_w(random_left(rng, step), w));
  }
  items[at] = uniform_w(random_left(rng, step), total);
  return make_tuple(std::move(items));
}

// A tuple meeting the breakpoint-split hypothesis: one genuine two-part item
// and a uniform partner, both of width equal to the headroom H, plus one
// narrow uniform of width w_lo * (H - (lo - l)) that balances the mean sum.
inline MeasureTuple breakpoint_instance(Rng& rng, double step = 0.25) {
  const double H = step * static_cast<double>(2 + pick(rng, 3));
  const double gap = step * static_cast<double>(1 + pick(rng, static_cast<size_t>(H / step + 0.5) - 1));
  const double w_lo = 0.25 * static_cast<double>(1 + pick(rng, 3));
  const double l3 = random_left(rng, step);
  const DecreasingMeasure dist =
      make_measure({l3, l3 + H}, 0.0, {{l3 + gap, w_lo}, {l3 + H, 1.0 - w_lo}});
  const double w1 = w_lo * (H - gap);
  return make_tuple({uniform_w(random_left(rng, step), w1),
                     uniform_w(random_left(rng, step), H), dist});
}

// A random finite discrete measure: 1..max_atoms point masses at lattice
// offsets >= 0 from l, with positive weights summing to one.
inline DiscreteMeasure random_discrete(Rng& rng, double l, size_t max_atoms,
                                       double step = 0.015625) {
  const size_t k = 1 + pick(rng, max_atoms);
  std::vector<std::pair<double, double>> atoms;
  double total = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double x = l + step * static_cast<double>(pick(rng, 129));
    const double u = static_cast<double>(1 + pick(rng, 15));
    atoms.emplace_back(x, u);
    total += u;
  }
  for (auto& [x, u] : atoms) u /= total;
  DiscreteMeasure d;
  d.atoms = std::move(atoms);
  return d;
}

// A marginals-on-grid instance for planner/oracle agreement runs.  When
// `force_feasible`, the marginals are the pushforwards of an explicit random
// coupling on the slice, so a plan exists by construction; otherwise the
// marginals are random and the plane constant is the mean sum rounded to the
// lattice (usually infeasible, occasionally not).
struct MarginalInstance {
  Grid grid;
  std::vector<std::vector<double>> hists;
  double c = 0.0;
};

inline MarginalInstance random_marginal_instance(Rng& rng, bool force_feasible) {
  const size_t n = 2 + pick(rng, 2);
  const double h = 0.25;
  MarginalInstance inst;
  inst.grid.h = h;
  inst.grid.aligned = true;
  std::vector<size_t> nodes;
  double sum_l = 0.0;
  long s_max = 0;
  for (size_t k = 0; k < n; ++k) {
    const size_t nk = 2 + pick(rng, 8);
    const double l = random_left(rng, h);
    nodes.push_back(nk);
    sum_l += l;
    s_max += static_cast<long>(nk) - 1;
    std::vector<double> axis;
    for (size_t i = 0; i < nk; ++i) axis.push_back(l + h * static_cast<double>(i));
    inst.grid.axes.push_back(std::move(axis));
    inst.hists.emplace_back(nk, 0.0);
  }
  if (force_feasible) {
    const long S = 1 + static_cast<long>(pick(rng, static_cast<size_t>(s_max - 1)));
    inst.c = sum_l + h * static_cast<double>(S);
    // Random support points on the slice, random integer weights.
    std::vector<std::vector<int>> slice;
    std::vector<int> v(n, 0);
    const auto rec = [&](auto&& self, size_t k, long sum) -> void {
      if (k == n) {
        if (sum == S) slice.push_back(v);
        return;
      }
      long rest = 0;
      for (size_t q = k + 1; q < n; ++q) rest += static_cast<long>(nodes[q]) - 1;
      for (size_t i = 0; i < nodes[k]; ++i) {
        const long s = sum + static_cast<long>(i);
        if (s > S || s + rest < S) continue;
        v[k] = static_cast<int>(i);
        self(self, k + 1, s);
      }
    };
    rec(rec, 0, 0);
    if (slice.empty()) throw Error("instance generator built an empty slice");
    const size_t picks = 1 + pick(rng, std::min<size_t>(6, slice.size()));
    std::vector<double> units(slice.size(), 0.0);
    double total = 0.0;
    for (size_t q = 0; q < picks; ++q) {
      const size_t at = pick(rng, slice.size());
      const double u = static_cast<double>(1 + pick(rng, 7));
      units[at] += u;
      total += u;
    }
    for (size_t e = 0; e < slice.size(); ++e) {
      if (units[e] == 0.0) continue;
      for (size_t k = 0; k < n; ++k)
        inst.hists[k][static_cast<size_t>(slice[e][k])] += units[e] / total;
    }
  } else {
    double mean_sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
      double total = 0.0;
      for (size_t i = 0; i < nodes[k]; ++i) {
        const double u = static_cast<double>(pick(rng, 8));
        inst.hists[k][i] = u;
        total += u;
      }
      if (total == 0.0) {
        inst.hists[k][0] = 1.0;
        total = 1.0;
      }
      for (size_t i = 0; i < nodes[k]; ++i) {
        inst.hists[k][i] /= total;
        mean_sum += inst.hists[k][i] * inst.grid.axes[k][i];
      }
    }
    long S = std::lround((mean_sum - sum_l) / h);
    S = std::max(long{0}, std::min(S, s_max));
    inst.c = sum_l + h * static_cast<double>(S);
  }
  return inst;
}

} // namespace gen
} // namespace flatplan
