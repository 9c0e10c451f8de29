#pragma once

// One-dimensional probability measures with nonincreasing density.
//
// The basic object is a measure on a segment [l, r] made of an optional point
// mass at l plus an absolutely continuous part whose density does not increase
// on (l, r].  Every such measure that we handle is a finite mixture of
// "uniform components": uniform[l, t] for t in (l, r], plus the degenerate
// uniform[l, l] which is the point mass at l.  The mixture form is canonical
// and closed under every operation in this library, so measures are stored as
//
//     atom * delta(l)  +  sum_j  parts[j].w * uniform[l, parts[j].hi]
//
// with parts sorted by hi, duplicate hi merged, zero weights dropped.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flatplan {

// ---------------------------------------------------------------------------
// Tolerances.  Pinned once, used everywhere; tests assert against these same
// constants so a change here is a semantic change, not a tuning knob.
// ---------------------------------------------------------------------------

inline constexpr double kWeightTol   = 1e-12; // mixture weights, masses, recombination
inline constexpr double kSemanticTol = 1e-9;  // measure equality, grid alignment, marginals
inline constexpr double kSlackTol    = 1e-12; // flatness-criterion slack
inline constexpr double kProofTol    = 1e-10; // split preconditions, concavity probes
inline constexpr double kCostTol     = 1e-8;  // pairwise-cost identity residual
inline constexpr double kPivotTol    = 1e-9;  // simplex pivot threshold

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Density increases somewhere it must not.
struct NonincreasingViolation : Error { using Error::Error; };
// Total mass is not 1 (or a weight is negative beyond tolerance).
struct MassError : Error { using Error::Error; };
// Two measures that must share a left endpoint do not.
struct LeftEndpointMismatch : Error { using Error::Error; };
// An argument lies outside the documented domain.
struct DomainError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct Segment {
  double l = 0.0;
  double r = 0.0;
};

inline double width(const Segment& s) { return s.r - s.l; }

// One uniform component of a mixture: uniform on [l, hi] with weight w,
// where l is the owning measure's left endpoint.
struct UniformPart {
  double hi = 0.0;
  double w  = 0.0;
};

// A probability measure on seg with nonincreasing density: point mass `atom`
// at seg.l plus uniform components.  Invariants (enforced by make_measure):
//   - seg.l <= seg.r, all values finite
//   - parts sorted by hi strictly increasing, each hi in (seg.l, seg.r]
//   - each w > 0, and atom + sum(w) == 1 within kWeightTol
//   - atom in [0, 1]; the pure point mass is {atom = 1, parts = {}}
struct DecreasingMeasure {
  Segment seg;
  double atom = 0.0;
  std::vector<UniformPart> parts;
};

// A finitely supported probability measure, used as the "recipe" side of the
// smear/unsmear pair below.  atoms sorted by x, duplicates merged, w > 0.
struct DiscreteMeasure {
  std::vector<std::pair<double, double>> atoms; // (position, weight)
};

/// A step density description: density equals values[i] on
// (breakpoints[i], breakpoints[i+1]], plus a point mass at breakpoints[0].
// The degenerate segment is breakpoints = {x}, values = {}, atom = 1.
struct StepDensity {
  std::vector<double> breakpoints;
  std::vector<double> values;
  double atom = 0.0;
};

// ---------------------------------------------------------------------------
// Construction and canonical form
// ---------------------------------------------------------------------------

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " is not finite");
}

} // namespace detail

// Canonicalizes in place: folds parts at hi == l into the atom, sorts by hi,
// merges duplicate hi by adding weights, drops (numerically) zero weights.
// Does not check mass; make_measure does.
inline void canonicalize(DecreasingMeasure& m) {
  double atom = m.atom;
  std::vector<UniformPart> parts;
  parts.reserve(m.parts.size());
  for (const UniformPart& p : m.parts) {
    if (p.hi == m.seg.l) {
      atom += p.w; // uniform[l, l] is the point mass at l
    } else {
      parts.push_back(p);
    }
  }
  std::sort(parts.begin(), parts.end(),
            [](const UniformPart& a, const UniformPart& b) { return a.hi < b.hi; });
  std::vector<UniformPart> merged;
  for (const UniformPart& p : parts) {
    if (!merged.empty() && merged.back().hi == p.hi) {
      merged.back().w += p.w;
    } else {
      merged.push_back(p);
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const UniformPart& p) { return p.w <= 1e-15; }),
               merged.end());
  if (atom <= 1e-15) atom = 0.0; // same drop policy as zero-weight parts
  m.atom = atom;
  m.parts = std::move(merged);
}

// Validating constructor.  Throws MassError / DomainError.
inline DecreasingMeasure make_measure(Segment seg, double atom,
                                      std::vector<UniformPart> parts) {
  detail::require_finite(seg.l, "segment left endpoint");
  detail::require_finite(seg.r, "segment right endpoint");
  detail::require_finite(atom, "atom");
  if (seg.r < seg.l) throw DomainError("segment has r < l");
  DecreasingMeasure m{seg, atom, std::move(parts)};
  double total = m.atom;
  for (const UniformPart& p : m.parts) {
    detail::require_finite(p.hi, "part endpoint");
    detail::require_finite(p.w, "part weight");
    if (p.w < -kWeightTol) throw MassError("negative part weight");
    if (p.hi < seg.l || p.hi > seg.r)
      throw DomainError("part endpoint lies outside the segment");
    total += p.w;
  }
  if (m.atom < -kWeightTol) throw MassError("negative atom");
  if (std::abs(total - 1.0) > kWeightTol)
    throw MassError("total mass " + std::to_string(total) + " != 1");
  canonicalize(m);
  return m;
}

// uniform[l, r]; the point mass at l when r == l.
inline DecreasingMeasure make_uniform(double l, double r) {
  if (r == l) return make_measure({l, l}, 1.0, {});
  return make_measure({l, r}, 0.0, {{r, 1.0}});
}

inline DecreasingMeasure make_dirac(double x) { return make_uniform(x, x); }

// Field-exact equality of canonical forms.
inline bool operator==(const UniformPart& a, const UniformPart& b) {
  return a.hi == b.hi && a.w == b.w;
}
inline bool operator==(const DecreasingMeasure& a, const DecreasingMeasure& b) {
  return a.seg.l == b.seg.l && a.seg.r == b.seg.r && a.atom == b.atom &&
         a.parts == b.parts;
}

inline bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return a.atoms == b.atoms;
}

// ---------------------------------------------------------------------------
// Basic functionals
// ---------------------------------------------------------------------------

// E(uniform[l, t]) = (l + t) / 2, extended by linearity.
inline double expectation(const DecreasingMeasure& m) {
  double e = m.atom * m.seg.l;
  for (const UniformPart& p : m.parts) e += p.w * 0.5 * (m.seg.l + p.hi);
  return e;
}

// Second moment, used by the cost identity in the planner.
inline double second_moment(const DecreasingMeasure& m) {
  const double l = m.seg.l;
  double s = m.atom * l * l;
  // int_l^t x^2 dx / (t - l) = (t^2 + t l + l^2) / 3
  for (const UniformPart& p : m.parts)
    s += p.w * (p.hi * p.hi + p.hi * l + l * l) / 3.0;
  return s;
}

// Left-continuous distribution function: mass of (-inf, x).  The atom at l is
// excluded at x == l and fully included for any x > l.
inline double cdf(const DecreasingMeasure& m, double x) {
  if (x <= m.seg.l) return 0.0;
  double f = m.atom;
  for (const UniformPart& p : m.parts) {
    f += (x >= p.hi) ? p.w : p.w * (x - m.seg.l) / (p.hi - m.seg.l);
  }
  return f;
}

// Point mass located exactly at x (only the left endpoint can carry one).
inline double mass_at(const DecreasingMeasure& m, double x) {
  return x == m.seg.l ? m.atom : 0.0;
}

// Mass of the closed interval [a, b] with a > l (no atoms beyond l).
inline double interval_mass(const DecreasingMeasure& m, double a, double b) {
  return cdf(m, b) - cdf(m, a) + mass_at(m, b);
}

// Support right endpoint of the canonical form (l for a pure point mass).
inline double support_hi(const DecreasingMeasure& m) {
  return m.parts.empty() ? m.seg.l : m.parts.back().hi;
}

// Image under x -> s*x, s > 0.  Nonincreasing densities stay nonincreasing.
inline DecreasingMeasure scaled(const DecreasingMeasure& m, double s) {
  if (!(s > 0)) throw DomainError("scale factor must be positive");
  std::vector<UniformPart> parts;
  parts.reserve(m.parts.size());
  for (const UniformPart& p : m.parts) parts.push_back({s * p.hi, p.w});
  return make_measure({s * m.seg.l, s * m.seg.r}, m.atom, std::move(parts));
}

// ---------------------------------------------------------------------------
// Mixtures
// ---------------------------------------------------------------------------

// alpha * m1 + (1 - alpha) * m2.  Both measures must anchor at the same left
// endpoint, otherwise the result could not carry its atom in one place.  The
// result's segment extends to the larger r.
inline DecreasingMeasure convex_combine(double alpha, const DecreasingMeasure& m1,
                                        const DecreasingMeasure& m2) {
  if (alpha < -kWeightTol || alpha > 1.0 + kWeightTol)
    throw DomainError("mixture weight must lie in [0, 1]");
  alpha = std::min(1.0, std::max(0.0, alpha));
  if (m1.seg.l != m2.seg.l)
    throw LeftEndpointMismatch("cannot mix measures anchored at different left endpoints");
  std::vector<UniformPart> parts;
  parts.reserve(m1.parts.size() + m2.parts.size());
  for (const UniformPart& p : m1.parts) parts.push_back({p.hi, alpha * p.w});
  for (const UniformPart& p : m2.parts) parts.push_back({p.hi, (1.0 - alpha) * p.w});
  Segment seg{m1.seg.l, std::max(m1.seg.r, m2.seg.r)};
  return make_measure(seg, alpha * m1.atom + (1.0 - alpha) * m2.atom, std::move(parts));
}

// ---------------------------------------------------------------------------
// Step densities
// ---------------------------------------------------------------------------

// Turns a validated step density into mixture form.  With breakpoints
// x0 < ... < xm and values d1 >= ... >= dm >= 0, the component anchored at x0
// ending at xi carries weight (di - d(i+1)) * (xi - x0), where d(m+1) = 0;
// summing telescopes back to the step masses, so total mass is preserved.
inline DecreasingMeasure from_step_density(const StepDensity& s) {
  const size_t m = s.values.size();
  if (s.breakpoints.size() != m + 1)
    throw DomainError("need exactly one more breakpoint than step values");
  for (double x : s.breakpoints) detail::require_finite(x, "breakpoint");
  for (double d : s.values) detail::require_finite(d, "density value");
  detail::require_finite(s.atom, "atom");
  for (size_t i = 0; i + 1 < s.breakpoints.size(); ++i)
    if (!(s.breakpoints[i] < s.breakpoints[i + 1]))
      throw DomainError("breakpoints must be strictly increasing");
  const double l = s.breakpoints.front();
  const double r = s.breakpoints.back();
  double mass = s.atom;
  for (size_t i = 0; i < m; ++i) {
    if (s.values[i] < -kWeightTol) throw MassError("negative density value");
    if (i + 1 < m && s.values[i + 1] > s.values[i] + kWeightTol)
      throw NonincreasingViolation("step density increases at breakpoint " +
                                   std::to_string(i + 1));
    mass += s.values[i] * (s.breakpoints[i + 1] - s.breakpoints[i]);
  }
  if (std::abs(mass - 1.0) > kWeightTol)
    throw MassError("step density mass " + std::to_string(mass) + " != 1");
  std::vector<UniformPart> parts;
  parts.reserve(m);
  for (size_t i = 0; i < m; ++i) {
    const double next = (i + 1 < m) ? s.values[i + 1] : 0.0;
    const double w = std::max(0.0, s.values[i] - next) * (s.breakpoints[i + 1] - l);
    parts.push_back({s.breakpoints[i + 1], w});
  }
  return make_measure({l, r}, s.atom, std::move(parts));
}

// Inverse view: the density of the mixture is constant between consecutive
// component endpoints, equal to the sum of w/(hi - l) over components that
// still cover the stretch.
inline StepDensity to_step_density(const DecreasingMeasure& m) {
  StepDensity s;
  s.atom = m.atom;
  s.breakpoints.push_back(m.seg.l);
  for (size_t i = 0; i < m.parts.size(); ++i) {
    s.breakpoints.push_back(m.parts[i].hi);
    double d = 0.0;
    for (size_t j = i; j < m.parts.size(); ++j)
      d += m.parts[j].w / (m.parts[j].hi - m.seg.l);
    s.values.push_back(d);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Smear operator and its inverse
// ---------------------------------------------------------------------------

// Replaces every point mass w*delta(t) of `recipe` by w*uniform[l, t]: the
// measure is "smeared" leftwards onto [l, t].  This is a linear bijection
// between finitely supported measures on [l, inf) and our mixture class, and
// it halves the expectation gap: E(smear(nu, l)) = (l + E(nu)) / 2.
inline DecreasingMeasure smear(const DiscreteMeasure& recipe, double l) {
  double atom = 0.0;
  double r = l;
  std::vector<UniformPart> parts;
  parts.reserve(recipe.atoms.size());
  double mass = 0.0;
  for (const auto& [x, w] : recipe.atoms) {
    detail::require_finite(x, "atom position");
    detail::require_finite(w, "atom weight");
    if (x < l) throw DomainError("recipe atom lies left of the anchor point");
    if (w < -kWeightTol) throw MassError("negative recipe weight");
    mass += w;
    if (x == l) {
      atom += w;
    } else {
      parts.push_back({x, w});
      r = std::max(r, x);
    }
  }
  if (std::abs(mass - 1.0) > kWeightTol)
    throw MassError("recipe mass " + std::to_string(mass) + " != 1");
  return make_measure({l, r}, atom, std::move(parts));
}

// Reads the mixture weights back off.  Exact inverse of smear on canonical
// forms: no arithmetic happens, fields are repacked.
inline DiscreteMeasure unsmear(const DecreasingMeasure& m) {
  DiscreteMeasure d;
  if (m.atom > 0.0) d.atoms.emplace_back(m.seg.l, m.atom);
  for (const UniformPart& p : m.parts) d.atoms.emplace_back(p.hi, p.w);
  return d;
}

inline DiscreteMeasure make_discrete(std::vector<std::pair<double, double>> atoms) {
  std::sort(atoms.begin(), atoms.end());
  std::vector<std::pair<double, double>> merged;
  double mass = 0.0;
  for (const auto& [x, w] : atoms) {
    detail::require_finite(x, "atom position");
    if (w < -kWeightTol) throw MassError("negative atom weight");
    mass += w;
    if (w <= 1e-15) continue;
    if (!merged.empty() && merged.back().first == x) {
      merged.back().second += w;
    } else {
      merged.emplace_back(x, w);
    }
  }
  if (std::abs(mass - 1.0) > kWeightTol)
    throw MassError("discrete measure mass " + std::to_string(mass) + " != 1");
  return DiscreteMeasure{std::move(merged)};
}

inline double expectation(const DiscreteMeasure& d) {
  double e = 0.0;
  for (const auto& [x, w] : d.atoms) e += x * w;
  return e;
}

// ---------------------------------------------------------------------------
// Extremality with a pinned mean
// ---------------------------------------------------------------------------

// Among measures of this class on a fixed segment with expectation pinned to
// `e`, the extreme points are exactly the mixtures of at most two uniform
// components (their "recipe" has at most two support points: one linear
// constraint on top of the simplex raises the support bound from 1 to 2).
inline bool is_extreme_with_mean(const DecreasingMeasure& m, double e) {
  if (std::abs(expectation(m) - e) > kSemanticTol) return false;
  const size_t support = (m.atom > 0.0 ? 1 : 0) + m.parts.size();
  return support <= 2;
}

// ---------------------------------------------------------------------------
// Probe-grid validation and measure comparison
// ---------------------------------------------------------------------------

struct ValidationReport {
  bool ok = true;
  std::string violation; // empty when ok
};

namespace detail {

inline std::vector<double> probe_grid(const DecreasingMeasure& m, size_t min_points) {
  std::vector<double> xs;
  xs.push_back(m.seg.l);
  for (const UniformPart& p : m.parts) xs.push_back(p.hi);
  xs.push_back(m.seg.r);
  const double span = std::max(m.seg.r - m.seg.l, 1e-30);
  xs.push_back(m.seg.r + 0.125 * span); // one probe past the segment
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  // midpoints of every consecutive pair, then uniform fill to the quota
  std::vector<double> grid = xs;
  for (size_t i = 0; i + 1 < xs.size(); ++i) grid.push_back(0.5 * (xs[i] + xs[i + 1]));
  size_t fill = min_points > grid.size() ? min_points - grid.size() : 0;
  for (size_t i = 1; i <= fill; ++i)
    grid.push_back(m.seg.l + span * static_cast<double>(i) / static_cast<double>(fill + 1));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

} // namespace detail

// Checks the distribution-function characterization of the class on a probe
// grid (>= 100 points covering every component endpoint and the midpoints
// between them): F(l) = 0, total mass 1, concavity past l, and the interval
// mass bound  mass([a,b]) <= (b-a)/(a-l)  for probe pairs l < a < b.
inline ValidationReport validate_decreasing(const DecreasingMeasure& m,
                                            size_t min_points = 100) {
  ValidationReport rep;
  auto fail = [&rep](std::string why) {
    rep.ok = false;
    if (rep.violation.empty()) rep.violation = std::move(why);
  };
  if (cdf(m, m.seg.l) != 0.0) fail("F(l) != 0");
  const double span = std::max(m.seg.r - m.seg.l, 1e-30);
  if (std::abs(cdf(m, m.seg.r + span) - 1.0) > kSemanticTol) fail("total mass != 1");
  if (m.seg.l == m.seg.r) {
    if (!m.parts.empty() || std::abs(m.atom - 1.0) > kWeightTol)
      fail("degenerate segment must carry a unit point mass");
    return rep;
  }
  const std::vector<double> grid = detail::probe_grid(m, min_points);
  std::vector<double> interior; // probes strictly past l, where F must be concave
  for (double x : grid)
    if (x > m.seg.l) interior.push_back(x);
  std::vector<double> F(interior.size());
  for (size_t i = 0; i < interior.size(); ++i) F[i] = cdf(m, interior[i]);
  for (size_t i = 0; i + 2 < interior.size(); ++i) {
    const double x1 = interior[i], x2 = interior[i + 1], x3 = interior[i + 2];
    const double chord = F[i] + (F[i + 2] - F[i]) * (x2 - x1) / (x3 - x1);
    if (F[i + 1] < chord - kProofTol) {
      fail("distribution function fails concavity near x = " + std::to_string(x2));
      break;
    }
  }
  for (size_t i = 0; i < interior.size() && rep.ok; ++i) {
    for (size_t j = i + 1; j < interior.size(); ++j) {
      const double a = interior[i], b = interior[j];
      const double bound = (b - a) / (a - m.seg.l);
      if (interval_mass(m, a, b) > bound + kProofTol) {
        fail("interval mass bound fails on [" + std::to_string(a) + ", " +
             std::to_string(b) + "]");
        break;
      }
    }
  }
  return rep;
}

// True when alpha*a + (1-alpha)*b and target agree as measures (not merely as
// representations): distribution functions compared on the union of all
// component endpoints plus midpoints, point masses compared at every knot.
// Works across different anchor points, where convex_combine does not apply.
inline bool mixture_matches(double alpha, const DecreasingMeasure& a,
                            const DecreasingMeasure& b, const DecreasingMeasure& target,
                            double tol = kWeightTol) {
  std::vector<double> knots{a.seg.l, b.seg.l, target.seg.l,
                            a.seg.r, b.seg.r, target.seg.r};
  for (const UniformPart& p : a.parts) knots.push_back(p.hi);
  for (const UniformPart& p : b.parts) knots.push_back(p.hi);
  for (const UniformPart& p : target.parts) knots.push_back(p.hi);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<double> probes = knots;
  for (size_t i = 0; i + 1 < knots.size(); ++i)
    probes.push_back(0.5 * (knots[i] + knots[i + 1]));
  const double span = std::max(1.0, knots.back() - knots.front());
  probes.push_back(knots.back() + 0.5 * span);
  for (double x : probes) {
    const double mix = alpha * cdf(a, x) + (1.0 - alpha) * cdf(b, x);
    if (std::abs(mix - cdf(target, x)) > tol) return false;
  }
  for (double x : knots) {
    const double mix = alpha * mass_at(a, x) + (1.0 - alpha) * mass_at(b, x);
    if (std::abs(mix - mass_at(target, x)) > tol) return false;
  }
  return true;
}

// Measure-level closeness (same probe strategy as mixture_matches).
inline bool measures_close(const DecreasingMeasure& a, const DecreasingMeasure& b,
                           double tol = kSemanticTol) {
  return mixture_matches(1.0, a, a, b, tol);
}

} // namespace flatplan
