#pragma once

// Split constructions.
//
// Every tuple in the flat family that is not a tuple of point masses is a
// proper convex combination of two other members.  The four constructions
// here produce such a decomposition explicitly, each under its own
// precondition; together they cover the whole family (of two-part tuples).
// Each result is self-checked before it is returned: recombination must
// reproduce the input item by item, the halves must differ, and both halves
// must be family members.  A failed self-check is an internal error, never a
// caller error.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flatness.hpp"

namespace flatplan {

// Caller-facing: the tuple does not satisfy the construction's precondition.
struct PreconditionFailed : Error { using Error::Error; };
// Caller-facing: the peel-width hypotheses fail.
struct HypothesisViolated : Error { using Error::Error; };
// The admissible parameter window is narrower than numerical resolution.
struct NumericalDegenerate : Error { using Error::Error; };
// Internal: a constructed certificate failed its own validation.
struct CertificateError : Error { using Error::Error; };

enum class SplitKind { midpoint, exchange, peel, breakpoint };

inline const char* split_kind_name(SplitKind k) {
  switch (k) {
    case SplitKind::midpoint: return "midpoint";
    case SplitKind::exchange: return "exchange";
    case SplitKind::peel: return "peel";
    case SplitKind::breakpoint: return "breakpoint";
  }
  return "?";
}

// input == alpha * a + (1 - alpha) * b, item by item.
struct SplitResult {
  double alpha = 0.0;
  SplitKind kind = SplitKind::midpoint;
  MeasureTuple a, b;
};

// ---------------------------------------------------------------------------
// Certificate validation
// ---------------------------------------------------------------------------

inline void validate_split(const MeasureTuple& input, const SplitResult& s) {
  const size_t n = input.items.size();
  if (s.a.items.size() != n || s.b.items.size() != n)
    throw CertificateError("split halves have the wrong length");
  if (!(s.alpha > 0.0) || !(s.alpha < 1.0))
    throw CertificateError("split weight must lie strictly inside (0, 1)");
  for (size_t k = 0; k < n; ++k)
    if (!mixture_matches(s.alpha, s.a.items[k], s.b.items[k], input.items[k]))
      throw CertificateError("recombination fails at item " + std::to_string(k + 1));
  bool differ = false;
  for (size_t k = 0; k < n && !differ; ++k)
    differ = !mixture_matches(1.0, s.a.items[k], s.a.items[k], s.b.items[k]);
  if (!differ) throw CertificateError("split halves coincide");
  if (std::abs(s.a.c - input.c) > kSemanticTol || std::abs(s.b.c - input.c) > kSemanticTol)
    throw CertificateError("split halves moved the plane constant");
  std::string why;
  if (!in_flat_family(s.a, &why)) throw CertificateError("first half: " + why);
  if (!in_flat_family(s.b, &why)) throw CertificateError("second half: " + why);
}

// ---------------------------------------------------------------------------
// Shared view plumbing
// ---------------------------------------------------------------------------

namespace detail {

// Views every item, allowing atom-bearing two-part forms; rethrows view
// failures as precondition failures (the caller handed us the wrong shape).
inline std::vector<TwoPartItem> viewed(const MeasureTuple& t, const char* who) {
  std::vector<TwoPartItem> v;
  v.reserve(t.items.size());
  try {
    for (const DecreasingMeasure& m : t.items) v.push_back(two_part_view(m, true));
  } catch (const NotTwoPartForm& e) {
    throw PreconditionFailed(std::string(who) + ": " + e.what());
  }
  return v;
}

inline double headroom_of(const std::vector<TwoPartItem>& v, double C) {
  double sum_l = 0.0;
  for (const TwoPartItem& x : v) sum_l += x.l;
  return C - sum_l;
}

inline bool is_single_component(const TwoPartItem& v) { return v.lo == v.hi; }

} // namespace detail

// ---------------------------------------------------------------------------
// Midpoint split
// ---------------------------------------------------------------------------
//
// Applies to all-uniform tuples where the right-endpoint sum is tight:
// sum(hi) = C + (hi_m - l_m), which forces the m-th width to equal the sum of
// the others.  Cutting every segment at its midpoint and regrouping halves
// the tuple: one half takes the left piece at m and right pieces elsewhere,
// the other the complement.

namespace detail {

inline std::optional<std::string> midpoint_blocker(const std::vector<TwoPartItem>& v,
                                                   double C, int m) {
  const int n = static_cast<int>(v.size());
  if (m < 0 || m >= n) return "index out of range";
  for (int k = 0; k < n; ++k)
    if (!is_single_component(v[k]))
      return "item " + std::to_string(k + 1) + " is not a plain uniform";
  if (!(v[m].l < v[m].hi)) return "distinguished item is a point mass";
  double hi_sum = 0.0, w_sum = 0.0;
  for (const TwoPartItem& x : v) { hi_sum += x.hi; w_sum += x.hi - x.l; }
  const double wm = v[m].hi - v[m].l;
  if (std::abs(hi_sum - C - wm) > kProofTol)
    return "right-endpoint sum is not tight at the distinguished item";
  if (std::abs(wm - (w_sum - wm)) > kProofTol)
    return "distinguished width does not balance the remaining widths";
  return std::nullopt;
}

} // namespace detail

inline SplitResult split_midpoint(const MeasureTuple& t, int m) {
  const std::vector<TwoPartItem> v = detail::viewed(t, "midpoint split");
  if (auto why = detail::midpoint_blocker(v, t.c, m))
    throw PreconditionFailed("midpoint split: " + *why);
  std::vector<DecreasingMeasure> a, b;
  for (int k = 0; k < static_cast<int>(v.size()); ++k) {
    const double mid = 0.5 * (v[k].l + v[k].hi);
    if (k == m) {
      a.push_back(make_uniform(v[k].l, mid));
      b.push_back(make_uniform(mid, v[k].hi));
    } else {
      a.push_back(make_uniform(mid, v[k].hi));
      b.push_back(make_uniform(v[k].l, mid));
    }
  }
  SplitResult s{0.5, SplitKind::midpoint, make_tuple(std::move(a)), make_tuple(std::move(b))};
  validate_split(t, s);
  return s;
}

// ---------------------------------------------------------------------------
// Exchange split
// ---------------------------------------------------------------------------
//
// Applies when two items are genuine two-part mixtures.  Shifting mixture
// weight t*(hi_i - lo_i) at item j and t*(hi_j - lo_j) at item i in opposite
// directions moves the two expectations by exactly opposite amounts, so both
// halves keep the plane constant.  t sits at the midpoint of its admissible
// window.

namespace detail {

inline std::optional<std::string> exchange_blocker(const std::vector<TwoPartItem>& v,
                                                   int i, int j) {
  const int n = static_cast<int>(v.size());
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) return "need two distinct indices";
  for (int k : {i, j}) {
    if (is_single_component(v[k]) || !(v[k].w_lo > 0.0) || !(v[k].w_lo < 1.0))
      return "item " + std::to_string(k + 1) + " is not a genuine two-part mixture";
  }
  return std::nullopt;
}

} // namespace detail

inline SplitResult split_exchange(const MeasureTuple& t, int i, int j) {
  const std::vector<TwoPartItem> v = detail::viewed(t, "exchange split");
  if (auto why = detail::exchange_blocker(v, i, j))
    throw PreconditionFailed("exchange split: " + *why);
  const double span_i = v[i].hi - v[i].lo;
  const double span_j = v[j].hi - v[j].lo;
  const double cap = std::min(std::min(v[j].w_lo, 1.0 - v[j].w_lo) / span_i,
                              std::min(v[i].w_lo, 1.0 - v[i].w_lo) / span_j);
  const double shift = 0.5 * cap;
  if (!(shift > 0.0)) throw NumericalDegenerate("exchange split: empty weight window");
  const double eps_i = shift * span_i;
  const double eps_j = shift * span_j;
  std::vector<DecreasingMeasure> a, b;
  for (int k = 0; k < static_cast<int>(v.size()); ++k) {
    if (k == i) {
      a.push_back(rebuild({v[k].l, v[k].lo, v[k].hi, v[k].w_lo - eps_j}));
      b.push_back(rebuild({v[k].l, v[k].lo, v[k].hi, v[k].w_lo + eps_j}));
    } else if (k == j) {
      a.push_back(rebuild({v[k].l, v[k].lo, v[k].hi, v[k].w_lo + eps_i}));
      b.push_back(rebuild({v[k].l, v[k].lo, v[k].hi, v[k].w_lo - eps_i}));
    } else {
      a.push_back(t.items[k]);
      b.push_back(t.items[k]);
    }
  }
  SplitResult s{0.5, SplitKind::exchange, make_tuple(std::move(a)), make_tuple(std::move(b))};
  validate_split(t, s);
  return s;
}

// ---------------------------------------------------------------------------
// Peel widths
// ---------------------------------------------------------------------------
//
// Given a boundary whose last segment is distinguished, assigns to each of
// the first N-1 segments a nonnegative "peel width" xi_k <= width_k, balanced
// (no xi exceeds the sum of the others) and large enough in total:
// sum(hi) over the first N-1 plus l_N < C + sum(xi)/2.  These widths say how
// much each segment can be cut back from the right in lockstep.

struct PeelWidths {
  std::vector<double> xi; // one per leading segment (all but the last)
};

inline PeelWidths make_peel_widths(const std::vector<Segment>& segs, double C) {
  const size_t n = segs.size();
  if (n < 2) throw DomainError("peel widths need at least two segments");
  double sum_l = 0.0;
  for (const Segment& s : segs) sum_l += s.l;
  const double headroom = C - sum_l;
  double lead_hi = 0.0, lead_mean = 0.0, total_w = 0.0;
  for (size_t k = 0; k + 1 < n; ++k) {
    if (!(width(segs[k]) < headroom))
      throw HypothesisViolated("leading segment " + std::to_string(k + 1) +
                               " is as wide as the headroom");
    lead_hi += segs[k].r;
    lead_mean += 0.5 * (segs[k].l + segs[k].r);
    total_w += width(segs[k]);
  }
  const double l_last = segs[n - 1].l;
  if (!(lead_hi + l_last > C))
    throw HypothesisViolated("leading right-endpoint sum does not exceed the plane constant");
  if (!(C > lead_mean + l_last))
    throw HypothesisViolated("plane constant does not exceed the leading midpoint sum");

  PeelWidths out;
  out.xi.resize(n - 1);
  size_t heavy = n; // index with 2 * width > total, if any (at most one)
  for (size_t k = 0; k + 1 < n; ++k)
    if (2.0 * width(segs[k]) > total_w) heavy = k;
  for (size_t k = 0; k + 1 < n; ++k)
    out.xi[k] = (k == heavy) ? total_w - width(segs[k]) : width(segs[k]);

  // Self-check the four advertised conditions.
  double xi_sum = 0.0;
  for (size_t k = 0; k + 1 < n; ++k) {
    const double w = width(segs[k]);
    if (out.xi[k] < -kWeightTol || out.xi[k] > w + kWeightTol)
      throw CertificateError("peel width escapes [0, width]");
    if ((w > 0.0) != (out.xi[k] > 0.0))
      throw CertificateError("peel width positivity does not track segment width");
    xi_sum += out.xi[k];
  }
  for (size_t k = 0; k + 1 < n; ++k)
    if (out.xi[k] > xi_sum - out.xi[k] + kProofTol)
      throw CertificateError("peel widths are unbalanced");
  if (!(lead_hi + l_last < C + 0.5 * xi_sum + kProofTol))
    throw CertificateError("peel widths are too small in total");
  return out;
}

// ---------------------------------------------------------------------------
// Peel split
// ---------------------------------------------------------------------------

namespace detail {

// (item - a0 * uniform[zeta, hi]) / (1 - a0), where hi is the item's support
// right endpoint and the subtraction must leave a nonincreasing density.
inline DecreasingMeasure subtract_uniform_tail(const DecreasingMeasure& item,
                                               double a0, double zeta) {
  const double hi = support_hi(item);
  if (hi == item.seg.l) return item; // point mass: uniform[l, l] cancels exactly
  if (!(zeta < hi)) throw CertificateError("tail subtraction needs zeta < hi");
  StepDensity s = to_step_density(item);
  // Make zeta a breakpoint, duplicating the stretch value it lands in.
  if (zeta > s.breakpoints.front()) {
    for (size_t i = 0; i + 1 < s.breakpoints.size(); ++i) {
      if (s.breakpoints[i] < zeta && zeta < s.breakpoints[i + 1]) {
        s.breakpoints.insert(s.breakpoints.begin() + static_cast<long>(i) + 1, zeta);
        s.values.insert(s.values.begin() + static_cast<long>(i), s.values[i]);
        break;
      }
    }
  }
  const double cut = a0 / (hi - zeta);
  const double scale = 1.0 / (1.0 - a0);
  for (size_t i = 0; i < s.values.size(); ++i) {
    double d = s.values[i];
    if (s.breakpoints[i] >= zeta) d -= cut;
    if (d < 0.0) {
      if (d < -kProofTol)
        throw CertificateError("tail subtraction drove a density negative");
      d = 0.0;
    }
    s.values[i] = d * scale;
  }
  s.atom *= scale;
  return from_step_density(s);
}

struct PeelContext {
  int m = -1;            // distinguished index
  double headroom = 0.0; // C - sum(l)
  double lead_hi = 0.0;  // sum of hi over k != m
  PeelWidths widths;     // xi for k != m, in skip-m order
  std::vector<int> others;
};

inline std::optional<PeelContext> peel_pick(const std::vector<TwoPartItem>& v, double C) {
  const int n = static_cast<int>(v.size());
  double sum_l = 0.0, mean_sum = 0.0;
  for (const TwoPartItem& x : v) { sum_l += x.l; mean_sum += 0.5 * (x.l + x.hi); }
  const double headroom = C - sum_l;
  for (int m = 0; m < n; ++m) {
    const double wm = v[m].hi - v[m].l;
    if (!(C > mean_sum - 0.5 * wm)) continue;
    bool ok = true;
    double lead_hi = 0.0;
    for (int k = 0; k < n && ok; ++k) {
      if (k == m) continue;
      if (!(v[k].hi - v[k].l < headroom)) ok = false;
      lead_hi += v[k].hi;
    }
    if (!ok) continue;
    if (!(lead_hi + v[m].l > C)) continue;
    PeelContext ctx;
    ctx.m = m;
    ctx.headroom = headroom;
    ctx.lead_hi = lead_hi;
    std::vector<Segment> reordered;
    for (int k = 0; k < n; ++k)
      if (k != m) {
        reordered.push_back({v[k].l, v[k].hi});
        ctx.others.push_back(k);
      }
    reordered.push_back({v[m].l, v[m].hi});
    ctx.widths = make_peel_widths(reordered, C);
    return ctx;
  }
  return std::nullopt;
}

} // namespace detail

// Peels a thin slab off the right end of every leading segment while growing
// the distinguished item from its left endpoint, in proportions that keep the
// expectation sum fixed.  One half of the split is the peeled sliver (a tuple
// of uniforms), the other is the input with the sliver removed.
inline SplitResult split_peel(const MeasureTuple& t) {
  const std::vector<TwoPartItem> v = detail::viewed(t, "peel split");
  require_in_family(t, "peel split");
  auto ctx = detail::peel_pick(v, t.c);
  if (!ctx)
    throw PreconditionFailed("peel split: no index satisfies the peel hypotheses");
  const int m = ctx->m;
  const TwoPartItem& vm = v[m];

  const double D = 2.0 * (ctx->lead_hi + vm.l - t.c);
  double S = 0.0;
  for (double x : ctx->widths.xi) S += x;
  const double eps1 = S - D;
  double eps2 = 0.0;
  for (double x : ctx->widths.xi) eps2 = std::max(eps2, x * D / S);

  // Largest admissible removal weight, limited by the thinnest uniform tail.
  double cap_w = 1.0;
  for (size_t q = 0; q < ctx->others.size(); ++q) {
    const TwoPartItem& vk = v[ctx->others[q]];
    const double wk = vk.hi - vk.l;
    const double zeta0 = vk.hi - ctx->widths.xi[q] * D / S;
    const double frac = (wk > 0.0) ? (vk.hi - zeta0) / wk : 1.0;
    cap_w = std::min(cap_w, (1.0 - vk.w_lo) * frac);
  }

  double t0 = 0.0, a0 = 0.0;
  if (vm.lo == vm.l) {
    // The distinguished item already sits on its left endpoint: no growth
    // needed, remove the sliver at full available weight.
    a0 = std::min(vm.w_lo, cap_w);
    if (!(a0 > 0.0)) throw NumericalDegenerate("peel split: empty weight window");
  } else {
    const double d1 = vm.w_lo / (vm.lo - vm.l) + (1.0 - vm.w_lo) / (vm.hi - vm.l);
    double window = std::min({vm.lo - vm.l, eps1, eps2, cap_w / d1});
    for (size_t q = 0; q < ctx->others.size(); ++q) {
      const TwoPartItem& vk = v[ctx->others[q]];
      window = std::min(window, ctx->headroom - (vk.hi - vk.l));
    }
    if (!(window > 1e-10))
      throw NumericalDegenerate("peel split: parameter window below resolution");
    t0 = 0.5 * window;
    a0 = t0 * d1;
  }

  std::vector<DecreasingMeasure> a(t.items.size(), make_dirac(0.0));
  std::vector<DecreasingMeasure> b(t.items.size(), make_dirac(0.0));
  for (size_t q = 0; q < ctx->others.size(); ++q) {
    const int k = ctx->others[q];
    const double zeta = v[k].hi - ctx->widths.xi[q] * (D + t0) / S;
    a[k] = make_uniform(zeta, v[k].hi);
    b[k] = detail::subtract_uniform_tail(t.items[k], a0, zeta);
  }
  a[m] = make_uniform(vm.l, vm.l + t0);
  if (vm.lo == vm.l) {
    b[m] = rebuild({vm.l, vm.l, vm.hi, (vm.w_lo - a0) / (1.0 - a0)});
  } else {
    // Remainder of the distinguished item, anchored at l + t0.
    const double d1 = vm.w_lo / (vm.lo - vm.l) + (1.0 - vm.w_lo) / (vm.hi - vm.l);
    const double d2 = (1.0 - vm.w_lo) / (vm.hi - vm.l);
    const double scale = 1.0 / (1.0 - a0);
    StepDensity s;
    s.breakpoints.push_back(vm.l + t0);
    if (vm.lo < vm.hi) {
      s.breakpoints.push_back(vm.lo);
      s.breakpoints.push_back(vm.hi);
      s.values.push_back(d1 * scale);
      s.values.push_back(d2 * scale);
    } else {
      s.breakpoints.push_back(vm.hi);
      s.values.push_back(d1 * scale);
    }
    b[m] = from_step_density(s);
  }

  SplitResult s{a0, SplitKind::peel, make_tuple(std::move(a)), make_tuple(std::move(b))};
  validate_split(t, s);
  return s;
}

// ---------------------------------------------------------------------------
// Breakpoint split
// ---------------------------------------------------------------------------
//
// Applies when exactly one item is a genuine two-part mixture and both it and
// a uniform partner have width equal to the headroom.  Rewriting the mixture
// in the contiguous basis uniform[l, lo] / uniform[lo, hi] with weight beta,
// one half pairs the left piece with a right-anchored cut of the partner, the
// other half takes the complements.

namespace detail {

inline std::optional<std::string> breakpoint_blocker(const std::vector<TwoPartItem>& v,
                                                     double C, int partner, int dist) {
  const int n = static_cast<int>(v.size());
  if (n < 3) return "needs at least three items";
  if (partner < 0 || dist < 0 || partner >= n || dist >= n || partner == dist)
    return "need two distinct indices";
  if (is_single_component(v[dist]) || !(v[dist].w_lo > 0.0) || !(v[dist].w_lo < 1.0))
    return "distinguished item is not a genuine two-part mixture";
  for (int k = 0; k < n; ++k)
    if (k != dist && !is_single_component(v[k]))
      return "item " + std::to_string(k + 1) + " is not a plain uniform";
  const double headroom = headroom_of(v, C);
  if (std::abs((v[partner].hi - v[partner].l) - headroom) > kProofTol)
    return "partner width does not match the headroom";
  if (std::abs((v[dist].hi - v[dist].l) - headroom) > kProofTol)
    return "distinguished width does not match the headroom";
  return std::nullopt;
}

} // namespace detail

inline SplitResult split_breakpoint(const MeasureTuple& t, int partner, int dist) {
  const std::vector<TwoPartItem> v = detail::viewed(t, "breakpoint split");
  if (auto why = detail::breakpoint_blocker(v, t.c, partner, dist))
    throw PreconditionFailed("breakpoint split: " + *why);
  const TwoPartItem& d = v[dist];
  const double beta = d.w_lo + (1.0 - d.w_lo) * (d.lo - d.l) / (d.hi - d.l);
  const double cut = v[partner].hi - beta * (v[partner].hi - v[partner].l);
  std::vector<DecreasingMeasure> a, b;
  for (int k = 0; k < static_cast<int>(v.size()); ++k) {
    if (k == dist) {
      a.push_back(make_uniform(d.l, d.lo));
      b.push_back(make_uniform(d.lo, d.hi));
    } else if (k == partner) {
      a.push_back(make_uniform(cut, v[k].hi));
      b.push_back(make_uniform(v[k].l, cut));
    } else {
      a.push_back(t.items[k]);
      b.push_back(t.items[k]);
    }
  }
  SplitResult s{beta, SplitKind::breakpoint, make_tuple(std::move(a)), make_tuple(std::move(b))};
  validate_split(t, s);
  return s;
}

// Convenience form: partner second-to-last, distinguished item last.
inline SplitResult split_breakpoint(const MeasureTuple& t) {
  const int n = static_cast<int>(t.items.size());
  return split_breakpoint(t, n - 2, n - 1);
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct ClassifyResult {
  bool irreducible = false;      // tuple of point masses summing to C
  SplitKind kind = SplitKind::midpoint;
  int m = -1;                    // midpoint / peel distinguished index
  int i = -1, j = -1;            // exchange pair, or breakpoint (partner, dist)
};

// Names an applicable split for any reducible two-part tuple in the family,
// trying the constructions in a fixed order.  Reducible tuples for which no
// construction applies do not exist; hitting that branch is an internal error.
inline ClassifyResult classify(const MeasureTuple& t) {
  require_in_family(t, "classify");
  ClassifyResult r;
  bool all_point = true;
  for (const DecreasingMeasure& m : t.items) all_point = all_point && m.parts.empty();
  if (all_point) { // point masses only; irreducible regardless of declared segments
    r.irreducible = true;
    return r;
  }
  const std::vector<TwoPartItem> v = detail::viewed(t, "classify");
  for (int m = 0; m < static_cast<int>(v.size()); ++m) {
    if (!detail::midpoint_blocker(v, t.c, m)) {
      r.kind = SplitKind::midpoint;
      r.m = m;
      return r;
    }
  }
  std::vector<int> two_part;
  for (int k = 0; k < static_cast<int>(v.size()); ++k)
    if (!detail::is_single_component(v[k])) two_part.push_back(k);
  if (two_part.size() >= 2) {
    r.kind = SplitKind::exchange;
    r.i = two_part[0];
    r.j = two_part[1];
    return r;
  }
  if (auto ctx = detail::peel_pick(v, t.c)) {
    r.kind = SplitKind::peel;
    r.m = ctx->m;
    return r;
  }
  if (two_part.size() == 1) {
    const int dist = two_part[0];
    for (int u = 0; u < static_cast<int>(v.size()); ++u) {
      if (u == dist) continue;
      if (!detail::breakpoint_blocker(v, t.c, u, dist)) {
        r.kind = SplitKind::breakpoint;
        r.i = u;
        r.j = dist;
        return r;
      }
    }
  }
  throw CertificateError("classify: reducible tuple matched no construction");
}

inline SplitResult apply_classified(const MeasureTuple& t, const ClassifyResult& c) {
  switch (c.kind) {
    case SplitKind::midpoint: return split_midpoint(t, c.m);
    case SplitKind::exchange: return split_exchange(t, c.i, c.j);
    case SplitKind::peel: return split_peel(t);
    case SplitKind::breakpoint: return split_breakpoint(t, c.i, c.j);
  }
  throw DomainError("unknown split kind");
}

// ---------------------------------------------------------------------------
// Bounded refinement
// ---------------------------------------------------------------------------

struct RefineNode {
  MeasureTuple tuple;
  bool irreducible = false; // true leaf: point masses on the plane
  bool expanded = false;
  double alpha = 0.0;
  SplitKind kind = SplitKind::midpoint;
  std::unique_ptr<RefineNode> a, b;
};

inline RefineNode refine(const MeasureTuple& t, int depth) {
  RefineNode node;
  node.tuple = t;
  const ClassifyResult c = classify(t);
  if (c.irreducible) {
    node.irreducible = true;
    return node;
  }
  if (depth <= 0) return node;
  SplitResult s = apply_classified(t, c);
  node.expanded = true;
  node.alpha = s.alpha;
  node.kind = s.kind;
  node.a = std::make_unique<RefineNode>(refine(s.a, depth - 1));
  node.b = std::make_unique<RefineNode>(refine(s.b, depth - 1));
  return node;
}

inline size_t leaf_count(const RefineNode& n) {
  if (!n.expanded) return 1;
  return leaf_count(*n.a) + leaf_count(*n.b);
}

} // namespace flatplan
