#pragma once

// Tuples of measures and the flatness criterion.
//
// An N-tuple admits a "flat" transport plan -- a coupling supported on the
// plane x_1 + ... + x_N = C, where C is the sum of the expectations -- exactly
// when no segment is wider than the total headroom C - sum(l).  This header
// holds the tuple type, that criterion, and the two-part view used by the
// split constructions.

#include <string>
#include <vector>

#include "measures.hpp"

namespace flatplan {

// An item's support does not fill its declared segment.
struct SupportMismatch : Error { using Error::Error; };
// An item is not a mixture of at most two uniform components.
struct NotTwoPartForm : Error { using Error::Error; };
// A tuple (or boundary) fails the membership conditions of the flat family.
struct NotInFamily : Error { using Error::Error; };

struct MeasureTuple {
  std::vector<DecreasingMeasure> items;
  double c = 0.0; // cached sum of expectations
};

inline MeasureTuple make_tuple(std::vector<DecreasingMeasure> items) {
  if (items.size() < 2) throw DomainError("a tuple needs at least two items");
  double c = 0.0;
  for (const DecreasingMeasure& m : items) c += expectation(m);
  return MeasureTuple{std::move(items), c};
}

inline double recompute_c(const MeasureTuple& t) {
  double c = 0.0;
  for (const DecreasingMeasure& m : t.items) c += expectation(m);
  return c;
}

// ---------------------------------------------------------------------------
// Flatness criterion
// ---------------------------------------------------------------------------

struct FlatVerdict {
  bool flat = false;
  double c = 0.0;
  int witness = 0;            // 1-based index of the first violated item, 0 if none
  std::vector<double> slacks; // (c - sum(l)) - (r_k - l_k), one per item
};

// Decides flatness.  Requires every item to genuinely fill its declared
// segment (the criterion is about supports, not about containers), so an item
// whose mixture stops short of seg.r is rejected.
inline FlatVerdict flat_verdict(const MeasureTuple& t) {
  for (size_t k = 0; k < t.items.size(); ++k) {
    const DecreasingMeasure& m = t.items[k];
    if (support_hi(m) != m.seg.r)
      throw SupportMismatch("item " + std::to_string(k + 1) +
                            " does not fill its declared segment");
  }
  FlatVerdict v;
  v.c = t.c;
  double sum_l = 0.0;
  for (const DecreasingMeasure& m : t.items) sum_l += m.seg.l;
  const double headroom = v.c - sum_l;
  v.flat = true;
  v.slacks.reserve(t.items.size());
  for (size_t k = 0; k < t.items.size(); ++k) {
    const double slack = headroom - width(t.items[k].seg);
    v.slacks.push_back(slack);
    if (slack < -kSlackTol && v.witness == 0) {
      v.flat = false;
      v.witness = static_cast<int>(k + 1);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Boundaries
// ---------------------------------------------------------------------------

// A boundary (l_k, r_k)_k is compatible with plane constant C when every
// width fits the headroom: 0 <= r_k - l_k <= C - sum(l).
inline bool boundary_compatible(const std::vector<Segment>& segs, double C) {
  double sum_l = 0.0;
  for (const Segment& s : segs) {
    if (s.r < s.l) return false;
    sum_l += s.l;
  }
  const double headroom = C - sum_l;
  for (const Segment& s : segs)
    if (width(s) > headroom + kSlackTol) return false;
  return true;
}

// Verdict for the tuple of *uniform* measures on the given segments: that
// tuple is flat exactly when no width exceeds the sum of the others.
struct BalanceReport {
  bool balanced = false;
  double c = 0.0;              // sum of segment midpoints
  std::vector<double> slacks;  // sum_{i != k} width_i - width_k
  std::vector<int> tight;      // 1-based indices where the slack vanishes
};

inline BalanceReport balance_report(const std::vector<Segment>& segs) {
  BalanceReport rep;
  double total_w = 0.0;
  for (const Segment& s : segs) {
    if (s.r < s.l) throw DomainError("segment has r < l");
    rep.c += 0.5 * (s.l + s.r);
    total_w += width(s);
  }
  rep.balanced = true;
  for (size_t k = 0; k < segs.size(); ++k) {
    const double slack = total_w - 2.0 * width(segs[k]);
    rep.slacks.push_back(slack);
    if (slack < -kSlackTol) rep.balanced = false;
    if (std::abs(slack) <= kProofTol) rep.tight.push_back(static_cast<int>(k + 1));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Two-part views
// ---------------------------------------------------------------------------

// View of an item as w_lo * uniform[l, lo] + (1 - w_lo) * uniform[l, hi],
// with l <= lo <= hi.  This is the shape every split construction works on.
struct TwoPartItem {
  double l = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double w_lo = 0.0;
};

// Views a single item.  Plain forms: one component (lo == hi, w_lo = 1/2),
// two components, or a degenerate segment (the point mass, lo == hi == l).
// With allow_atom_forms, an atom of weight a < 1 next to one component is
// accepted as the lo == l case (w_lo = a); otherwise atoms are rejected and
// callers must pass the degenerate-uniform encoding instead.
inline TwoPartItem two_part_view(const DecreasingMeasure& m, bool allow_atom_forms) {
  if (m.seg.l == m.seg.r) return {m.seg.l, m.seg.l, m.seg.l, 0.5};
  if (m.atom > 0.0) {
    if (!allow_atom_forms)
      throw NotTwoPartForm("point mass must be encoded as a degenerate uniform component");
    if (m.parts.size() != 1 || m.atom >= 1.0)
      throw NotTwoPartForm("atom-bearing item is not a two-part mixture");
    return {m.seg.l, m.seg.l, m.parts[0].hi, m.atom};
  }
  if (m.parts.size() == 1) {
    const double t = m.parts[0].hi;
    return {m.seg.l, t, t, 0.5};
  }
  if (m.parts.size() == 2)
    return {m.seg.l, m.parts[0].hi, m.parts[1].hi, m.parts[0].w};
  throw NotTwoPartForm("item mixes more than two uniform components");
}

inline DecreasingMeasure rebuild(const TwoPartItem& v) {
  double atom = 0.0;
  std::vector<UniformPart> parts;
  if (v.lo == v.l) atom += v.w_lo; else parts.push_back({v.lo, v.w_lo});
  if (v.hi == v.l) atom += 1.0 - v.w_lo; else parts.push_back({v.hi, 1.0 - v.w_lo});
  return make_measure({v.l, v.hi}, atom, std::move(parts));
}

// Strict tuple view: every item in plain two-part form (no loose atoms) and
// the induced boundary compatible with the tuple's plane constant.
inline std::vector<TwoPartItem> as_two_part(const MeasureTuple& t) {
  std::vector<TwoPartItem> views;
  views.reserve(t.items.size());
  for (const DecreasingMeasure& m : t.items) views.push_back(two_part_view(m, false));
  std::vector<Segment> segs;
  segs.reserve(views.size());
  for (const TwoPartItem& v : views) segs.push_back({v.l, v.hi});
  if (!boundary_compatible(segs, t.c))
    throw NotInFamily("two-part boundary is not compatible with the plane constant");
  return views;
}

// ---------------------------------------------------------------------------
// Structural inequalities
// ---------------------------------------------------------------------------

// Two families of inequalities every member tuple satisfies:
//   (a)  C <= sum (l_k + hi_k) / 2, with equality forcing all items uniform;
//   (b)  sum hi >= C + (hi_k - l_k) for every k.
// They are asserted (within kProofTol) and the slacks reported, with tight
// indices flagged.
struct SlackReport {
  double mean_slack = 0.0;               // sum of midpoints - C
  std::vector<double> right_slacks;      // sum(hi) - C - (hi_k - l_k)
  bool mean_tight = false;
  std::vector<int> tight;                // 1-based indices with vanishing (b)
};

inline SlackReport slack_report(const std::vector<TwoPartItem>& views, double C) {
  SlackReport rep;
  double mean_sum = 0.0, hi_sum = 0.0;
  for (const TwoPartItem& v : views) {
    mean_sum += 0.5 * (v.l + v.hi);
    hi_sum += v.hi;
  }
  rep.mean_slack = mean_sum - C;
  if (rep.mean_slack < -kProofTol)
    throw NotInFamily("plane constant exceeds the sum of segment midpoints");
  rep.mean_tight = std::abs(rep.mean_slack) <= kProofTol;
  for (size_t k = 0; k < views.size(); ++k) {
    const double slack = hi_sum - C - (views[k].hi - views[k].l);
    rep.right_slacks.push_back(slack);
    if (slack < -kProofTol)
      throw NotInFamily("right-endpoint sum falls short at item " +
                        std::to_string(k + 1));
    if (std::abs(slack) <= kProofTol) rep.tight.push_back(static_cast<int>(k + 1));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Family membership
// ---------------------------------------------------------------------------

// The "flat family" with plane constant C: tuples whose expectations sum to C
// and whose canonical supports form a compatible boundary.  Anything in here
// is flat, and the splits stay inside it.
inline bool in_flat_family(const MeasureTuple& t, std::string* why = nullptr) {
  const double c = recompute_c(t);
  if (std::abs(c - t.c) > kSemanticTol) {
    if (why) *why = "cached plane constant disagrees with the expectation sum";
    return false;
  }
  std::vector<Segment> segs;
  segs.reserve(t.items.size());
  for (const DecreasingMeasure& m : t.items) segs.push_back({m.seg.l, support_hi(m)});
  if (!boundary_compatible(segs, t.c)) {
    if (why) *why = "support boundary is not compatible with the plane constant";
    return false;
  }
  return true;
}

inline void require_in_family(const MeasureTuple& t, const char* who) {
  std::string why;
  if (!in_flat_family(t, &why)) throw NotInFamily(std::string(who) + ": " + why);
}

} // namespace flatplan
