// Acceptance gate for the flatplan library: one PASS/FAIL line per criterion.
//
//   A1  uniform tuples admit exact on-plane couplings on aligned grids
//   A2  a point mass plus a spread measure keeps a positive cost gap
//   A3  classified splits always validate on generated family tuples
//   A4  smear halves the mean and unsmear is its exact right inverse
//   A5  float planner and exact-rational oracle agree on feasibility
//   A6  the slack criterion matches discretized feasibility off-boundary
//   A7  the pairwise/squared-sum cost identity holds on every coupling
//
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "flatplan/flatness.hpp"
#include "flatplan/gen.hpp"
#include "flatplan/oracle.hpp"
#include "flatplan/planner.hpp"
#include "flatplan/splits.hpp"

using namespace flatplan;

namespace {

int g_failures = 0;

struct CollectedCoupling {
  Coupling coupling;
  Grid grid;
  double c;
  std::string origin;
};

std::vector<CollectedCoupling> g_couplings;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs one criterion body; the body returns a detail string on success and
// throws (or we throw std::runtime_error) on failure.
template <typename Body>
void criterion(const char* name, double budget_s, Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    detail = e.what();
    ok = false;
  }
  const double dt = seconds_since(t0);
  if (ok && budget_s > 0.0 && dt > budget_s) {
    ok = false;
    detail += " [exceeded " + std::to_string(budget_s) + " s budget]";
  }
  std::printf("%s %s (%.2f s) %s\n", name, ok ? "PASS" : "FAIL", dt, detail.c_str());
  if (!ok) ++g_failures;
}

void fail(const std::string& why) { throw std::runtime_error(why); }

std::string a1_uniform_tuples() {
  const double h = 1.0 / 16.0;
  for (size_t n : {2, 3, 4}) {
    const MeasureTuple t =
        make_tuple(std::vector<DecreasingMeasure>(n, make_uniform(0.0, 1.0)));
    const Grid grid = make_grid(tuple_segments(t), h, true);
    const auto hists = discretize(t, grid);
    const Coupling plan = build_flat_plan(grid, hists, t.c, 0.0);
    const CouplingCheck chk = verify_coupling(plan, grid, hists, t.c);
    const CostReport cost = cost_report(plan, grid, t.c);
    if (cost.sum_sq_about_c != 0.0)
      fail("N=" + std::to_string(n) + ": on-plane cost is not exactly zero");
    if (chk.max_marginal_dev > 1e-9)
      fail("N=" + std::to_string(n) + ": marginal deviation " +
           std::to_string(chk.max_marginal_dev));
    g_couplings.push_back({plan, grid, t.c, "A1 N=" + std::to_string(n)});
  }
  return "N=2,3,4 at h=1/16: band-0 plans exist, on-plane cost exactly 0";
}

std::string a2_gap() {
  const MeasureTuple t = make_tuple({make_dirac(0.0), make_uniform(0.0, 1.0)});
  // The continuum optimum of the squared-sum cost for this pair is
  // integral of (x - 1/2)^2 dx = 1/12; the discrete value must sit nearby.
  const double h = 1.0 / 64.0;
  const Grid grid = make_grid(tuple_segments(t), h, true);
  const auto hists = discretize(t, grid);
  const OracleValue v = oracle_min_cost(grid, hists, t.c);
  if (std::abs(v.min_cost_d - 1.0 / 12.0) > 0.01)
    fail("minimum " + std::to_string(v.min_cost_d) + " is not within 0.01 of 1/12");
  if (v.min_cost == Rational(0)) fail("cost gap vanished");
  g_couplings.push_back({v.coupling, grid, t.c, "A2 minimizer"});
  for (const double hk : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 64.0}) {
    const Grid gk = make_grid(tuple_segments(t), hk, true);
    bool refused = false;
    try {
      build_flat_plan(gk, discretize(t, gk), t.c, 0.0);
    } catch (const Infeasible&) {
      refused = true;
    } catch (const SliceEmpty&) {
      refused = true;
    }
    if (!refused) fail("band-0 plan unexpectedly exists at h=" + std::to_string(hk));
  }
  return "exact minimum " + std::to_string(v.min_cost_d) +
         " stays near 1/12; band-0 plans refused at h=1/8,1/16,1/64";
}

std::string a3_split_certificates() {
  gen::Rng rng(20260814);
  int applied = 0, degenerate = 0, irreducible = 0;
  int seen[4] = {0, 0, 0, 0};
  for (int i = 0; i < 1000; ++i) {
    MeasureTuple t;
    if (i % 10 == 7) {
      const size_t n = 2 + gen::pick(rng, 3);
      t = gen::midpoint_instance(rng, n, gen::pick(rng, n));
    } else if (i % 10 == 3) {
      t = gen::breakpoint_instance(rng);
    } else {
      t = gen::random_family_tuple(rng, 2 + gen::pick(rng, 3), 0.0);
    }
    try {
      const ClassifyResult c = classify(t);
      if (c.irreducible) {
        ++irreducible;
        continue;
      }
      const SplitResult s = apply_classified(t, c); // validates its own certificate
      ++seen[static_cast<int>(s.kind)];
      ++applied;
    } catch (const NumericalDegenerate&) {
      ++degenerate;
    } catch (const CertificateError& e) {
      fail(std::string("invalid certificate on instance ") + std::to_string(i) + ": " +
           e.what());
    }
  }
  if (applied < 800)
    fail("only " + std::to_string(applied) + "/1000 instances produced a split");
  for (int k = 0; k < 4; ++k)
    if (seen[k] == 0) fail("split construction " + std::to_string(k) + " never exercised");
  return std::to_string(applied) + " splits validated, " + std::to_string(degenerate) +
         " numerically degenerate, " + std::to_string(irreducible) +
         " irreducible, 0 invalid certificates";
}

std::string a4_smear_structure() {
  gen::Rng rng(4242);
  for (int i = 0; i < 1000; ++i) {
    const double l = gen::random_left(rng, 0.25);
    const DiscreteMeasure nu = gen::random_discrete(rng, l, 6);
    double mean = 0.0;
    for (const auto& [x, wt] : nu.atoms) mean += x * wt;
    const DecreasingMeasure m = smear(nu, l);
    if (std::abs(expectation(m) - 0.5 * (l + mean)) > 1e-12)
      fail("smear mean identity broke at instance " + std::to_string(i));
    if (!(m == smear(unsmear(m), l)))
      fail("smear(unsmear(.)) changed a field at instance " + std::to_string(i));
  }
  return "1000 measures: mean halved to 1e-12, inverse round trip field-exact";
}

std::string a5_planner_oracle_agreement() {
  gen::Rng rng(555);
  int feasible_count = 0;
  for (int i = 0; i < 50; ++i) {
    const gen::MarginalInstance inst = gen::random_marginal_instance(rng, i % 2 == 0);
    bool planner_ok = true;
    Coupling plan;
    try {
      plan = build_flat_plan(inst.grid, inst.hists, inst.c, 0.0);
    } catch (const Infeasible&) {
      planner_ok = false;
    } catch (const SliceEmpty&) {
      planner_ok = false;
    }
    const OracleValue v = oracle_min_cost(inst.grid, inst.hists, inst.c);
    const bool oracle_ok = oracle_slice_feasible(inst.grid, inst.hists, inst.c);
    if (planner_ok != oracle_ok)
      fail("verdicts differ on instance " + std::to_string(i));
    if ((v.min_cost == Rational(0)) != oracle_ok)
      fail("oracle minimum and feasibility disagree on instance " + std::to_string(i));
    if (planner_ok) {
      ++feasible_count;
      const CostReport cost = cost_report(plan, inst.grid, inst.c);
      if (cost.sum_sq_about_c != 0.0 || v.min_cost != Rational(0))
        fail("feasible instance " + std::to_string(i) + " has nonzero cost");
      g_couplings.push_back({plan, inst.grid, inst.c, "A5 plan " + std::to_string(i)});
    }
    g_couplings.push_back({v.coupling, inst.grid, inst.c, "A5 oracle " + std::to_string(i)});
  }
  if (feasible_count < 25)
    fail("only " + std::to_string(feasible_count) + " feasible instances; wanted >= 25");
  return "50/50 verdicts agree (" + std::to_string(feasible_count) +
         " feasible, costs exactly 0)";
}

std::string a6_criterion_vs_discretization() {
  gen::Rng rng(606);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const bool wants_flat = i % 2 == 0;
    const MeasureTuple t =
        wants_flat ? gen::random_family_tuple(rng, 3, 0.05, 0.25, 2)
                   : gen::random_violating_tuple(rng, 2 + gen::pick(rng, 2), 0.05);
    const FlatVerdict verdict = flat_verdict(t);
    if (verdict.flat != wants_flat)
      fail("generator produced the wrong class at instance " + std::to_string(i));
    const double h = snap_spacing(t, 1.0 / 32.0);
    if (h > 1.0 / 32.0 + 1e-15) fail("snapped spacing exceeds 1/32");
    const Grid grid = make_grid(tuple_segments(t), h, true);
    const bool feasible = oracle_slice_feasible(grid, discretize(t, grid), t.c);
    if (feasible != verdict.flat)
      fail("criterion and band-0 feasibility disagree at instance " + std::to_string(i));
    ++checked;
  }
  return std::to_string(checked) + "/100 verdicts match band-0 feasibility (slack "
         "margin 0.05, h <= 1/32)";
}

std::string a7_cost_identity() {
  if (g_couplings.size() < 10)
    fail("too few couplings collected: " + std::to_string(g_couplings.size()));
  double worst = 0.0;
  std::string worst_origin;
  for (const CollectedCoupling& cc : g_couplings) {
    const CostReport cost = cost_report(cc.coupling, cc.grid, cc.c);
    if (cost.identity_residual > worst) {
      worst = cost.identity_residual;
      worst_origin = cc.origin;
    }
    if (cost.identity_residual > 1e-8)
      fail("identity residual " + std::to_string(cost.identity_residual) + " on " +
           cc.origin);
  }
  return std::to_string(g_couplings.size()) + " couplings, worst residual " +
         std::to_string(worst) + " (" + worst_origin + ") <= 1e-8";
}

} // namespace

int main() {
  criterion("A1", 10.0, a1_uniform_tuples);
  criterion("A2", 30.0, a2_gap);
  criterion("A3", 60.0, a3_split_certificates);
  criterion("A4", 0.0, a4_smear_structure);
  criterion("A5", 0.0, a5_planner_oracle_agreement);
  criterion("A6", 0.0, a6_criterion_vs_discretization);
  criterion("A7", 0.0, a7_cost_identity);
  if (g_failures != 0) {
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("acceptance: all criteria passed\n");
  return 0;
}
