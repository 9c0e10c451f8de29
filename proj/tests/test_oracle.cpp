#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "flatplan/gen.hpp"
#include "flatplan/oracle.hpp"

using namespace flatplan;

// ---------------------------------------------------------------------------
// Rational snapping
// ---------------------------------------------------------------------------

TEST_CASE("doubles snap to small-denominator rationals when one is near") {
  CHECK(exact::from_double(0.25) == Rational(1, 4));
  CHECK(exact::from_double(-0.75) == Rational(-3, 4));
  CHECK(exact::from_double(1.0 / 3.0) == Rational(1, 3));
  CHECK(exact::from_double(0.1) == Rational(1, 10));
  CHECK(exact::from_double(0.0) == Rational(0));
  // 0.3 + 5e-8 is too far from 3/10 and its own fraction needs a huge
  // denominator, so the exact binary value is kept.
  const Rational far = exact::from_double(0.30000005);
  CHECK(denominator(far) > 1000000);
  CHECK(exact::to_double(far) == 0.30000005);
}

TEST_CASE("marginal snapping repairs rounding but rejects real defects") {
  const std::vector<Rational> m = exact::snap_marginal({0.625, 0.25, 0.125});
  CHECK(m[0] == Rational(5, 8));
  CHECK(m[1] == Rational(1, 4));
  CHECK(m[2] == Rational(1, 8));

  const std::vector<Rational> thirds =
      exact::snap_marginal({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  CHECK(thirds[0] + thirds[1] + thirds[2] == Rational(1));

  // A 4e-8 rounding defect lands on the largest weight.
  const std::vector<Rational> fixed = exact::snap_marginal({0.50000004, 0.5});
  CHECK(fixed[0] + fixed[1] == Rational(1));
  CHECK(fixed[1] == Rational(1, 2));

  CHECK_THROWS_AS(exact::snap_marginal({0.6, 0.6}), MassError);
  CHECK_THROWS_AS(exact::snap_marginal({-0.1, 1.1}), MassError);
}

TEST_CASE("exact grids reproduce node coordinates as rationals") {
  const Grid g = make_grid({{0.5, 1.0}}, 0.25);
  const exact::ExactGrid eg = exact::snap_grid(g, 0.75);
  CHECK(eg.h == Rational(1, 4));
  CHECK(eg.c == Rational(3, 4));
  CHECK(eg.node(0, 0) == Rational(1, 2));
  CHECK(eg.node(0, 2) == Rational(1));
}

// ---------------------------------------------------------------------------
// Rational simplex
// ---------------------------------------------------------------------------

TEST_CASE("rational simplex decides block-feasibility exactly") {
  const std::vector<std::vector<int>> cols = {{0, 0}, {1, 1}};
  const std::vector<size_t> blocks = {2, 2};
  {
    exact::RationalSimplex lp(cols, blocks,
                              {Rational(1, 2), Rational(1, 2), Rational(1, 2),
                               Rational(1, 2)});
    REQUIRE(lp.phase1());
    const Rational v = lp.phase2({Rational(1), Rational(0)});
    CHECK(v == Rational(1, 2));
    const std::vector<Rational> x = lp.solution();
    CHECK(x[0] == Rational(1, 2));
    CHECK(x[1] == Rational(1, 2));
  }
  {
    // The two blocks pin x to incompatible values.
    exact::RationalSimplex lp(cols, blocks,
                              {Rational(1, 2), Rational(1, 2), Rational(1, 4),
                               Rational(3, 4)});
    CHECK_FALSE(lp.phase1());
  }
  CHECK_THROWS_AS(
      exact::RationalSimplex(cols, blocks,
                             {Rational(-1, 2), Rational(3, 2), Rational(1, 2),
                              Rational(1, 2)}),
      MassError);
}

// ---------------------------------------------------------------------------
// Minimum plane deviation
// ---------------------------------------------------------------------------

TEST_CASE("flat marginals reach the plane exactly") {
  const MeasureTuple t = make_tuple({make_uniform(0.0, 1.0), make_uniform(0.0, 1.0)});
  const Grid g = make_grid(tuple_segments(t), 0.25);
  const OracleValue v = oracle_min_cost(g, discretize(t, g), t.c);
  CHECK(v.min_cost == 0);
  CHECK(v.min_cost_d == 0.0);
  CHECK(!v.coupling.w.empty());
}

TEST_CASE("a product of two points scores its squared offset") {
  const MeasureTuple t = make_tuple({make_dirac(0.3), make_dirac(0.7)});
  const Grid g = make_grid(tuple_segments(t), 0.25);
  const auto hists = discretize(t, g);
  CHECK(oracle_min_cost(g, hists, 1.0).min_cost == 0);
  CHECK(oracle_min_cost(g, hists, 1.25).min_cost == Rational(1, 16));
}

TEST_CASE("point-next-to-uniform minimum matches the closed form") {
  // The only coupling is the product, so the minimum is the discrete second
  // moment about the joint mean: 1/12 + h^2/6, which at h = 1/8 is 11/128.
  const MeasureTuple t = make_tuple({make_dirac(0.0), make_uniform(0.0, 1.0)});
  const Grid g = make_grid(tuple_segments(t), 0.125);
  const OracleValue v = oracle_min_cost(g, discretize(t, g), t.c);
  CHECK(v.min_cost == Rational(11, 128));
  CHECK_THAT(v.min_cost_d, Catch::Matchers::WithinAbs(11.0 / 128.0, 1e-15));
}

TEST_CASE("oracle refuses oversized problems") {
  const MeasureTuple t = make_tuple({make_uniform(0.0, 1.0), make_uniform(0.0, 1.0),
                                     make_uniform(0.0, 1.0)});
  const Grid g = make_grid(tuple_segments(t), 1.0 / 59.0);
  CHECK_THROWS_AS(oracle_min_cost(g, discretize(t, g), t.c), SizeExceeded);
}

// ---------------------------------------------------------------------------
// Slice feasibility
// ---------------------------------------------------------------------------

TEST_CASE("slice feasibility on reference instances") {
  {
    const MeasureTuple t = make_tuple({make_uniform(0.0, 1.0), make_uniform(0.0, 1.0),
                                       make_uniform(0.0, 1.0)});
    const Grid g = make_grid(tuple_segments(t), 0.25);
    CHECK(oracle_slice_feasible(g, discretize(t, g), t.c));
  }
  {
    const MeasureTuple t = make_tuple({make_dirac(0.0), make_uniform(0.0, 1.0)});
    const Grid g = make_grid(tuple_segments(t), 0.25);
    CHECK_FALSE(oracle_slice_feasible(g, discretize(t, g), t.c));
  }
  {
    const MeasureTuple t = make_tuple({make_uniform(0.0, 1.0), make_uniform(2.0, 3.0)});
    const Grid g = make_grid(tuple_segments(t), 0.25);
    CHECK(oracle_slice_feasible(g, discretize(t, g), t.c));
    // A plane constant off the lattice leaves nothing to stand on.
    CHECK_FALSE(oracle_slice_feasible(g, discretize(t, g), 3.1));
  }
}

TEST_CASE("zero minimum and slice feasibility are the same judgement") {
  gen::Rng rng(37);
  int feasible_seen = 0, infeasible_seen = 0;
  for (int i = 0; i < 10; ++i) {
    const gen::MarginalInstance inst = gen::random_marginal_instance(rng, i % 2 == 0);
    const bool feas = oracle_slice_feasible(inst.grid, inst.hists, inst.c);
    const OracleValue v = oracle_min_cost(inst.grid, inst.hists, inst.c);
    CHECK(feas == (v.min_cost == 0));
    (feas ? feasible_seen : infeasible_seen)++;
  }
  CHECK(feasible_seen >= 5); // the forced-feasible half must all land
}

// ---------------------------------------------------------------------------
// Agreement with the floating-point planner
// ---------------------------------------------------------------------------

TEST_CASE("planner and oracle agree on band-zero feasibility") {
  gen::Rng rng(41);
  for (int i = 0; i < 10; ++i) {
    const gen::MarginalInstance inst = gen::random_marginal_instance(rng, i % 3 != 0);
    bool planner_feasible = true;
    try {
      const Coupling c = build_flat_plan(inst.grid, inst.hists, inst.c);
      const CouplingCheck chk = verify_coupling(c, inst.grid, inst.hists, inst.c);
      CHECK(chk.max_marginal_dev <= 1e-9);
    } catch (const Infeasible&) {
      planner_feasible = false;
    } catch (const SliceEmpty&) {
      planner_feasible = false;
    }
    CHECK(planner_feasible == oracle_slice_feasible(inst.grid, inst.hists, inst.c));
  }
}
