// flatplan: flat transport plans for tuples of nonincreasing measures.
//
// Subcommands: check, plan, split, refine, oracle, cost, selftest.
// Exit codes: 0 success (flat / feasible), 1 input error, 2 precondition
// rejection, 3 criterion says not flat, 4 no plan at this discretization.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "flatplan/gen.hpp"
#include "flatplan/io.hpp"
#include "flatplan/oracle.hpp"
#include "flatplan/planner.hpp"
#include "flatplan/splits.hpp"

namespace {

using namespace flatplan;

// FLATPLAN_LOG: error < warn (default) < info < debug.
int log_level() {
  static const int level = [] {
    const char* env = std::getenv("FLATPLAN_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "error") return 0;
    if (v == "warn") return 1;
    if (v == "info") return 2;
    if (v == "debug") return 3;
    return 1;
  }();
  return level;
}

void log_at(int level, const char* tag, const std::string& msg) {
  if (log_level() >= level) std::cerr << tag << msg << "\n";
}
void log_warn(const std::string& msg) { log_at(1, "warning: ", msg); }
void log_info(const std::string& msg) { log_at(2, "info: ", msg); }
void log_debug(const std::string& msg) { log_at(3, "debug: ", msg); }

struct RunConfig {
  std::string input;
  std::string output;
  std::string grid_path;
  std::string kind;
  double target_h = 0.0625;
  double band = 0.0;
  double plane_c = std::numeric_limits<double>::quiet_NaN();
  int depth = 8;
  unsigned long long seed = 42;
};

void emit(const std::string& text, const std::string& output_path) {
  std::cout << text << "\n";
  if (!output_path.empty()) io::write_file(output_path, text + "\n");
}

std::string grid_sidecar(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".grid.json";
  return csv_path + ".grid.json";
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

int cmd_check(const RunConfig& cfg) {
  const MeasureTuple t = io::load_tuple(cfg.input);
  const FlatVerdict v = flat_verdict(t);
  emit(io::to_json(v), cfg.output);
  return v.flat ? 0 : 3;
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

int cmd_plan(const RunConfig& cfg) {
  const MeasureTuple t = io::load_tuple(cfg.input);
  const std::vector<Segment> segs = tuple_segments(t);
  double h = 0.0;
  std::string align_why;
  try {
    h = snap_spacing(t, cfg.target_h);
    // An aligned spacing a thousand times finer than asked means the
    // endpoints have no usable common lattice; treat like misalignment.
    if (h < cfg.target_h / 1024.0) {
      align_why = "aligned spacing " + io::fmt(h) + " is far below the target";
      h = 0.0;
    }
  } catch (const NoAlignment& e) {
    align_why = e.what();
  }
  Grid grid;
  double band = cfg.band;
  if (h > 0.0) {
    log_info("snapped spacing: " + io::fmt(h));
    try {
      grid = make_grid(segs, h, true);
    } catch (const AlignmentError& e) {
      align_why = e.what();
      h = 0.0;
    }
  }
  if (h == 0.0) {
    h = cfg.target_h;
    grid = make_grid(segs, h, false);
    band = std::max(band, 0.5 * h * static_cast<double>(t.items.size()));
    log_warn(align_why + "; using an unaligned cover grid at spacing " + io::fmt(h) +
             " and widening band to " + io::fmt(band));
  }
  const std::vector<std::vector<double>> hists = discretize(t, grid);
  if (log_level() >= 3) {
    std::string sizes;
    for (const auto& axis : grid.axes)
      sizes += (sizes.empty() ? "" : " x ") + std::to_string(axis.size());
    log_debug("grid nodes: " + sizes);
  }
  const Coupling plan = build_flat_plan(grid, hists, t.c, band);
  const CouplingCheck chk = verify_coupling(plan, grid, hists, t.c);
  const CostReport cost = cost_report(plan, grid, t.c);
  const std::string out_csv = cfg.output.empty() ? "plan.csv" : cfg.output;
  io::write_file(out_csv, io::to_csv(plan, grid));
  io::write_file(grid_sidecar(out_csv), io::to_json(grid, t.c) + "\n");
  std::string report = "{\"h\": " + io::fmt(grid.h) + ", \"band\": " + io::fmt(band) +
                       ", \"rows\": " + std::to_string(plan.w.size()) +
                       ", \"max_marginal_dev\": " + io::fmt(chk.max_marginal_dev) +
                       ", \"max_plane_dev\": " + io::fmt(chk.max_plane_dev) +
                       ", \"mass_defect\": " + io::fmt(chk.mass_defect) +
                       ", \"pairwise\": " + io::fmt(cost.pairwise) +
                       ", \"sum_sq_about_c\": " + io::fmt(cost.sum_sq_about_c) +
                       ", \"identity_residual\": " + io::fmt(cost.identity_residual) +
                       ", \"coupling\": \"" + out_csv + "\"}";
  std::cout << report << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// split / refine
// ---------------------------------------------------------------------------

SplitResult split_by_kind(const MeasureTuple& t, const std::string& kind) {
  if (kind == "midpoint") {
    for (size_t m = 0; m < t.items.size(); ++m) {
      try {
        return split_midpoint(t, static_cast<int>(m));
      } catch (const PreconditionFailed&) {
      }
    }
    throw PreconditionFailed("midpoint split: no index satisfies the hypothesis");
  }
  if (kind == "exchange") {
    for (size_t i = 0; i < t.items.size(); ++i)
      for (size_t j = i + 1; j < t.items.size(); ++j) {
        try {
          return split_exchange(t, static_cast<int>(i), static_cast<int>(j));
        } catch (const PreconditionFailed&) {
        }
      }
    throw PreconditionFailed("exchange split: no index pair satisfies the hypothesis");
  }
  if (kind == "peel") return split_peel(t);
  if (kind == "breakpoint") {
    for (size_t d = 0; d < t.items.size(); ++d)
      for (size_t p = 0; p < t.items.size(); ++p) {
        if (p == d) continue;
        try {
          return split_breakpoint(t, static_cast<int>(p), static_cast<int>(d));
        } catch (const PreconditionFailed&) {
        }
      }
    throw PreconditionFailed("breakpoint split: no index pair satisfies the hypothesis");
  }
  throw PreconditionFailed("unknown split kind \"" + kind +
                           "\" (want midpoint, exchange, peel, or breakpoint)");
}

int cmd_split(const RunConfig& cfg) {
  const MeasureTuple t = io::load_tuple(cfg.input);
  SplitResult s = [&] {
    if (!cfg.kind.empty()) return split_by_kind(t, cfg.kind);
    const ClassifyResult c = classify(t);
    if (c.irreducible)
      throw PreconditionFailed("tuple of point masses: nothing to split");
    return apply_classified(t, c);
  }();
  emit(io::to_json(s), cfg.output);
  return 0;
}

int cmd_refine(const RunConfig& cfg) {
  const MeasureTuple t = io::load_tuple(cfg.input);
  const RefineNode tree = refine(t, cfg.depth);
  log_info("refinement leaves: " + std::to_string(leaf_count(tree)));
  emit(io::to_json(tree), cfg.output);
  return 0;
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

int cmd_oracle(const RunConfig& cfg) {
  const MeasureTuple t = io::load_tuple(cfg.input);
  const double h = snap_spacing(t, cfg.target_h);
  const Grid grid = make_grid(tuple_segments(t), h, true);
  const std::vector<std::vector<double>> hists = discretize(t, grid);
  const OracleValue v = oracle_min_cost(grid, hists, t.c);
  const bool feasible = oracle_slice_feasible(grid, hists, t.c);
  const std::string ratio = numerator(v.min_cost).str() + "/" + denominator(v.min_cost).str();
  std::string report = "{\"h\": " + io::fmt(grid.h) + ", \"min_cost\": \"" + ratio +
                       "\", \"min_cost_float\": " + io::fmt(v.min_cost_d) +
                       ", \"slice_feasible\": " + (feasible ? "true" : "false") + "}";
  emit(report, cfg.output);
  return 0;
}

// ---------------------------------------------------------------------------
// cost
// ---------------------------------------------------------------------------

int cmd_cost(const RunConfig& cfg) {
  const io::CouplingFile cf = io::coupling_from_csv(io::read_file(cfg.input));
  double c = cfg.plane_c;
  if (std::isnan(c)) {
    const std::string sidecar =
        cfg.grid_path.empty() ? grid_sidecar(cfg.input) : cfg.grid_path;
    c = io::grid_from_json(io::parse_text(io::read_file(sidecar))).c;
  }
  const CostReport rep = cost_report_points(cf.pts, cf.coupling.w, c);
  std::string report = "{\"C\": " + io::fmt(c) + ", \"rows\": " + std::to_string(cf.pts.size()) +
                       ", \"pairwise\": " + io::fmt(rep.pairwise) +
                       ", \"sum_sq\": " + io::fmt(rep.sum_sq) +
                       ", \"sum_sq_about_c\": " + io::fmt(rep.sum_sq_about_c) +
                       ", \"identity_residual\": " + io::fmt(rep.identity_residual) + "}";
  emit(report, cfg.output);
  return 0;
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

int cmd_selftest(const RunConfig& cfg) {
  gen::Rng rng(cfg.seed);
  int failures = 0;
  const auto suite = [&](const char* name, auto&& body) {
    try {
      body();
      std::cout << "suite " << name << ": ok\n";
    } catch (const std::exception& e) {
      std::cout << "suite " << name << ": FAIL (" << e.what() << ")\n";
      ++failures;
    }
  };

  suite("measures", [&] {
    for (int i = 0; i < 200; ++i) {
      const double w = 0.25 * static_cast<double>(1 + gen::pick(rng, 4));
      const DecreasingMeasure m = gen::random_shape(rng, gen::random_left(rng, 0.25), w, 0.25);
      const ValidationReport rep = validate_decreasing(m);
      if (!rep.ok) throw Error("generated shape failed validation: " + rep.violation);
      const std::string once = io::to_json(m);
      const std::string twice = io::to_json(io::measure_from_json(io::parse_text(once)));
      if (once != twice) throw Error("serialization round trip changed bytes");
    }
  });

  suite("smear", [&] {
    for (int i = 0; i < 200; ++i) {
      const double l = gen::random_left(rng, 0.25);
      const DiscreteMeasure nu = gen::random_discrete(rng, l, 6);
      double mean = 0.0;
      for (const auto& [x, wt] : nu.atoms) mean += x * wt;
      const DecreasingMeasure m = smear(nu, l);
      if (std::abs(expectation(m) - 0.5 * (l + mean)) > 1e-12)
        throw Error("smear did not halve the expectation");
      const DiscreteMeasure back = unsmear(m);
      const DecreasingMeasure again = smear(back, l);
      if (!(m == again)) throw Error("unsmear is not a right inverse of smear");
    }
  });

  suite("splits", [&] {
    for (int i = 0; i < 100; ++i) {
      const size_t n = 2 + gen::pick(rng, 3);
      const MeasureTuple t = gen::random_family_tuple(rng, n, 0.0);
      const ClassifyResult c = classify(t);
      if (!c.irreducible) apply_classified(t, c); // self-validating
    }
    for (int i = 0; i < 20; ++i) {
      const MeasureTuple t = gen::midpoint_instance(rng, 3, gen::pick(rng, 3));
      split_by_kind(t, "midpoint");
    }
    for (int i = 0; i < 20; ++i) split_breakpoint(gen::breakpoint_instance(rng), 1, 2);
  });

  suite("planner-oracle", [&] {
    for (int i = 0; i < 12; ++i) {
      const gen::MarginalInstance inst = gen::random_marginal_instance(rng, i % 2 == 0);
      bool planner_ok = true;
      try {
        build_flat_plan(inst.grid, inst.hists, inst.c, 0.0);
      } catch (const Infeasible&) {
        planner_ok = false;
      } catch (const SliceEmpty&) {
        planner_ok = false;
      }
      const bool oracle_ok = oracle_slice_feasible(inst.grid, inst.hists, inst.c);
      if (planner_ok != oracle_ok) throw Error("planner and oracle verdicts differ");
    }
  });

  suite("criterion", [&] {
    for (int i = 0; i < 8; ++i) {
      const bool wants_flat = i % 2 == 0;
      const MeasureTuple t = wants_flat
                                 ? gen::random_family_tuple(rng, 3, 0.1, 0.25, 2)
                                 : gen::random_violating_tuple(rng, 2 + gen::pick(rng, 2), 0.1);
      const double h = snap_spacing(t, 1.0 / 32.0);
      const Grid grid = make_grid(tuple_segments(t), h, true);
      const bool feasible = oracle_slice_feasible(grid, discretize(t, grid), t.c);
      if (feasible != wants_flat) throw Error("criterion and oracle disagree");
    }
  });

  if (failures == 0) std::cout << "selftest ok\n";
  return failures == 0 ? 0 : 2;
}

// ---------------------------------------------------------------------------

int dispatch(const std::string& name, const RunConfig& cfg) {
  try {
    if (name == "check") return cmd_check(cfg);
    if (name == "plan") return cmd_plan(cfg);
    if (name == "split") return cmd_split(cfg);
    if (name == "refine") return cmd_refine(cfg);
    if (name == "oracle") return cmd_oracle(cfg);
    if (name == "cost") return cmd_cost(cfg);
    if (name == "selftest") return cmd_selftest(cfg);
    std::cerr << "error: unknown subcommand " << name << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SupportMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NonincreasingViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const LeftEndpointMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const MassError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Infeasible& e) {
    std::cerr << "no plan: " << e.what() << "\n";
    return 4;
  } catch (const SliceEmpty& e) {
    std::cerr << "no plan: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "rejected: " << e.what() << "\n";
    return 2;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"flat transport plans for tuples of nonincreasing measures"};
  app.require_subcommand(1);
  RunConfig cfg;

  CLI::App* check = app.add_subcommand("check", "criterion verdict for a tuple file");
  check->add_option("--input", cfg.input, "tuple JSON")->required();
  check->add_option("--output", cfg.output, "also write the verdict JSON here");

  CLI::App* plan = app.add_subcommand("plan", "build a flat plan on an aligned grid");
  plan->set_help_flag("--help", "print this help message and exit"); // frees -h for --h
  plan->add_option("--input", cfg.input, "tuple JSON")->required();
  plan->add_option("--output", cfg.output, "coupling CSV path (default plan.csv)");
  plan->add_option("--h", cfg.target_h, "target grid spacing (snapped down)");
  plan->add_option("--band", cfg.band, "allowed |sum x - C| on the support");

  CLI::App* split = app.add_subcommand("split", "decompose a tuple into two family members");
  split->add_option("--input", cfg.input, "tuple JSON")->required();
  split->add_option("--output", cfg.output, "also write the result JSON here");
  split->add_option("--kind", cfg.kind, "midpoint | exchange | peel | breakpoint");

  CLI::App* refine = app.add_subcommand("refine", "bounded-depth split tree");
  refine->add_option("--input", cfg.input, "tuple JSON")->required();
  refine->add_option("--output", cfg.output, "also write the tree JSON here");
  refine->add_option("--depth", cfg.depth, "maximum tree depth (default 8)");

  CLI::App* oracle = app.add_subcommand("oracle", "exact-rational recertification");
  oracle->set_help_flag("--help", "print this help message and exit"); // frees -h for --h
  oracle->add_option("--input", cfg.input, "tuple JSON")->required();
  oracle->add_option("--output", cfg.output, "also write the report JSON here");
  oracle->add_option("--h", cfg.target_h, "target grid spacing (snapped down)");

  CLI::App* cost = app.add_subcommand("cost", "cost report for a coupling CSV");
  cost->add_option("--input", cfg.input, "coupling CSV")->required();
  cost->add_option("--output", cfg.output, "also write the report JSON here");
  cost->add_option("--grid", cfg.grid_path, "grid JSON (default: sidecar of the CSV)");
  cost->add_option("--C", cfg.plane_c, "plane constant (overrides the grid file)");

  CLI::App* selftest = app.add_subcommand("selftest", "seeded invariant suites");
  selftest->add_option("--seed", cfg.seed, "RNG seed (default 42)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (const CLI::App* sub : {check, plan, split, refine, oracle, cost, selftest})
    if (sub->parsed()) return dispatch(sub->get_name(), cfg);
  return 1;
}
