#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out; // captured stream (stdout by default)
};

// Runs the built binary; `mode` selects which stream is captured.
RunResult run(const std::string& args, const std::string& env = "",
              const char* mode = "stdout") {
  std::string redirect = " 2>/dev/null";
  if (std::string(mode) == "stderr") redirect = " 2>&1 1>/dev/null";
  if (std::string(mode) == "both") redirect = " 2>&1";
  const std::string cmd = env + (env.empty() ? "" : " ") + FLATPLAN_CLI_PATH + " " +
                          args + redirect;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  RunResult r;
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const char* name) {
  return std::string(FLATPLAN_FIXTURES) + "/" + name;
}

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "flatplan-cli-test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json parse(const std::string& text) {
  return nlohmann::json::parse(text);
}

} // namespace

TEST_CASE("check reports verdicts with the documented exit codes") {
  const RunResult flat = run("check --input " + fixture("uniform-pair.json"));
  CHECK(flat.code == 0);
  const nlohmann::json v = parse(flat.out);
  CHECK(v.at("flat") == true);
  CHECK(v.at("C") == 1.0);
  CHECK(v.at("witness").is_null());
  CHECK(v.at("slacks") == nlohmann::json::array({0.0, 0.0}));

  const RunResult bad = run("check --input " + fixture("dirac-plus-uniform.json"));
  CHECK(bad.code == 3);
  const nlohmann::json w = parse(bad.out);
  CHECK(w.at("flat") == false);
  CHECK(w.at("witness") == 2);
  CHECK(w.at("slacks")[1] == -0.5);
}

TEST_CASE("check accepts step-density input") {
  const RunResult r = run("check --input " + fixture("step-density.json"));
  CHECK(r.code == 0);
  const nlohmann::json v = parse(r.out);
  CHECK(v.at("flat") == true);
  CHECK_THAT(v.at("C").get<double>(), Catch::Matchers::WithinAbs(1.35, 1e-12));
}

TEST_CASE("malformed input exits 1 with a parse diagnostic") {
  const RunResult r = run("check --input " + fixture("malformed.json"), "", "stderr");
  CHECK(r.code == 1);
  CHECK(r.out.find("error:") != std::string::npos);

  const RunResult missing = run("check --input /nonexistent.json", "", "stderr");
  CHECK(missing.code == 1);
  CHECK(missing.out.find("cannot open") != std::string::npos);
}

TEST_CASE("plan writes a coupling, its grid sidecar, and a report") {
  const fs::path csv = temp_dir() / "pair.csv";
  const RunResult r = run("plan --input " + fixture("uniform-pair.json") +
                          " --h 0.25 --output " + csv.string());
  REQUIRE(r.code == 0);
  const nlohmann::json rep = parse(r.out);
  CHECK(rep.at("h") == 0.25);
  CHECK(rep.at("rows").get<int>() >= 3);
  CHECK(rep.at("max_marginal_dev").get<double>() <= 1e-9);
  CHECK(rep.at("max_plane_dev").get<double>() <= 1e-9);
  CHECK_THAT(rep.at("pairwise").get<double>(),
             Catch::Matchers::WithinAbs(-0.75, 1e-9));
  CHECK(rep.at("identity_residual").get<double>() <= 1e-9);

  // The CSV holds the reflection coupling: indices pair up to 4.
  const std::string text = slurp(csv);
  CHECK(text.rfind("i1,i2,x1,x2,weight\n", 0) == 0);
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line); // header
  int rows = 0;
  double mass = 0.0;
  while (std::getline(lines, line)) {
    int i = 0, j = 0;
    double x = 0, y = 0, w = 0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &i, &j, &x, &y, &w) == 5);
    CHECK(i + j == 4);
    CHECK(x + y == 1.0);
    mass += w;
    ++rows;
  }
  CHECK(rows == rep.at("rows").get<int>());
  CHECK_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-12));

  // Sidecar grid describes the lattice the indices refer to.
  const nlohmann::json grid = parse(slurp(temp_dir() / "pair.grid.json"));
  CHECK(grid.at("h") == 0.25);
  CHECK(grid.at("C") == 1.0);
  CHECK(grid.at("axes").size() == 2);
  CHECK(grid.at("axes")[0].size() == 5);
}

TEST_CASE("plan output is byte-identical across runs") {
  const fs::path a = temp_dir() / "det-a.csv";
  const fs::path b = temp_dir() / "det-b.csv";
  const std::string base = "plan --input " + fixture("uniform-cube.json") + " --h 0.25";
  const RunResult r1 = run(base + " --output " + a.string());
  const RunResult r2 = run(base + " --output " + b.string());
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  CHECK(slurp(a) == slurp(b));
  // Reports differ only in the output path, so compare the parsed bodies.
  nlohmann::json j1 = parse(r1.out), j2 = parse(r2.out);
  j1.erase("coupling");
  j2.erase("coupling");
  CHECK(j1 == j2);
}

TEST_CASE("plan refuses marginals that cannot reach the plane") {
  const fs::path csv = temp_dir() / "no-plan.csv";
  const RunResult r = run("plan --input " + fixture("dirac-plus-uniform.json") +
                          " --h 0.25 --output " + csv.string());
  CHECK(r.code == 4);
  // Widening the band makes room.
  const RunResult ok = run("plan --input " + fixture("dirac-plus-uniform.json") +
                           " --h 0.25 --band 0.5 --output " + csv.string());
  REQUIRE(ok.code == 0);
  const nlohmann::json rep = parse(ok.out);
  CHECK(rep.at("band") == 0.5);
  CHECK(rep.at("max_plane_dev").get<double>() <= 0.5 + 1e-9);
}

TEST_CASE("plan falls back to an unaligned cover grid when no lattice fits") {
  const fs::path csv = temp_dir() / "misaligned.csv";
  const RunResult warn = run("plan --input " + fixture("misaligned.json") +
                             " --output " + csv.string(), "", "stderr");
  CHECK(warn.code == 0);
  CHECK(warn.out.find("unaligned cover grid") != std::string::npos);
  const RunResult rep = run("plan --input " + fixture("misaligned.json") +
                            " --output " + csv.string());
  const nlohmann::json j = parse(rep.out);
  CHECK(j.at("h") == 0.0625); // the requested target, not a snapped value
  CHECK(j.at("band").get<double>() >= 0.0625);
}

TEST_CASE("split classifies by default and honors explicit kinds") {
  const RunResult mid = run("split --input " + fixture("uniform-pair.json"));
  REQUIRE(mid.code == 0);
  const nlohmann::json m = parse(mid.out);
  CHECK(m.at("kind") == "midpoint");
  CHECK(m.at("alpha") == 0.5);
  CHECK(m.at("a").at("items").size() == 2);

  const RunResult brk =
      run("split --input " + fixture("two-part.json") + " --kind breakpoint");
  REQUIRE(brk.code == 0);
  const nlohmann::json b = parse(brk.out);
  CHECK(b.at("kind") == "breakpoint");
  CHECK(b.at("alpha") == 0.875);

  CHECK(run("split --input " + fixture("dirac-pair.json")).code == 2);
  CHECK(run("split --input " + fixture("dirac-plus-uniform.json")).code == 2);
  CHECK(run("split --input " + fixture("uniform-pair.json") + " --kind bogus").code == 2);
  CHECK(run("split --input " + fixture("uniform-pair.json") + " --kind peel").code == 2);
}

TEST_CASE("refine emits the bounded split tree") {
  const RunResult r = run("refine --input " + fixture("uniform-pair.json") +
                          " --depth 2");
  REQUIRE(r.code == 0);
  const nlohmann::json tree = parse(r.out);
  CHECK(tree.at("kind") == "midpoint");
  const nlohmann::json& leaf = tree.at("a").at("a");
  CHECK(leaf.at("irreducible") == false);
  CHECK(leaf.contains("tuple"));
  CHECK_FALSE(leaf.contains("a")); // depth exhausted

  const RunResult point = run("refine --input " + fixture("dirac-pair.json"));
  REQUIRE(point.code == 0);
  CHECK(parse(point.out).at("irreducible") == true);
}

TEST_CASE("oracle recertifies with exact rationals") {
  const RunResult flat = run("oracle --input " + fixture("uniform-pair.json") +
                             " --h 0.25");
  REQUIRE(flat.code == 0);
  const nlohmann::json f = parse(flat.out);
  CHECK(f.at("min_cost") == "0/1");
  CHECK(f.at("slice_feasible") == true);

  const RunResult off = run("oracle --input " + fixture("dirac-plus-uniform.json") +
                            " --h 0.25");
  REQUIRE(off.code == 0);
  const nlohmann::json o = parse(off.out);
  CHECK(o.at("min_cost") == "3/32"); // 1/12 + h^2/6 at h = 1/4
  CHECK(o.at("slice_feasible") == false);
  CHECK_THAT(o.at("min_cost_float").get<double>(),
             Catch::Matchers::WithinAbs(3.0 / 32.0, 1e-15));
}

TEST_CASE("cost reads the sidecar grid or an explicit plane constant") {
  const fs::path csv = temp_dir() / "cost-pair.csv";
  REQUIRE(run("plan --input " + fixture("uniform-pair.json") + " --h 0.25 --output " +
              csv.string()).code == 0);
  const RunResult side = run("cost --input " + csv.string());
  REQUIRE(side.code == 0);
  const nlohmann::json s = parse(side.out);
  CHECK(s.at("C") == 1.0);
  CHECK_THAT(s.at("pairwise").get<double>(), Catch::Matchers::WithinAbs(-0.75, 1e-9));
  CHECK(s.at("sum_sq_about_c").get<double>() <= 1e-15);

  const RunResult fixed = run("cost --input " + fixture("pair-plan.csv") + " --C 1.0");
  REQUIRE(fixed.code == 0);
  const nlohmann::json x = parse(fixed.out);
  CHECK_THAT(x.at("pairwise").get<double>(), Catch::Matchers::WithinAbs(-0.32, 1e-15));
  CHECK(x.at("rows") == 1);

  // Without a sidecar and without --C there is nothing to measure against.
  CHECK(run("cost --input " + fixture("pair-plan.csv")).code == 1);
}

TEST_CASE("selftest runs every suite deterministically") {
  const RunResult r1 = run("selftest --seed 7");
  REQUIRE(r1.code == 0);
  for (const char* suite : {"measures", "smear", "splits", "planner-oracle", "criterion"})
    CHECK(r1.out.find(std::string("suite ") + suite + ": ok") != std::string::npos);
  const RunResult r2 = run("selftest --seed 7");
  CHECK(r1.out == r2.out);
}

TEST_CASE("logging is opt-in via the environment") {
  const std::string args = "plan --input " + fixture("uniform-pair.json") +
                           " --h 0.25 --output " + (temp_dir() / "log.csv").string();
  const RunResult quiet = run(args, "FLATPLAN_LOG=error", "stderr");
  CHECK(quiet.out.empty());
  const RunResult info = run(args, "FLATPLAN_LOG=info", "stderr");
  CHECK(info.out.find("snapped spacing") != std::string::npos);
  const RunResult debug = run(args, "FLATPLAN_LOG=debug", "stderr");
  CHECK(debug.out.find("grid nodes: 5 x 5") != std::string::npos);
}

TEST_CASE("top-level usage errors and help") {
  CHECK(run("", "", "both").code == 1);            // a subcommand is required
  CHECK(run("frobnicate", "", "both").code == 1);  // unknown subcommand
  CHECK(run("check", "", "both").code == 1);       // --input is required
  const RunResult help = run("--help", "", "both");
  CHECK(help.code == 0);
  CHECK(help.out.find("check") != std::string::npos);
  CHECK(help.out.find("oracle") != std::string::npos);
}
