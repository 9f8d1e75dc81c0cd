#include <doctest.h>

#include "cli.hpp"
#include "config.hpp"
#include "report.hpp"
#include "run.hpp"

#include "ctlab/error.hpp"
#include "ctlab/parallel.hpp"

#include <cmath>
#include <cstdlib>

using namespace lab;
using nlohmann::json;
using ctlab::Error;
using ctlab::ErrorKind;

namespace {

const char* kSmall = R"({
  "schema": 1, "name": "small-identity", "dimension": 2,
  "source": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "target": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "cost": {"kind": "quadratic-bilinear"},
  "grid": {"n_atoms": 120, "eval_resolution": 32},
  "experiment": {"p": [1, 2], "h0": 0.05, "closeness_check": true, "section_heights": [0.05, 0.1],
                 "engulf_samples": 10, "engulf_heights": [0.01, 0.02]}
})";

json small_json() { return json::parse(kSmall); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ErrorKind parse_error_kind(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("parse_config accepted an invalid config");
  return ErrorKind::Domain;
}

fs::path write_config(const fs::path& dir, const json& j) {
  fs::create_directories(dir);
  const fs::path path = dir / "config_in.json";
  write_json(path, j);
  return path;
}

}  // namespace

TEST_CASE("fnv1a matches the reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("configs round-trip through JSON") {
  const ScenarioConfig cfg = parse_config(small_json());
  CHECK(cfg.name == "small-identity");
  CHECK(cfg.grid.n_atoms == 120);
  CHECK(cfg.experiment.p == std::vector<double>{1.0, 2.0});
  const ScenarioConfig again = parse_config(to_json(cfg));
  CHECK(canonical_string(again) == canonical_string(cfg));
  for (const std::string& name : preset_names()) {
    const ScenarioConfig p = preset(name);
    CHECK(canonical_string(parse_config(to_json(p))) == canonical_string(p));
  }
}

TEST_CASE("unknown keys and bad values are rejected") {
  json j = small_json();
  j["colour"] = "blue";
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["grid"]["n_atom"] = 10;
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["source"]["density"] = {{"type", "uniform"}, {"sigma", 1}};
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j.erase("schema");
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["schema"] = 2;
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["dimension"] = 4;
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["experiment"]["M"] = 3;  // below N^2 = 4
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["solver"] = {{"epsilon", -1.0}};
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["cost"]["kind"] = "cubic";
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["grid"]["n_atoms"] = 2.5;
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["source"]["domain"]["center"] = {0, 0, 0};
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["source"]["domain"]["radius"] = 0;
  CHECK(parse_error_kind(j) == ErrorKind::Validation);

  j = small_json();
  j["experiment"]["p"] = json::array();
  CHECK(parse_error_kind(j) == ErrorKind::Validation);
}

TEST_CASE("domain bounds are checked when requested") {
  json j = small_json();
  j["experiment"]["domain_bound"] = 1.5;
  CHECK_NOTHROW(parse_config(j));
  j["source"]["domain"]["radius"] = 0.5;  // B_{2/3} is not inside
  CHECK(parse_error_kind(j) == ErrorKind::Validation);
  j["source"]["domain"]["radius"] = 2.0;  // not inside B_{1.5}
  CHECK(parse_error_kind(j) == ErrorKind::Validation);
}

TEST_CASE("scenario hash ignores key order, number spelling and output") {
  const json a = small_json();
  json b = json::parse(R"({
    "experiment": {"engulf_heights": [0.01, 0.02], "engulf_samples": 10, "section_heights": [0.05, 0.1],
                   "closeness_check": true, "h0": 5e-2, "p": [1.0, 2]},
    "grid": {"eval_resolution": 32, "n_atoms": 120},
    "cost": {"kind": "quadratic-bilinear", "delta": 0},
    "target": {"domain": {"radius": 1.0, "center": [0.0, 0], "type": "ball"}},
    "source": {"domain": {"radius": 1, "center": [0, 0.0], "type": "ball"}},
    "dimension": 2, "name": "small-identity", "schema": 1, "output": "elsewhere"
  })");
  CHECK(scenario_hash(parse_config(a)) == scenario_hash(parse_config(b)));
  CHECK(solve_key(parse_config(a)) == solve_key(parse_config(b)));

  json c = a;
  c["experiment"]["h0"] = 0.051;
  CHECK(scenario_hash(parse_config(c)) != scenario_hash(parse_config(a)));
  // Analysis parameters do not change what is solved.
  CHECK(solve_key(parse_config(c)) == solve_key(parse_config(a)));
  c["grid"]["n_atoms"] = 121;
  CHECK(solve_key(parse_config(c)) != solve_key(parse_config(a)));

  // Pinned so that a change in canonicalization shows up as a test failure.
  CHECK(scenario_hash(parse_config(a)).size() == 16);
  CHECK(scenario_hash(preset("E1")) == "98b6a043fb050d0e");
}

TEST_CASE("sweep variants") {
  const ScenarioConfig e2 = preset("E2");
  const auto vs = solve_variants(e2);
  REQUIRE(vs.size() == 3);
  CHECK(vs[0].cost.delta == 0.0);
  CHECK(vs[2].cost.delta == 0.05);
  CHECK(vs[0].experiment.delta_sweep.empty());

  const ScenarioConfig e4 = preset("E4");
  const ScenarioConfig fine = with_resolution(e4, 128);
  CHECK(fine.grid.eval_resolution == 128);
  CHECK(fine.experiment.step_multiplier == 4);
  CHECK(eval_grid(fine).max_spacing() * 4 == doctest::Approx(eval_grid(e4).max_spacing() * 2));

  const ScenarioConfig q = with_delta(preset("E1"), 0.02);
  CHECK(q.cost.kind == ctlab::CostKind::PerturbedBilinear);
}

TEST_CASE("presets") {
  CHECK(preset_names().size() == 5);
  const ScenarioConfig e1 = preset("E1");
  CHECK(e1.cost.kind == ctlab::CostKind::QuadraticBilinear);
  CHECK(eval_grid(e1).max_spacing() == doctest::Approx(1.0 / 60.0));
  const ScenarioConfig e4 = preset("E4");
  CHECK(e4.target.domain.balls.size() == 2);
  CHECK(!e4.target.domain.convex());
  CHECK(preset("E5").source.domain.convex());
  CHECK_THROWS_AS(preset("E9"), Error);
}

TEST_CASE("csv and number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::strtod(format_number(M_PI).c_str(), nullptr) == M_PI);
  CHECK(format_number(NAN) == "nan");
  CsvTable t({"a", "b"});
  t.add({1.0, 2.5});
  CHECK(t.str() == "a,b\n1,2.5\n");
  CHECK_THROWS_AS(t.add({1.0}), Error);
}

TEST_CASE("solve, cache and analysis subcommands") {
  const fs::path out = fresh_dir("pipeline");
  const ScenarioConfig cfg = parse_config(small_json());
  RunOptions opt;
  opt.out_dir = out;

  // Analysis before solve names the missing step.
  try {
    run_scenario(cfg, Command::W2p, opt);
    FAIL("expected a missing artifact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
    CHECK(std::string(e.what()).find("lab solve") != std::string::npos);
  }

  const RunArtifact solved = run_scenario(cfg, Command::Solve, opt);
  CHECK(!solved.reused_cache);
  CHECK(solved.scenario_hash == scenario_hash(cfg));
  const json summary = read_json(out / "solve.json");
  CHECK(summary["gap"].get<double>() <= 1e-8);
  CHECK(summary["closeness"].get<double>() < 0.02);
  CHECK(fs::exists(out / solved.potential_paths.at(0)));
  CHECK(fs::exists(out / solved.plan_paths.at(0)));
  CHECK(fs::exists(out / "run_solve.json"));

  CHECK(run_scenario(cfg, Command::Solve, opt).reused_cache);
  opt.force = true;
  CHECK(!run_scenario(cfg, Command::Solve, opt).reused_cache);
  opt.force = false;

  const Solved back = load_solved(cfg, out);
  CHECK(back.source.size() == summary["variants"][0]["n_source"].get<int>());
  double mass = 0.0;
  for (const auto& c : back.plan.couplings) mass += c.mass;
  CHECK(mass == doctest::Approx(1.0));

  run_scenario(cfg, Command::W2p, opt);
  const CsvData w = read_csv(out / "w2p_r32.csv");
  REQUIRE(w.rows.size() == 2);
  const auto direct = w.values("direct"), bound = w.values("layer_cake");
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(bound[i] >= direct[i]);

  run_scenario(cfg, Command::Sections, opt);
  const CsvData s = read_csv(out / "sections.csv");
  CHECK(s.rows.size() == 10);
  for (double ok : s.values("ok")) CHECK(ok == 1.0);

  run_scenario(cfg, Command::Singular, opt);
  CHECK(fs::exists(out / "singular_r32.svg"));
  CHECK(fs::exists(out / "mask_r32.txt"));
  const json sing = read_json(out / "singular_r32.json");
  CHECK(sing["fraction"].get<double>() <= 8 * sing["spacing"].get<double>());

  run_scenario(cfg, Command::Engulf, opt);
  CHECK(read_csv(out / "engulf.csv").rows.size() == 2);

  run_scenario(cfg, Command::Boundary, opt);
  CHECK(read_json(out / "boundary.json")["domain_convex"].get<bool>());

  run_scenario(cfg, Command::CheckCost, opt);
  CHECK(read_json(out / "cost_check.json")["c3_ok"].get<bool>());

  const json rep = emit_report(out);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "w2p.svg"));
  CHECK(fs::exists(out / "boundary.svg"));
  CHECK(rep["tables"].size() >= 5);
  const std::string svg = read_text(out / "w2p.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<image") == std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("outputs do not depend on the thread count") {
  const ScenarioConfig cfg = parse_config(small_json());
  std::vector<std::string> texts;
  for (int threads : {1, 3}) {
    ctlab::set_thread_count(threads);
    const fs::path out = fresh_dir("threads" + std::to_string(threads));
    RunOptions opt;
    opt.out_dir = out;
    for (Command c : {Command::Solve, Command::W2p, Command::Sections, Command::Boundary}) run_scenario(cfg, c, opt);
    texts.push_back(read_text(out / "w2p_r32.csv") + read_text(out / "sections.csv") +
                    read_text(out / "boundary.csv") + read_text(out / "boundary_cells.csv"));
    fs::remove_all(out);
  }
  ctlab::set_thread_count(1);
  CHECK(texts[0] == texts[1]);
}

TEST_CASE("report over a resolution sweep gives a convergence table") {
  const fs::path out = fresh_dir("sweep");
  json j = small_json();
  j["experiment"]["resolution_sweep"] = {16, 32, 64};
  j["experiment"]["p"] = {2};
  const ScenarioConfig cfg = parse_config(j);
  RunOptions opt;
  opt.out_dir = out;
  run_scenario(cfg, Command::Solve, opt);
  run_scenario(cfg, Command::W2p, opt);
  for (int r : {16, 32, 64}) CHECK(fs::exists(out / ("w2p_r" + std::to_string(r) + ".csv")));
  const auto rows = convergence_table(out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].r_lo == 16);
  CHECK(rows[0].r_hi == 64);
  emit_report(out);
  CHECK(fs::exists(out / "convergence.csv"));
  fs::remove_all(out);
}

TEST_CASE("decay plot has one polyline per delta") {
  const fs::path out = fresh_dir("decay_plot");
  CsvTable t({"delta", "k", "ratio"});
  for (double d : {0.0, 0.02, 0.05})
    for (int k = 0; k < 3; ++k) t.add({d, static_cast<double>(k), 0.5 / (k + 1)});
  t.write(out / "decay.csv");
  emit_report(out);
  const std::string svg = read_text(out / "decay.svg");
  std::size_t count = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
  CHECK(count == 3);
  fs::remove_all(out);
}

TEST_CASE("command line exit codes") {
  const fs::path out = fresh_dir("cli");
  fs::create_directories(out);

  CHECK(run_cli({"report", "--out", (out / "empty").string()}) == 2);
  fs::create_directories(out / "empty");
  CHECK(run_cli({"report", "--out", (out / "empty").string()}) == 2);

  json bad = small_json();
  bad["unexpected"] = 1;
  const fs::path bad_path = write_config(out, bad);
  CHECK(run_cli({"solve", "--config", bad_path.string(), "--out", (out / "bad").string()}) == 2);
  const json err = read_json(out / "bad" / "error.json");
  CHECK(err["kind"] == "validation");
  CHECK(err["op"] == "config");
  CHECK(err["command"] == "solve");

  const fs::path good = write_config(out / "good_cfg", small_json());
  CHECK(run_cli({"w2p", "--config", good.string(), "--out", (out / "good").string()}) == 2);
  CHECK(read_json(out / "good" / "error.json")["kind"] == "missing-artifact");
  CHECK(run_cli({"solve", "--config", good.string(), "--out", (out / "good").string(), "--threads", "2"}) == 0);
  CHECK(run_cli({"w2p", "--config", good.string(), "--out", (out / "good").string(), "--seed", "1"}) == 0);
  CHECK(run_cli({"report", "--out", (out / "good").string()}) == 0);

  // The seed is part of the solve, so a new seed needs a new solve.
  CHECK(run_cli({"w2p", "--config", good.string(), "--out", (out / "good").string(), "--seed", "9"}) == 2);

  // An infeasible entropic setting is a numerical failure.
  json hard = small_json();
  hard["solver"] = {{"method", "entropic"}, {"epsilon", 1e-6}, {"max_iter", 3}};
  const fs::path hard_path = write_config(out / "hard_cfg", hard);
  CHECK(run_cli({"solve", "--config", hard_path.string(), "--out", (out / "hard").string()}) == 3);
  CHECK(read_json(out / "hard" / "error.json")["op"].get<std::string>().size() > 0);

  CHECK(run_cli({"solve"}) == 2);
  CHECK(run_cli({"nonsense"}) == 2);
  CHECK(run_cli({"preset", "E3"}) == 0);
  CHECK(run_cli({"preset", "E7"}) == 2);

  ::setenv("LAB_OUT", (out / "from_env").string().c_str(), 1);
  CHECK(run_cli({"solve", "--config", good.string(), "--out", (out / "ignored").string()}) == 0);
  ::unsetenv("LAB_OUT");
  CHECK(fs::exists(out / "from_env" / "solve.json"));
  CHECK(!fs::exists(out / "ignored"));
  fs::remove_all(out);
}
