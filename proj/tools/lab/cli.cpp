#include "cli.hpp"

#include "config.hpp"
#include "report.hpp"
#include "run.hpp"

#include "ctlab/parallel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace lab {

using nlohmann::json;
using ctlab::Error;
using ctlab::ErrorKind;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::InvalidParameter:
    case ErrorKind::Validation:
    case ErrorKind::MissingArtifact:
    case ErrorKind::NothingToReport:
    case ErrorKind::Domain:
      return 2;
    default:
      return 3;
  }
}

namespace {

struct Args {
  std::string config;
  std::string out;
  bool force = false;
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::string preset;
};

void write_error(const fs::path& dir, const std::string& command, const std::string& op, const std::string& kind,
                 const std::string& message) {
  std::cerr << "lab " << command << ": " << op << " [" << kind << "]: " << message << "\n";
  try {
    write_json(dir / "error.json", {{"command", command}, {"op", op}, {"kind", kind}, {"message", message}});
  } catch (...) {
    // The error has been printed; an unwritable directory is not worth a second failure.
  }
}

fs::path resolve_out(const Args& a, const std::string& fallback) {
  if (const char* env = std::getenv("LAB_OUT"); env && *env) return env;
  if (!a.out.empty()) return a.out;
  return fallback;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Regularity lab for optimal transport potentials", "lab"};
  app.require_subcommand(1);
  Args a;

  std::vector<CLI::App*> runs;
  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " stage");
    sub->add_option("--config", a.config, "scenario JSON, or preset:E1 to preset:E5")->required();
    sub->add_option("--out", a.out, "output directory (LAB_OUT overrides)");
    sub->add_flag("--force", a.force, "re-solve even when a cached solve exists");
    sub->add_option("--threads", a.threads, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--seed", a.seed, "override experiment.seed");
    runs.push_back(sub);
  }
  CLI::App* report = app.add_subcommand("report", "aggregate the outputs of a run directory");
  report->add_option("--out,dir", a.out, "run directory (LAB_OUT overrides)");
  CLI::App* preset_cmd = app.add_subcommand("preset", "print a built-in scenario");
  preset_cmd->add_option("name", a.preset, "E1 to E5")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string command = "lab";
  fs::path out = "lab_out";
  try {
    if (preset_cmd->parsed()) {
      command = "preset";
      std::cout << to_json(preset(a.preset)).dump(2) << "\n";
      return 0;
    }
    if (report->parsed()) {
      command = "report";
      out = resolve_out(a, "lab_out");
      const json r = emit_report(out);
      std::cout << "report: " << (out / "report.json").string() << " (" << r["tables"].size() << " tables, "
                << r["plots"].size() << " plots)\n";
      return 0;
    }
    for (CLI::App* sub : runs) {
      if (!sub->parsed()) continue;
      command = sub->get_name();
      out = resolve_out(a, "lab_out");
      ScenarioConfig cfg = a.config.rfind("preset:", 0) == 0 ? preset(a.config.substr(7)) : load_config(a.config);
      if (a.seed) cfg.experiment.seed = *a.seed;
      out = resolve_out(a, cfg.output);
      ctlab::set_thread_count(a.threads);
      RunOptions opt;
      opt.out_dir = out;
      opt.force = a.force;
      const RunArtifact art = run_scenario(cfg, command_from_string(command), opt);
      std::cout << command << " " << art.scenario_hash << (art.reused_cache ? " (cached solve)" : "") << "\n";
      for (const auto& r : art.reports) std::cout << "  " << (out / r).string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    write_error(out, command, e.op(), std::string(ctlab::to_string(e.kind())), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    write_error(out, command, command, "internal", e.what());
    return 3;
  }
  return 2;
}

}  // namespace lab
