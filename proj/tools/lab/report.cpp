#include "report.hpp"

#include "ctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>

namespace lab {

using nlohmann::json;
using ctlab::Error;
using ctlab::ErrorKind;

namespace {

std::vector<fs::path> w2p_tables(const fs::path& dir) {
  std::vector<std::pair<int, fs::path>> found;
  const std::regex pattern(R"(w2p_r(\d+)\.csv)");
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.emplace_back(std::stoi(m[1]), e.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(f.second);
  return out;
}

std::string label(double v) { return format_number(v); }

void plot(const fs::path& path, const std::vector<Series>& series, const PlotSpec& spec, json& plots) {
  write_text(path, svg_line_plot(series, spec));
  plots.push_back(path.filename().string());
}

}  // namespace

std::vector<ConvergenceRow> convergence_table(const fs::path& run_dir) {
  // (p, excluded) -> resolution -> direct
  std::map<std::pair<double, bool>, std::map<int, double>> values;
  for (const fs::path& f : w2p_tables(run_dir)) {
    const CsvData d = read_csv(f);
    const auto res = d.values("resolution"), p = d.values("p"), ex = d.values("excluded"), v = d.values("direct");
    for (std::size_t i = 0; i < res.size(); ++i)
      values[{p[i], ex[i] != 0.0}][static_cast<int>(res[i])] = v[i];
  }
  std::vector<ConvergenceRow> rows;
  for (const auto& [key, by_res] : values) {
    std::vector<std::pair<int, double>> pts(by_res.begin(), by_res.end());
    for (std::size_t i = 0; i + 2 < pts.size(); ++i) {
      ConvergenceRow r;
      r.p = key.first;
      r.excluded = key.second;
      r.r_lo = pts[i].first;
      r.r_mid = pts[i + 1].first;
      r.r_hi = pts[i + 2].first;
      r.v_lo = pts[i].second;
      r.v_mid = pts[i + 1].second;
      r.v_hi = pts[i + 2].second;
      const double d1 = std::abs(r.v_lo - r.v_mid), d2 = std::abs(r.v_mid - r.v_hi);
      r.order = (d1 > 0.0 && d2 > 0.0) ? std::log(d1 / d2) / std::log(static_cast<double>(r.r_hi) / r.r_mid)
                                       : std::numeric_limits<double>::infinity();
      rows.push_back(r);
    }
  }
  return rows;
}

json emit_report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir))
    throw Error(ErrorKind::NothingToReport, "emit_report", run_dir.string() + " does not exist");

  json report = {{"directory", run_dir.string()}};
  json tables = json::array(), plots = json::array(), summaries = json::object();
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(run_dir))
    if (e.is_regular_file()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& n : names)
    if (n.size() > 4 && n.substr(n.size() - 4) == ".csv" && n != "convergence.csv") tables.push_back(n);
  for (const char* s : {"solve.json", "decay.json", "boundary.json", "cost_check.json"})
    if (fs::exists(run_dir / s)) summaries[fs::path(s).stem().string()] = read_json(run_dir / s);
  for (const auto& n : names)
    if (n.rfind("singular_r", 0) == 0 && n.size() > 5 && n.substr(n.size() - 5) == ".json")
      summaries[fs::path(n).stem().string()] = read_json(run_dir / n);
  if (tables.empty() && summaries.empty())
    throw Error(ErrorKind::NothingToReport, "emit_report", "no subcommand outputs in " + run_dir.string());
  if (fs::exists(run_dir / "config.json")) {
    const json cfg = read_json(run_dir / "config.json");
    report["scenario"] = cfg.value("name", "");
  }

  if (fs::exists(run_dir / "decay.csv")) {
    const CsvData d = read_csv(run_dir / "decay.csv");
    std::map<double, Series> by_delta;
    const auto delta = d.values("delta"), k = d.values("k"), ratio = d.values("ratio");
    for (std::size_t i = 0; i < delta.size(); ++i) {
      Series& s = by_delta[delta[i]];
      s.label = "delta " + label(delta[i]);
      s.x.push_back(k[i]);
      s.y.push_back(ratio[i]);
    }
    std::vector<Series> series;
    for (auto& [dv, s] : by_delta) series.push_back(std::move(s));
    plot(run_dir / "decay.svg", series, {"level-set decay", "k", "|D_{k+1}| / |D_k|", false}, plots);
  }

  const auto w2p = w2p_tables(run_dir);
  if (!w2p.empty()) {
    std::vector<Series> series;
    for (const fs::path& f : w2p) {
      const CsvData d = read_csv(f);
      const auto res = d.values("resolution"), p = d.values("p"), ex = d.values("excluded"), v = d.values("direct");
      Series plain, cut;
      for (std::size_t i = 0; i < p.size(); ++i) {
        Series& s = ex[i] != 0.0 ? cut : plain;
        s.label = label(res[i]) + (ex[i] != 0.0 ? " cells, outside mask" : " cells");
        s.x.push_back(p[i]);
        s.y.push_back(v[i]);
      }
      if (!plain.x.empty()) series.push_back(plain);
      if (!cut.x.empty()) series.push_back(cut);
    }
    plot(run_dir / "w2p.svg", series, {"Hessian integral", "p", "sum |D^2 u|^p", true}, plots);

    const auto rows = convergence_table(run_dir);
    CsvTable conv({"p", "excluded", "r_lo", "r_mid", "r_hi", "v_lo", "v_mid", "v_hi", "observed_order"});
    json conv_json = json::array();
    for (const auto& r : rows) {
      conv.add({r.p, r.excluded ? 1.0 : 0.0, static_cast<double>(r.r_lo), static_cast<double>(r.r_mid),
                static_cast<double>(r.r_hi), r.v_lo, r.v_mid, r.v_hi, r.order});
      conv_json.push_back({{"p", r.p}, {"excluded", r.excluded}, {"resolutions", {r.r_lo, r.r_mid, r.r_hi}},
                           {"values", {r.v_lo, r.v_mid, r.v_hi}}, {"observed_order", format_number(r.order)}});
    }
    if (!rows.empty()) {
      conv.write(run_dir / "convergence.csv");
      tables.push_back("convergence.csv");
    }
    report["convergence"] = conv_json;
  }

  if (fs::exists(run_dir / "singular.csv")) {
    const CsvData d = read_csv(run_dir / "singular.csv");
    plot(run_dir / "singular.svg", {{"area fraction", d.values("resolution"), d.values("fraction")}},
         {"singular set", "cells per axis", "|Sigma| / |domain|", false}, plots);
  }

  if (fs::exists(run_dir / "boundary.csv")) {
    const CsvData d = read_csv(run_dir / "boundary.csv");
    plot(run_dir / "boundary.svg", {{"power sum", d.values("k"), d.values("power_sum")}},
         {"boundary families", "k", "sum h^p", true}, plots);
  }

  if (fs::exists(run_dir / "engulf.csv")) {
    const CsvData d = read_csv(run_dir / "engulf.csv");
    const auto h = d.values("h");
    plot(run_dir / "engulf.svg",
         {{"max C", h, d.values("max_c")}, {"median C", h, d.values("q50")}, {"90% C", h, d.values("q90")}},
         {"engulfing constant", "h", "C", false}, plots);
  }

  report["tables"] = tables;
  report["plots"] = plots;
  report["summaries"] = summaries;
  write_json(run_dir / "report.json", report);
  return report;
}

}  // namespace lab
