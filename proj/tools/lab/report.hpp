#pragma once

#include "io.hpp"

#include <json.hpp>

namespace lab {

struct ConvergenceRow {
  double p = 0.0;
  bool excluded = false;
  int r_lo = 0, r_mid = 0, r_hi = 0;
  double v_lo = 0.0, v_mid = 0.0, v_hi = 0.0;
  double order = 0.0;  // log(|v_lo - v_mid| / |v_mid - v_hi|) / log(r_hi / r_mid)
};

/// Observed orders from consecutive resolution triples of w2p tables.
std::vector<ConvergenceRow> convergence_table(const fs::path& run_dir);

/// Collects every subcommand output in run_dir into report.json, an index of
/// CSVs and one SVG per available table. Throws NothingToReport when the
/// directory holds no outputs.
nlohmann::json emit_report(const fs::path& run_dir);

}  // namespace lab
