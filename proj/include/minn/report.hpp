#pragma once

#include <filesystem>

#include "minn/eval.hpp"

#include "json.hpp"

namespace minn {

// Deterministic-key-order JSON document; no timestamps, so identical
// configurations serialize byte-identically.
nlohmann::json report_to_json(const EvalReport& report);

// Writes report.json, runs.csv (one row per run) and summary.csv
// (method, mean AUC, CI low, CI high) into the output directory.
// With roc=true also writes roc/run-<r>.csv per run.
void write_report_files(const EvalReport& report, const std::filesystem::path& out_dir,
                        bool roc = false);

} // namespace minn
