#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/metrics.hpp"
#include "core/report.hpp"

namespace supaudit {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct StageOutcome {
  std::string name;
  bool skipped = false;
  double duration_ms = 0;
};

struct RunOutcome {
  std::vector<StageOutcome> stages;
  std::filesystem::path report_path;
};

// Executes ingest -> tag -> moderate -> thresholds -> score -> analyze ->
// report. Stages whose inputs are unchanged since the recorded manifest run
// are skipped. A machine-readable manifest (input hashes, seeds, timings) is
// written to <out_dir>/manifest.json.
RunOutcome run_pipeline(const RunConfig& config);

// Per-backend suppression tables for one backend's joined records.
struct ScoreOutputs {
  std::vector<SummaryRow> summary;
  std::vector<CategoryRow> categories;
  std::vector<std::string> notes;  // skipped universes/identities
};

ScoreOutputs compute_scores(const std::string& backend,
                            std::span<const EvalRecord> records,
                            const BootstrapOptions& options);

// Rebuilds a ReportBundle from a results directory produced by the pipeline
// (results-*.csv, categories-*.csv, fit-*.csv, tagged.jsonl,
// responses-*.jsonl, thresholds-*.json, meta.json).
ReportBundle assemble_report(const std::string& results_dir, uint64_t seed,
                             int sample_k, int sample_pool);

}  // namespace supaudit
