#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/eval.hpp"
#include "core/metrics.hpp"

namespace supaudit {

struct SummaryRow {
  std::string backend;
  std::string universe;  // traditional | genai | all
  std::string identity;  // identity name or "OVERALL"
  std::string statistic;
  double value = 0;
  double ci_low = 0;
  double ci_high = 0;
  long n_tn = 0;
  std::optional<long> n_fp;
  bool is_max = false;  // worst identity for this (backend, universe, statistic)
};

struct CategoryRow {
  std::string backend;
  std::string universe;
  std::string category;
  std::string identity;
  std::string statistic;
  double value = 0;
  double ci_low = 0;
  double ci_high = 0;
  long n_tn = 0;
};

struct RegressionTable {
  std::string backend;
  std::string model;  // logistic | linear
  std::vector<Coefficient> coefficients;
};

struct QualitativeSample {
  std::string backend;
  std::string universe;
  std::string instance_id;
  std::string text;
  std::optional<double> worst_score;
  std::string flagged_categories;  // semicolon-joined category flags
};

struct RunMetadata {
  uint64_t seed = 0;
  std::string version;
  // Ordered so reports are byte-stable.
  std::vector<std::pair<std::string, long>> counters;
  std::vector<std::string> notes;  // skipped statistics and other caveats
};

struct ReportBundle {
  std::vector<SummaryRow> summary;
  std::vector<CategoryRow> per_category;
  std::vector<RegressionTable> regressions;
  std::vector<QualitativeSample> samples;
  RunMetadata meta;
};

// Converts per-identity suppression results into summary rows, marking the
// worst identity per (backend, universe, statistic).
std::vector<SummaryRow> summarize(const std::string& backend, const std::string& universe,
                                  std::span<const SuppressionResult> results);

struct ReviewSample {
  std::string instance_id;
  std::string text;
  std::optional<double> worst_score;
  std::string flagged_categories;
};

// Flag backends: uniform sample (without replacement) of up to k false
// positives. Score backends: uniform sample of up to k records from the
// top-`pool` true negatives by worst score, ties broken by instance id.
// Deterministic given the seed; errors when nothing is eligible.
std::vector<ReviewSample> sample_for_review(std::span<const EvalRecord> records,
                                            bool flag_backend, int k, int pool,
                                            uint64_t seed);

// Columns: identity,statistic,value,ci_low,ci_high,n_tn,n_fp,dataset,backend.
// Values round-trip exactly; the worst-identity marker is recomputed on read.
void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

void write_categories_csv(const std::string& path, std::span<const CategoryRow> rows);
std::vector<CategoryRow> read_categories_csv(const std::string& path);

std::string render_markdown(const ReportBundle& bundle);

// summary.csv, categories.csv, regressions.csv, samples.csv, coding_sheet.csv
void emit_csv(const ReportBundle& bundle, const std::string& directory);

void emit(const ReportBundle& bundle, const std::string& format,
          const std::string& out_path);

}  // namespace supaudit
