#include "core/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/textutil.hpp"

namespace supaudit {

std::vector<SummaryRow> summarize(const std::string& backend, const std::string& universe,
                                  std::span<const SuppressionResult> results) {
  std::vector<SummaryRow> rows;
  // Worst identity: max value, ties broken by enum order (results arrive in
  // enum order already).
  std::optional<std::size_t> max_index;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].identity) continue;
    if (!max_index || results[i].value > results[*max_index].value) max_index = i;
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    const SuppressionResult& result = results[i];
    SummaryRow row;
    row.backend = backend;
    row.universe = universe;
    row.identity = result.identity ? to_string(*result.identity) : "OVERALL";
    row.statistic = to_string(result.statistic);
    row.value = result.value;
    row.ci_low = result.ci_low;
    row.ci_high = result.ci_high;
    row.n_tn = result.n_true_negatives;
    row.n_fp = result.n_false_positives;
    row.is_max = max_index && *max_index == i;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string joined_flagged_categories(const EvalRecord& record) {
  if (!record.category_flags) return "";
  std::string out;
  for (const auto& [category, flagged] : *record.category_flags) {
    if (!flagged) continue;
    if (!out.empty()) out += ";";
    out += category;
  }
  return out;
}

ReviewSample to_review_sample(const EvalRecord& record, const std::string& text) {
  ReviewSample sample;
  sample.instance_id = record.instance_id;
  sample.text = text;
  sample.worst_score = record.worst_score;
  sample.flagged_categories = joined_flagged_categories(record);
  return sample;
}

}  // namespace

std::vector<ReviewSample> sample_for_review(std::span<const EvalRecord> records,
                                            bool flag_backend, int k, int pool,
                                            uint64_t seed) {
  if (k < 1 || pool < 1) throw Error(ErrorKind::validation, "sample sizes must be positive");
  std::vector<const EvalRecord*> eligible;
  for (const EvalRecord& record : records) {
    if (record.should_flag) continue;
    if (flag_backend) {
      if (record.predicted_flag && *record.predicted_flag) eligible.push_back(&record);
    } else if (record.worst_score) {
      eligible.push_back(&record);
    }
  }
  if (eligible.empty()) {
    throw Error(ErrorKind::compute,
                flag_backend ? "no false positives to sample" : "no scored true negatives to sample");
  }

  if (flag_backend) {
    std::sort(eligible.begin(), eligible.end(),
              [](const EvalRecord* a, const EvalRecord* b) {
                return a->instance_id < b->instance_id;
              });
  } else {
    std::sort(eligible.begin(), eligible.end(),
              [](const EvalRecord* a, const EvalRecord* b) {
                if (*a->worst_score != *b->worst_score) {
                  return *a->worst_score > *b->worst_score;
                }
                return a->instance_id < b->instance_id;
              });
    if (eligible.size() > static_cast<std::size_t>(pool)) {
      eligible.resize(static_cast<std::size_t>(pool));
    }
  }

  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), eligible.size());
  Rng rng(substream(seed, 0x53414d50ULL));  // "SAMP"
  // Partial Fisher-Yates: the first `take` slots become the sample.
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + rng.next_below(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<ReviewSample> samples;
  samples.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    samples.push_back(to_review_sample(*eligible[i], std::string()));
  }
  return samples;
}

void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "identity,statistic,value,ci_low,ci_high,n_tn,n_fp,dataset,backend\n";
  for (const SummaryRow& row : rows) {
    out << csv_escape(row.identity) << ',' << row.statistic << ',' << format_double(row.value)
        << ',' << format_double(row.ci_low) << ',' << format_double(row.ci_high) << ','
        << row.n_tn << ',' << (row.n_fp ? std::to_string(*row.n_fp) : "") << ','
        << csv_escape(row.universe) << ',' << csv_escape(row.backend) << '\n';
  }
  write_file(path, out.str());
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  std::vector<SummaryRow> rows;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    SummaryRow row;
    row.identity = table.cell(r, "identity");
    row.statistic = table.cell(r, "statistic");
    row.value = std::stod(table.cell(r, "value"));
    row.ci_low = std::stod(table.cell(r, "ci_low"));
    row.ci_high = std::stod(table.cell(r, "ci_high"));
    row.n_tn = std::stol(table.cell(r, "n_tn"));
    if (!table.cell(r, "n_fp").empty()) row.n_fp = std::stol(table.cell(r, "n_fp"));
    row.universe = table.cell(r, "dataset");
    row.backend = table.cell(r, "backend");
    rows.push_back(std::move(row));
  }
  // Re-derive the worst-identity marker per (backend, universe, statistic).
  for (SummaryRow& row : rows) row.is_max = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].identity == "OVERALL") continue;
    bool best = true;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j == i || rows[j].identity == "OVERALL") continue;
      if (rows[j].backend != rows[i].backend || rows[j].universe != rows[i].universe ||
          rows[j].statistic != rows[i].statistic) {
        continue;
      }
      if (rows[j].value > rows[i].value || (rows[j].value == rows[i].value && j < i)) {
        best = false;
        break;
      }
    }
    rows[i].is_max = best;
  }
  return rows;
}

void write_categories_csv(const std::string& path, std::span<const CategoryRow> rows) {
  std::ostringstream out;
  out << "backend,dataset,category,identity,statistic,value,ci_low,ci_high,n_tn\n";
  for (const CategoryRow& row : rows) {
    out << csv_escape(row.backend) << ',' << csv_escape(row.universe) << ','
        << csv_escape(row.category) << ',' << csv_escape(row.identity) << ',' << row.statistic
        << ',' << format_double(row.value) << ',' << format_double(row.ci_low) << ','
        << format_double(row.ci_high) << ',' << row.n_tn << '\n';
  }
  write_file(path, out.str());
}

std::vector<CategoryRow> read_categories_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  std::vector<CategoryRow> rows;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    CategoryRow row;
    row.backend = table.cell(r, "backend");
    row.universe = table.cell(r, "dataset");
    row.category = table.cell(r, "category");
    row.identity = table.cell(r, "identity");
    row.statistic = table.cell(r, "statistic");
    row.value = std::stod(table.cell(r, "value"));
    row.ci_low = std::stod(table.cell(r, "ci_low"));
    row.ci_high = std::stod(table.cell(r, "ci_high"));
    row.n_tn = std::stol(table.cell(r, "n_tn"));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string ci_cell(double low, double high) {
  return "[" + format_fixed2(low) + ", " + format_fixed2(high) + "]";
}

std::string truncate_for_display(const std::string& text, std::size_t limit = 160) {
  if (text.size() <= limit) return text;
  return text.substr(0, limit) + "...";
}

std::string sanitize_cell(std::string text) {
  for (char& c : text) {
    if (c == '|') c = '/';
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

std::string render_markdown(const ReportBundle& bundle) {
  std::ostringstream out;
  out << "# Speech suppression audit report\n\n";
  out << "- seed: " << bundle.meta.seed << "\n";
  out << "- toolkit version: " << bundle.meta.version << "\n";
  for (const auto& [name, value] : bundle.meta.counters) {
    out << "- " << name << ": " << value << "\n";
  }
  out << "\n";
  if (!bundle.meta.notes.empty()) {
    out << "Skipped statistics (undefined on this data):\n\n";
    for (const std::string& note : bundle.meta.notes) {
      out << "- " << note << "\n";
    }
    out << "\n";
  }

  // Group summary rows by (backend, universe), preserving input order.
  std::vector<std::pair<std::string, std::string>> groups;
  for (const SummaryRow& row : bundle.summary) {
    std::pair<std::string, std::string> key{row.backend, row.universe};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [backend, universe] : groups) {
    out << "## " << backend << " — " << universe << "\n\n";
    for (const SummaryRow& row : bundle.summary) {
      if (row.backend != backend || row.universe != universe || !row.is_max) continue;
      out << "Worst identity-related speech suppression: **" << row.identity << "** at "
          << format_fixed2(row.value) << " (" << row.statistic << ")\n\n";
    }
    out << "| identity | statistic | suppression | 95% CI | n_tn | n_fp |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const SummaryRow& row : bundle.summary) {
      if (row.backend != backend || row.universe != universe) continue;
      out << "| " << row.identity << (row.is_max ? " (worst)" : "") << " | " << row.statistic
          << " | " << format_fixed2(row.value) << " | " << ci_cell(row.ci_low, row.ci_high)
          << " | " << row.n_tn << " | " << (row.n_fp ? std::to_string(*row.n_fp) : "")
          << " |\n";
    }
    out << "\n";

    bool any_category = false;
    for (const CategoryRow& row : bundle.per_category) {
      if (row.backend == backend && row.universe == universe) {
        any_category = true;
        break;
      }
    }
    if (any_category) {
      out << "### Per-category suppression\n\n";
      out << "| category | identity | statistic | suppression | 95% CI | n_tn |\n";
      out << "|---|---|---|---|---|---|\n";
      for (const CategoryRow& row : bundle.per_category) {
        if (row.backend != backend || row.universe != universe) continue;
        out << "| " << row.category << " | " << row.identity << " | " << row.statistic << " | "
            << format_fixed2(row.value) << " | " << ci_cell(row.ci_low, row.ci_high) << " | "
            << row.n_tn << " |\n";
      }
      out << "\n";
    }
  }

  for (const RegressionTable& table : bundle.regressions) {
    out << "## Regression: " << table.backend << " (" << table.model << ")\n\n";
    out << "| term | estimate | std. error | " << (table.model == "logistic" ? "z" : "t")
        << " | p | |\n";
    out << "|---|---|---|---|---|---|\n";
    char estimate[32], std_error[32], p_value[32];
    for (const Coefficient& coefficient : table.coefficients) {
      std::snprintf(estimate, sizeof(estimate), "%.4f", coefficient.estimate);
      std::snprintf(std_error, sizeof(std_error), "%.4f", coefficient.std_error);
      std::snprintf(p_value, sizeof(p_value), "%.3g", coefficient.p_value);
      out << "| " << coefficient.name << " | " << estimate << " | " << std_error << " | "
          << format_fixed2(coefficient.statistic) << " | " << p_value << " | "
          << coefficient.stars << " |\n";
    }
    out << "\n";
  }

  if (!bundle.samples.empty()) {
    out << "## Qualitative review samples\n\n";
    out << "Hand-code each sampled text using the coding sheet (coding_sheet.csv).\n\n";
    out << "| backend | family | instance | text | worst score | flagged categories |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const QualitativeSample& sample : bundle.samples) {
      out << "| " << sample.backend << " | " << sample.universe << " | " << sample.instance_id
          << " | " << sanitize_cell(truncate_for_display(sample.text)) << " | "
          << (sample.worst_score ? format_fixed2(*sample.worst_score) : "") << " | "
          << sanitize_cell(sample.flagged_categories) << " |\n";
    }
    out << "\n";
  }
  return out.str();
}

void emit_csv(const ReportBundle& bundle, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  write_summary_csv((fs::path(directory) / "summary.csv").string(), bundle.summary);
  write_categories_csv((fs::path(directory) / "categories.csv").string(), bundle.per_category);
  {
    std::ostringstream out;
    out << "backend,model,term,estimate,std_error,statistic,p_value,stars\n";
    for (const RegressionTable& table : bundle.regressions) {
      for (const Coefficient& coefficient : table.coefficients) {
        out << csv_escape(table.backend) << ',' << table.model << ','
            << csv_escape(coefficient.name) << ',' << format_double(coefficient.estimate) << ','
            << format_double(coefficient.std_error) << ',' << format_double(coefficient.statistic)
            << ',' << format_double(coefficient.p_value) << ',' << coefficient.stars << '\n';
      }
    }
    write_file((fs::path(directory) / "regressions.csv").string(), out.str());
  }
  {
    std::ostringstream out;
    out << "backend,family,instance_id,text,worst_score,flagged_categories\n";
    for (const QualitativeSample& sample : bundle.samples) {
      out << csv_escape(sample.backend) << ',' << csv_escape(sample.universe) << ','
          << csv_escape(sample.instance_id) << ',' << csv_escape(sample.text) << ','
          << (sample.worst_score ? format_double(*sample.worst_score) : "") << ','
          << csv_escape(sample.flagged_categories) << '\n';
    }
    write_file((fs::path(directory) / "samples.csv").string(), out.str());
  }
  {
    // Theme coding is a human task; ship empty category columns.
    std::ostringstream out;
    out << "backend,family,instance_id,text,politics,religion,identity_bias,sexual,hate,violence,none\n";
    for (const QualitativeSample& sample : bundle.samples) {
      out << csv_escape(sample.backend) << ',' << csv_escape(sample.universe) << ','
          << csv_escape(sample.instance_id) << ',' << csv_escape(sample.text)
          << ",,,,,,,\n";
    }
    write_file((fs::path(directory) / "coding_sheet.csv").string(), out.str());
  }
}

void emit(const ReportBundle& bundle, const std::string& format, const std::string& out_path) {
  if (format == "markdown") {
    write_file(out_path, render_markdown(bundle));
    std::filesystem::path directory = std::filesystem::path(out_path).parent_path();
    emit_csv(bundle, directory.empty() ? "." : directory.string());
    return;
  }
  if (format == "csv") {
    emit_csv(bundle, out_path);
    return;
  }
  throw Error(ErrorKind::validation, "unknown report format: " + format);
}

}  // namespace supaudit
