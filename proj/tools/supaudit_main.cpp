// supaudit command-line driver. Talks to the core exclusively through the
// shared library's C API (supaudit.h).

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "supaudit.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitStage = 2;

int exit_code_for(supaudit_status status) {
  if (status == SUPAUDIT_OK) return kExitOk;
  if (status == SUPAUDIT_ERR_VALIDATION || status == SUPAUDIT_ERR_INVALID_ARGUMENT) {
    return kExitValidation;
  }
  return kExitStage;
}

int finish(supaudit_status status) {
  if (status != SUPAUDIT_OK) {
    std::fprintf(stderr, "supaudit: error: %s\n", supaudit_last_error());
  }
  return exit_code_for(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supaudit — identity-related speech suppression audit toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(supaudit_version()));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest a dataset into the JSONL instance format");
  std::string ingest_in, ingest_out, ingest_format = "jsonl", ingest_dataset;
  std::string ingest_family = "traditional", ingest_scheme = "pg13-ok";
  int movie_year_min = 0, tv_year_min = 0;
  ingest->add_option("--in", ingest_in, "Input file")->required();
  ingest->add_option("--out", ingest_out, "Output corpus JSONL")->required();
  ingest->add_option("--format", ingest_format, "jsonl | media-csv")
      ->check(CLI::IsMember({"jsonl", "media-csv"}));
  ingest->add_option("--dataset", ingest_dataset, "Dataset name")->required();
  ingest->add_option("--family", ingest_family, "traditional | genai")
      ->check(CLI::IsMember({"traditional", "genai"}));
  ingest->add_option("--scheme", ingest_scheme, "Label scheme for media-csv (pg-ok | pg13-ok)");
  ingest->add_option("--movie-year-min", movie_year_min, "Earliest movie release year kept");
  ingest->add_option("--tv-year-min", tv_year_min, "Earliest TV release year kept");

  // tag
  auto* tag = app.add_subcommand("tag", "Tag a corpus with identity groups");
  std::string tag_in, tag_out, tag_lexicon, tag_associations;
  tag->add_option("--in", tag_in, "Corpus JSONL")->required();
  tag->add_option("--out", tag_out, "Tagged corpus JSONL")->required();
  tag->add_option("--lexicon", tag_lexicon, "Lexicon TSV")->required();
  tag->add_option("--associations", tag_associations, "Association list JSON");

  // moderate
  auto* moderate = app.add_subcommand("moderate", "Send a tagged corpus through a backend");
  std::string moderate_in, moderate_out, moderate_backends, moderate_backend, moderate_cache;
  int moderate_parallelism = 0;
  moderate->add_option("--in", moderate_in, "Tagged corpus JSONL")->required();
  moderate->add_option("--out", moderate_out, "Responses JSONL")->required();
  moderate->add_option("--backends", moderate_backends, "Backend config JSON")->required();
  moderate->add_option("--backend", moderate_backend, "Backend name")->required();
  moderate->add_option("--cache", moderate_cache, "Response cache JSONL");
  moderate->add_option("--parallelism", moderate_parallelism, "Concurrent requests");

  // thresholds
  auto* thresholds = app.add_subcommand("thresholds", "Estimate per-category flagging thresholds");
  std::string thresholds_from, thresholds_out;
  thresholds->add_option("--from", thresholds_from, "Responses JSONL")->required();
  thresholds->add_option("--out", thresholds_out, "Threshold table JSON")->required();

  // score
  auto* score = app.add_subcommand("score", "Compute suppression statistics with bootstrap CIs");
  std::string score_tagged, score_responses, score_thresholds, score_out, score_categories;
  std::string score_universe = "full";
  int score_bootstrap = 1000, score_threads = 0;
  double score_level = 0.95;
  std::uint64_t score_seed = 0;
  bool score_seed_set = false;
  score->add_option("--tagged", score_tagged, "Tagged corpus JSONL")->required();
  score->add_option("--responses", score_responses, "Responses JSONL")->required();
  score->add_option("--thresholds", score_thresholds, "Threshold table JSON");
  score->add_option("--out", score_out, "Results CSV")->required();
  score->add_option("--categories-out", score_categories, "Per-category results CSV");
  score->add_option("--bootstrap", score_bootstrap, "Bootstrap resample count");
  score->add_option("--level", score_level, "Confidence level");
  score->add_option("--seed", score_seed, "Bootstrap seed")
      ->required()
      ->each([&](const std::string&) { score_seed_set = true; });
  score->add_option("--threads", score_threads, "Bootstrap worker threads (0 = auto)");
  score->add_option("--bootstrap-universe", score_universe,
                    "Resample the full record set or each identity's subset")
      ->check(CLI::IsMember({"full", "identity"}));

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Fit a regression on true negatives");
  std::string analyze_tagged, analyze_responses, analyze_thresholds, analyze_model, analyze_out;
  analyze->add_option("--tagged", analyze_tagged, "Tagged corpus JSONL")->required();
  analyze->add_option("--responses", analyze_responses, "Responses JSONL")->required();
  analyze->add_option("--thresholds", analyze_thresholds, "Threshold table JSON");
  analyze->add_option("--model", analyze_model, "logistic | linear")
      ->required()
      ->check(CLI::IsMember({"logistic", "linear"}));
  analyze->add_option("--out", analyze_out, "Fit CSV")->required();

  // report
  auto* report = app.add_subcommand("report", "Assemble report artifacts from a results directory");
  std::string report_results, report_out, report_format = "markdown";
  std::uint64_t report_seed = 0;
  int report_k = 50, report_pool = 1500;
  report->add_option("--results", report_results, "Results directory")->required();
  report->add_option("--out", report_out, "Report output path")->required();
  report->add_option("--format", report_format, "markdown | csv")
      ->check(CLI::IsMember({"markdown", "csv"}));
  report->add_option("--seed", report_seed, "Sampling seed")->required();
  report->add_option("--sample-k", report_k, "Qualitative sample size per backend/family");
  report->add_option("--sample-pool", report_pool, "Top-N pool for score backends");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  std::string run_config, run_out_dir;
  int run_threads = 0;
  run->add_option("--config", run_config, "Run config JSON")->required();
  run->add_option("--out-dir", run_out_dir, "Override the config's output directory");
  run->add_option("--threads", run_threads, "Bootstrap worker threads (0 = config/auto)");

  // validate
  auto* validate = app.add_subcommand("validate", "Validate a run config");
  std::string validate_config;
  validate->add_option("--config", validate_config, "Run config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;  // bad arguments are a validation failure
  }

  if (ingest->parsed()) {
    return finish(supaudit_ingest(ingest_in.c_str(), ingest_format.c_str(),
                                  ingest_dataset.c_str(), ingest_family.c_str(),
                                  ingest_scheme.c_str(), movie_year_min, tv_year_min,
                                  ingest_out.c_str()));
  }
  if (tag->parsed()) {
    return finish(supaudit_tag(tag_in.c_str(), tag_lexicon.c_str(),
                               tag_associations.empty() ? nullptr : tag_associations.c_str(),
                               tag_out.c_str()));
  }
  if (moderate->parsed()) {
    return finish(supaudit_moderate(moderate_in.c_str(), moderate_backends.c_str(),
                                    moderate_backend.c_str(),
                                    moderate_cache.empty() ? nullptr : moderate_cache.c_str(),
                                    moderate_parallelism, moderate_out.c_str()));
  }
  if (thresholds->parsed()) {
    return finish(supaudit_thresholds(thresholds_from.c_str(), thresholds_out.c_str()));
  }
  if (score->parsed()) {
    (void)score_seed_set;
    return finish(supaudit_score(score_tagged.c_str(), score_responses.c_str(),
                                 score_thresholds.empty() ? nullptr : score_thresholds.c_str(),
                                 score_bootstrap, score_level, score_seed, score_threads,
                                 score_universe.c_str(), score_out.c_str(),
                                 score_categories.empty() ? nullptr : score_categories.c_str()));
  }
  if (analyze->parsed()) {
    return finish(supaudit_analyze(
        analyze_tagged.c_str(), analyze_responses.c_str(),
        analyze_thresholds.empty() ? nullptr : analyze_thresholds.c_str(),
        analyze_model.c_str(), analyze_out.c_str()));
  }
  if (report->parsed()) {
    return finish(supaudit_report(report_results.c_str(), report_format.c_str(), report_seed,
                                  report_k, report_pool, report_out.c_str()));
  }
  if (run->parsed()) {
    return finish(supaudit_run(run_config.c_str(),
                               run_out_dir.empty() ? nullptr : run_out_dir.c_str(),
                               run_threads));
  }
  if (validate->parsed()) {
    char* problems = nullptr;
    size_t count = 0;
    supaudit_status status = supaudit_validate(validate_config.c_str(), &problems, &count);
    if (status != SUPAUDIT_OK) return finish(status);
    if (count > 0) {
      std::fprintf(stderr, "config has %zu problem(s):\n%s\n", count, problems);
      supaudit_string_free(problems);
      return kExitValidation;
    }
    std::printf("config ok\n");
    return kExitOk;
  }
  return kExitValidation;
}
