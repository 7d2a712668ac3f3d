#include "supaudit.h"

#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "core/analysis.hpp"
#include "core/batch.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/pipeline.hpp"
#include "core/tagging.hpp"

namespace {

thread_local std::string g_last_error;

supaudit_status status_from_error(const supaudit::Error& error) {
  using supaudit::ErrorKind;
  switch (error.kind()) {
    case ErrorKind::io: return SUPAUDIT_ERR_IO;
    case ErrorKind::parse: return SUPAUDIT_ERR_PARSE;
    case ErrorKind::validation: return SUPAUDIT_ERR_VALIDATION;
    case ErrorKind::compute: return SUPAUDIT_ERR_COMPUTE;
    case ErrorKind::backend: return SUPAUDIT_ERR_BACKEND;
    case ErrorKind::auth: return SUPAUDIT_ERR_AUTH;
  }
  return SUPAUDIT_ERR_STAGE;
}

template <typename Fn>
supaudit_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const supaudit::Error& error) {
    g_last_error = error.what();
    return status_from_error(error);
  } catch (const std::exception& error) {
    g_last_error = error.what();
    return SUPAUDIT_ERR_STAGE;
  } catch (...) {
    g_last_error = "unknown error";
    return SUPAUDIT_ERR_STAGE;
  }
}

supaudit_status invalid_argument(const char* message) {
  g_last_error = message;
  return SUPAUDIT_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& value) {
  char* out = static_cast<char*>(std::malloc(value.size() + 1));
  std::memcpy(out, value.c_str(), value.size() + 1);
  return out;
}

}  // namespace

struct supaudit_corpus {
  std::vector<supaudit::TextInstance> instances;
};

struct supaudit_lexicon {
  std::unique_ptr<supaudit::LexiconMatcher> matcher;
};

struct supaudit_eval {
  std::vector<supaudit::EvalRecord> records;
};

namespace {

std::vector<supaudit::EvalRecord> join_from_files(const char* tagged_path,
                                                  const char* responses_path,
                                                  const char* thresholds_path) {
  std::vector<supaudit::TextInstance> instances =
      supaudit::ingest_jsonl(tagged_path, "", supaudit::Family::traditional);
  std::vector<supaudit::ModerationResponse> responses =
      supaudit::read_responses_jsonl(responses_path);
  supaudit::ThresholdTable thresholds;
  const supaudit::ThresholdTable* thresholds_ptr = nullptr;
  if (thresholds_path && *thresholds_path) {
    thresholds = supaudit::load_threshold_json(thresholds_path);
    thresholds_ptr = &thresholds;
  }
  return supaudit::join_records(instances, responses, thresholds_ptr);
}

supaudit_status eval_statistic(const supaudit_eval* eval, const char* identity,
                               const char* statistic, double* value_out,
                               const supaudit::BootstrapOptions* bootstrap,
                               double* ci_low_out, double* ci_high_out) {
  if (!eval || !identity || !statistic || !value_out) {
    return invalid_argument("supaudit_eval_suppression: null argument");
  }
  return guarded([&]() -> supaudit_status {
    auto parsed_identity = supaudit::identity_from_string(identity);
    if (!parsed_identity) {
      throw supaudit::Error(supaudit::ErrorKind::validation,
                            std::string("unknown identity: ") + identity);
    }
    std::string statistic_name = statistic;
    supaudit::SuppressionStatistic stat;
    if (statistic_name == "flag_ratio") {
      stat = supaudit::SuppressionStatistic::flag_ratio;
    } else if (statistic_name == "score_ratio") {
      stat = supaudit::SuppressionStatistic::score_ratio;
    } else {
      throw supaudit::Error(supaudit::ErrorKind::validation,
                            "unknown statistic: " + statistic_name);
    }
    *value_out = stat == supaudit::SuppressionStatistic::flag_ratio
                     ? supaudit::flag_suppression(eval->records, *parsed_identity)
                     : supaudit::score_suppression(eval->records, *parsed_identity);
    if (bootstrap) {
      supaudit::BootstrapCi ci = supaudit::bootstrap_ci(
          eval->records,
          [&](std::span<const supaudit::EvalRecord> resample) {
            return stat == supaudit::SuppressionStatistic::flag_ratio
                       ? supaudit::flag_suppression(resample, *parsed_identity)
                       : supaudit::score_suppression(resample, *parsed_identity);
          },
          *bootstrap);
      if (ci_low_out) *ci_low_out = ci.low;
      if (ci_high_out) *ci_high_out = ci.high;
    }
    return SUPAUDIT_OK;
  });
}

}  // namespace

extern "C" {

const char* supaudit_version(void) { return supaudit::kToolkitVersion; }

const char* supaudit_last_error(void) { return g_last_error.c_str(); }

void supaudit_string_free(char* s) { std::free(s); }

supaudit_status supaudit_ingest(const char* in_path, const char* format,
                                const char* dataset, const char* family,
                                const char* scheme, int movie_year_min,
                                int tv_year_min, const char* out_path) {
  if (!in_path || !format || !dataset || !out_path) {
    return invalid_argument("supaudit_ingest: null argument");
  }
  return guarded([&]() -> supaudit_status {
    std::string format_name = format;
    std::vector<supaudit::TextInstance> instances;
    if (format_name == "jsonl") {
      auto parsed_family = supaudit::family_from_string(family ? family : "traditional");
      if (!parsed_family) {
        throw supaudit::Error(supaudit::ErrorKind::validation,
                              std::string("unknown family: ") + (family ? family : ""));
      }
      instances = supaudit::ingest_jsonl(in_path, dataset, *parsed_family);
    } else if (format_name == "media-csv") {
      supaudit::LabelScheme label_scheme =
          supaudit::LabelScheme::from_name(scheme && *scheme ? scheme : "pg13-ok");
      supaudit::ReleaseCutoffs cutoffs;
      if (movie_year_min > 0) cutoffs.movie_year_min = movie_year_min;
      if (tv_year_min > 0) cutoffs.tv_year_min = tv_year_min;
      instances = supaudit::media_to_instances(supaudit::read_media_csv(in_path), label_scheme,
                                               dataset, cutoffs);
    } else {
      throw supaudit::Error(supaudit::ErrorKind::validation,
                            "unknown format: " + format_name);
    }
    supaudit::write_instances_jsonl(out_path, instances);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_tag(const char* in_path, const char* lexicon_path,
                             const char* associations_path, const char* out_path) {
  if (!in_path || !lexicon_path || !out_path) {
    return invalid_argument("supaudit_tag: null argument");
  }
  return guarded([&]() -> supaudit_status {
    std::vector<supaudit::TextInstance> instances =
        supaudit::ingest_jsonl(in_path, "", supaudit::Family::traditional);
    supaudit::LexiconMatcher matcher(supaudit::load_lexicon_tsv(lexicon_path));
    std::vector<supaudit::AssociationEntry> associations;
    if (associations_path && *associations_path) {
      associations = supaudit::load_associations_json(associations_path);
    }
    supaudit::tag_corpus(instances, matcher,
                         associations.empty() ? nullptr : &associations);
    supaudit::write_instances_jsonl(out_path, instances);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_moderate(const char* in_path, const char* backends_path,
                                  const char* backend_name, const char* cache_path,
                                  int parallelism, const char* out_path) {
  if (!in_path || !backends_path || !backend_name || !out_path) {
    return invalid_argument("supaudit_moderate: null argument");
  }
  return guarded([&]() -> supaudit_status {
    std::vector<supaudit::BackendConfig> configs = supaudit::load_backends_json(backends_path);
    const supaudit::BackendConfig* selected = nullptr;
    for (const supaudit::BackendConfig& config : configs) {
      if (config.name == backend_name) {
        selected = &config;
        break;
      }
    }
    if (!selected) {
      throw supaudit::Error(supaudit::ErrorKind::validation,
                            std::string("no backend named '") + backend_name + "' in " +
                                backends_path);
    }
    std::vector<supaudit::TextInstance> instances =
        supaudit::ingest_jsonl(in_path, "", supaudit::Family::traditional);
    std::unique_ptr<supaudit::Backend> backend = supaudit::make_backend(*selected);
    std::unique_ptr<supaudit::ResponseCache> cache;
    if (cache_path && *cache_path) {
      cache = std::make_unique<supaudit::ResponseCache>(cache_path);
    }
    supaudit::BatchOptions options;
    options.parallelism = parallelism > 0 ? parallelism : selected->parallelism;
    options.max_attempts = selected->retry_max_attempts;
    options.retry_base_ms = selected->retry_base_ms;
    std::vector<supaudit::ModerationResponse> responses =
        supaudit::moderate_batch(instances, *backend, cache.get(), options);
    supaudit::write_responses_jsonl(out_path, responses);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_thresholds(const char* responses_path, const char* out_path) {
  if (!responses_path || !out_path) {
    return invalid_argument("supaudit_thresholds: null argument");
  }
  return guarded([&]() -> supaudit_status {
    std::vector<supaudit::ModerationResponse> responses =
        supaudit::read_responses_jsonl(responses_path);
    supaudit::ThresholdEstimate estimate =
        supaudit::estimate_thresholds(supaudit::observations_from_responses(responses));
    if (!responses.empty()) estimate.table.backend = responses.front().backend;
    supaudit::write_threshold_json(out_path, estimate);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_score(const char* tagged_path, const char* responses_path,
                               const char* thresholds_path, int bootstrap_samples,
                               double level, uint64_t seed, int threads,
                               const char* bootstrap_universe, const char* out_path,
                               const char* out_categories_path) {
  if (!tagged_path || !responses_path || !out_path) {
    return invalid_argument("supaudit_score: null argument");
  }
  return guarded([&]() -> supaudit_status {
    std::vector<supaudit::EvalRecord> records =
        join_from_files(tagged_path, responses_path, thresholds_path);
    std::string backend = "?";
    {
      std::vector<supaudit::ModerationResponse> responses =
          supaudit::read_responses_jsonl(responses_path);
      if (!responses.empty()) backend = responses.front().backend;
    }
    supaudit::BootstrapOptions options;
    options.n_samples = bootstrap_samples > 0 ? bootstrap_samples : 1000;
    options.level = level > 0 ? level : 0.95;
    options.seed = seed;
    options.threads =
        threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    std::string universe = bootstrap_universe ? bootstrap_universe : "full";
    if (universe == "identity") {
      options.universe = supaudit::BootstrapUniverse::identity_subset;
    } else if (universe == "full" || universe.empty()) {
      options.universe = supaudit::BootstrapUniverse::full_records;
    } else {
      throw supaudit::Error(supaudit::ErrorKind::validation,
                            "bootstrap universe must be 'full' or 'identity'");
    }
    supaudit::ScoreOutputs outputs = supaudit::compute_scores(backend, records, options);
    supaudit::write_summary_csv(out_path, outputs.summary);
    if (out_categories_path && *out_categories_path) {
      supaudit::write_categories_csv(out_categories_path, outputs.categories);
    }
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_analyze(const char* tagged_path, const char* responses_path,
                                 const char* thresholds_path, const char* model,
                                 const char* out_path) {
  if (!tagged_path || !responses_path || !model || !out_path) {
    return invalid_argument("supaudit_analyze: null argument");
  }
  return guarded([&]() -> supaudit_status {
    std::vector<supaudit::EvalRecord> records =
        join_from_files(tagged_path, responses_path, thresholds_path);
    std::string model_name = model;
    supaudit::RegressionFit fit;
    if (model_name == "logistic") {
      fit = supaudit::fit_logistic(supaudit::drop_constant_columns(
          supaudit::build_design(records, supaudit::RegressionTarget::false_positive)));
    } else if (model_name == "linear") {
      fit = supaudit::fit_linear(supaudit::drop_constant_columns(
          supaudit::build_design(records, supaudit::RegressionTarget::score)));
    } else {
      throw supaudit::Error(supaudit::ErrorKind::validation, "unknown model: " + model_name);
    }
    supaudit::write_fit_csv(out_path, fit);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_report(const char* results_dir, const char* format,
                                uint64_t seed, int sample_k, int sample_pool,
                                const char* out_path) {
  if (!results_dir || !format || !out_path) {
    return invalid_argument("supaudit_report: null argument");
  }
  return guarded([&]() -> supaudit_status {
    supaudit::ReportBundle bundle = supaudit::assemble_report(
        results_dir, seed, sample_k > 0 ? sample_k : 50, sample_pool > 0 ? sample_pool : 1500);
    supaudit::emit(bundle, format, out_path);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_run(const char* config_path, const char* out_dir, int threads) {
  if (!config_path) return invalid_argument("supaudit_run: null config path");
  return guarded([&]() -> supaudit_status {
    supaudit::RunConfig config = supaudit::load_run_config(config_path);
    if (out_dir && *out_dir) config.out_dir = out_dir;
    if (threads > 0) config.threads = threads;
    supaudit::run_pipeline(config);
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_validate(const char* config_path, char** problems_out,
                                  size_t* problem_count_out) {
  if (!config_path) return invalid_argument("supaudit_validate: null config path");
  if (problems_out) *problems_out = nullptr;
  if (problem_count_out) *problem_count_out = 0;
  return guarded([&]() -> supaudit_status {
    supaudit::RunConfig config = supaudit::load_run_config(config_path);
    std::vector<std::string> problems = supaudit::validate_config(config);
    if (problem_count_out) *problem_count_out = problems.size();
    if (problems_out && !problems.empty()) {
      std::string joined;
      for (const std::string& problem : problems) {
        if (!joined.empty()) joined += "\n";
        joined += problem;
      }
      *problems_out = dup_string(joined);
    }
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_corpus_open(const char* jsonl_path, supaudit_corpus** out) {
  if (!jsonl_path || !out) return invalid_argument("supaudit_corpus_open: null argument");
  return guarded([&]() -> supaudit_status {
    auto corpus = std::make_unique<supaudit_corpus>();
    corpus->instances = supaudit::ingest_jsonl(jsonl_path, "", supaudit::Family::traditional);
    *out = corpus.release();
    return SUPAUDIT_OK;
  });
}

void supaudit_corpus_free(supaudit_corpus* corpus) { delete corpus; }

size_t supaudit_corpus_size(const supaudit_corpus* corpus) {
  return corpus ? corpus->instances.size() : 0;
}

supaudit_status supaudit_corpus_id(const supaudit_corpus* corpus, size_t index,
                                   char** id_out) {
  if (!corpus || !id_out) return invalid_argument("supaudit_corpus_id: null argument");
  if (index >= corpus->instances.size()) {
    return invalid_argument("supaudit_corpus_id: index out of range");
  }
  *id_out = dup_string(corpus->instances[index].id);
  return SUPAUDIT_OK;
}

supaudit_status supaudit_lexicon_open(const char* tsv_path, supaudit_lexicon** out) {
  if (!tsv_path || !out) return invalid_argument("supaudit_lexicon_open: null argument");
  return guarded([&]() -> supaudit_status {
    auto lexicon = std::make_unique<supaudit_lexicon>();
    lexicon->matcher =
        std::make_unique<supaudit::LexiconMatcher>(supaudit::load_lexicon_tsv(tsv_path));
    *out = lexicon.release();
    return SUPAUDIT_OK;
  });
}

void supaudit_lexicon_free(supaudit_lexicon* lexicon) { delete lexicon; }

size_t supaudit_lexicon_size(const supaudit_lexicon* lexicon) {
  return lexicon && lexicon->matcher ? lexicon->matcher->entries().size() : 0;
}

supaudit_status supaudit_tag_text(const supaudit_lexicon* lexicon, const char* text,
                                  char** identities_out, int* has_slur_out) {
  if (!lexicon || !lexicon->matcher || !text || !identities_out) {
    return invalid_argument("supaudit_tag_text: null argument");
  }
  return guarded([&]() -> supaudit_status {
    supaudit::LexiconMatcher::TagResult result = lexicon->matcher->tag_text(text);
    std::string joined;
    result.identities.for_each([&](supaudit::GeneralIdentity identity) {
      if (!joined.empty()) joined += ",";
      joined += supaudit::to_string(identity);
    });
    *identities_out = dup_string(joined);
    if (has_slur_out) *has_slur_out = result.has_slur ? 1 : 0;
    return SUPAUDIT_OK;
  });
}

supaudit_status supaudit_eval_open(const char* tagged_path, const char* responses_path,
                                   const char* thresholds_path, supaudit_eval** out) {
  if (!tagged_path || !responses_path || !out) {
    return invalid_argument("supaudit_eval_open: null argument");
  }
  return guarded([&]() -> supaudit_status {
    auto eval = std::make_unique<supaudit_eval>();
    eval->records = join_from_files(tagged_path, responses_path, thresholds_path);
    *out = eval.release();
    return SUPAUDIT_OK;
  });
}

void supaudit_eval_free(supaudit_eval* eval) { delete eval; }

size_t supaudit_eval_size(const supaudit_eval* eval) {
  return eval ? eval->records.size() : 0;
}

supaudit_status supaudit_eval_suppression(const supaudit_eval* eval, const char* identity,
                                          const char* statistic, double* value_out) {
  return eval_statistic(eval, identity, statistic, value_out, nullptr, nullptr, nullptr);
}

supaudit_status supaudit_eval_suppression_ci(const supaudit_eval* eval,
                                             const char* identity, const char* statistic,
                                             int bootstrap_samples, double level,
                                             uint64_t seed, int threads, double* value_out,
                                             double* ci_low_out, double* ci_high_out) {
  supaudit::BootstrapOptions options;
  options.n_samples = bootstrap_samples > 0 ? bootstrap_samples : 1000;
  options.level = level > 0 ? level : 0.95;
  options.seed = seed;
  options.threads = threads > 0 ? threads : 1;
  return eval_statistic(eval, identity, statistic, value_out, &options, ci_low_out,
                        ci_high_out);
}

}  // extern "C"
