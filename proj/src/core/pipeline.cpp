#include "core/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <set>
#include <thread>
#include <unordered_map>

#include "core/batch.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/rng.hpp"
#include "core/tagging.hpp"
#include "core/textutil.hpp"

namespace supaudit {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

ScoreOutputs compute_scores(const std::string& backend,
                            std::span<const EvalRecord> records,
                            const BootstrapOptions& options) {
  ScoreOutputs outputs;
  bool has_flags = false;
  bool has_scores = false;
  std::set<std::string> flag_categories;
  std::set<std::string> score_categories;
  std::set<Family> families;
  for (const EvalRecord& record : records) {
    if (record.predicted_flag) has_flags = true;
    if (record.worst_score) has_scores = true;
    if (record.category_flags) {
      for (const auto& [category, value] : *record.category_flags) flag_categories.insert(category);
    }
    if (record.category_scores) {
      for (const auto& [category, value] : *record.category_scores) score_categories.insert(category);
    }
    families.insert(record.family);
  }

  std::vector<std::pair<std::string, std::vector<EvalRecord>>> universes;
  universes.emplace_back("all", std::vector<EvalRecord>(records.begin(), records.end()));
  for (Family family : {Family::traditional, Family::genai}) {
    if (!families.count(family)) continue;
    std::vector<EvalRecord> subset;
    for (const EvalRecord& record : records) {
      if (record.family == family) subset.push_back(record);
    }
    universes.emplace_back(to_string(family), std::move(subset));
  }

  std::vector<SuppressionStatistic> statistics;
  if (has_flags) statistics.push_back(SuppressionStatistic::flag_ratio);
  if (has_scores) statistics.push_back(SuppressionStatistic::score_ratio);

  for (const auto& [universe, subset] : universes) {
    for (SuppressionStatistic statistic : statistics) {
      try {
        std::vector<SuppressionResult> results =
            suppression_with_ci(subset, statistic, options);
        std::vector<SummaryRow> rows = summarize(backend, universe, results);
        outputs.summary.insert(outputs.summary.end(), rows.begin(), rows.end());
      } catch (const Error& e) {
        outputs.notes.push_back(backend + "/" + universe + "/" +
                                to_string(statistic) + ": " + e.what());
      }
    }
    if (universe == "all") continue;  // category tables are per family
    for (const std::string& category : flag_categories) {
      try {
        auto results = per_category_suppression_with_ci(
            subset, category, SuppressionStatistic::flag_ratio, options);
        for (const SuppressionResult& result : results) {
          if (!result.identity) continue;
          CategoryRow row;
          row.backend = backend;
          row.universe = universe;
          row.category = category;
          row.identity = to_string(*result.identity);
          row.statistic = to_string(result.statistic);
          row.value = result.value;
          row.ci_low = result.ci_low;
          row.ci_high = result.ci_high;
          row.n_tn = result.n_true_negatives;
          outputs.categories.push_back(std::move(row));
        }
      } catch (const Error& e) {
        outputs.notes.push_back(backend + "/" + universe + "/" + category + ": " + e.what());
      }
    }
    for (const std::string& category : score_categories) {
      try {
        auto results = per_category_suppression_with_ci(
            subset, category, SuppressionStatistic::score_ratio, options);
        for (const SuppressionResult& result : results) {
          if (!result.identity) continue;
          CategoryRow row;
          row.backend = backend;
          row.universe = universe;
          row.category = category;
          row.identity = to_string(*result.identity);
          row.statistic = to_string(result.statistic);
          row.value = result.value;
          row.ci_low = result.ci_low;
          row.ci_high = result.ci_high;
          row.n_tn = result.n_true_negatives;
          outputs.categories.push_back(std::move(row));
        }
      } catch (const Error& e) {
        outputs.notes.push_back(backend + "/" + universe + "/" + category + ": " + e.what());
      }
    }
  }
  return outputs;
}

namespace {

std::string file_digest(const std::string& path) {
  return sha256_hex(read_file(path));
}

std::vector<std::string> sorted_matching_files(const fs::path& directory,
                                               const std::string& prefix,
                                               const std::string& suffix) {
  std::vector<std::string> matches;
  if (!fs::exists(directory)) return matches;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.size() >= prefix.size() + suffix.size() && name.rfind(prefix, 0) == 0 &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      matches.push_back(name);
    }
  }
  std::sort(matches.begin(), matches.end());
  return matches;
}

struct Manifest {
  ordered_json stages = ordered_json::object();

  static Manifest load(const fs::path& path) {
    Manifest manifest;
    if (fs::exists(path)) {
      ordered_json doc = ordered_json::parse(read_file(path.string()), nullptr, false);
      if (!doc.is_discarded() && doc.contains("stages")) manifest.stages = doc.at("stages");
    }
    return manifest;
  }

  bool up_to_date(const std::string& stage, const std::string& digest,
                  const std::vector<std::string>& outputs, const fs::path& out_dir) const {
    if (!stages.contains(stage)) return false;
    const ordered_json& entry = stages.at(stage);
    if (entry.value("digest", std::string()) != digest) return false;
    for (const std::string& output : outputs) {
      if (!fs::exists(out_dir / output)) return false;
    }
    return true;
  }

  void record(const std::string& stage, const std::string& digest,
              const std::vector<std::string>& outputs, double duration_ms, bool skipped) {
    ordered_json entry;
    entry["digest"] = digest;
    entry["outputs"] = outputs;
    entry["duration_ms"] = duration_ms;
    entry["skipped"] = skipped;
    stages[stage] = std::move(entry);
  }

  void save(const fs::path& path, uint64_t seed) const {
    ordered_json doc;
    doc["version"] = kToolkitVersion;
    doc["seed"] = seed;
    doc["stages"] = stages;
    write_file(path.string(), doc.dump(2) + "\n");
  }
};

struct MetaCounters {
  std::vector<std::pair<std::string, long>> counters;
  std::vector<std::string> notes;

  void set(const std::string& name, long value) {
    for (auto& [existing, existing_value] : counters) {
      if (existing == name) {
        existing_value = value;
        return;
      }
    }
    counters.emplace_back(name, value);
  }

  void add_note(const std::string& note) {
    if (std::find(notes.begin(), notes.end(), note) == notes.end()) notes.push_back(note);
  }
};

void write_meta(const fs::path& path, uint64_t seed, const MetaCounters& meta) {
  ordered_json doc;
  doc["version"] = kToolkitVersion;
  doc["seed"] = seed;
  ordered_json counters = ordered_json::object();
  for (const auto& [name, value] : meta.counters) counters[name] = value;
  doc["counters"] = counters;
  doc["notes"] = meta.notes;
  write_file(path.string(), doc.dump(2) + "\n");
}

}  // namespace

ReportBundle assemble_report(const std::string& results_dir, uint64_t seed,
                             int sample_k, int sample_pool) {
  fs::path directory(results_dir);
  ReportBundle bundle;
  bundle.meta.seed = seed;
  bundle.meta.version = kToolkitVersion;

  if (fs::exists(directory / "meta.json")) {
    ordered_json meta =
        ordered_json::parse(read_file((directory / "meta.json").string()), nullptr, false);
    if (!meta.is_discarded() && meta.contains("counters")) {
      for (const auto& [name, value] : meta.at("counters").items()) {
        bundle.meta.counters.emplace_back(name, value.get<long>());
      }
    }
    if (!meta.is_discarded() && meta.contains("notes")) {
      for (const auto& note : meta.at("notes")) {
        bundle.meta.notes.push_back(note.get<std::string>());
      }
    }
  }

  for (const std::string& name : sorted_matching_files(directory, "results-", ".csv")) {
    std::vector<SummaryRow> rows = read_summary_csv((directory / name).string());
    bundle.summary.insert(bundle.summary.end(), rows.begin(), rows.end());
  }
  for (const std::string& name : sorted_matching_files(directory, "categories-", ".csv")) {
    std::vector<CategoryRow> rows = read_categories_csv((directory / name).string());
    bundle.per_category.insert(bundle.per_category.end(), rows.begin(), rows.end());
  }
  for (const std::string& name : sorted_matching_files(directory, "fit-", ".csv")) {
    // fit-<backend>-<model>.csv
    std::string stem = name.substr(4, name.size() - 8);
    std::size_t cut = stem.rfind('-');
    RegressionTable table;
    table.backend = cut == std::string::npos ? stem : stem.substr(0, cut);
    table.model = cut == std::string::npos ? "" : stem.substr(cut + 1);
    table.coefficients = read_fit_csv((directory / name).string()).coefficients;
    bundle.regressions.push_back(std::move(table));
  }

  // Qualitative samples need the joined records plus the instance text.
  fs::path tagged_path = directory / "tagged.jsonl";
  if (fs::exists(tagged_path)) {
    std::vector<TextInstance> instances = ingest_jsonl(tagged_path.string(), "", Family::traditional);
    std::unordered_map<std::string, const TextInstance*> by_id;
    for (const TextInstance& instance : instances) by_id[instance.id] = &instance;

    for (const std::string& name : sorted_matching_files(directory, "responses-", ".jsonl")) {
      std::string backend = name.substr(10, name.size() - 10 - 6);
      std::vector<ModerationResponse> responses =
          read_responses_jsonl((directory / name).string());
      ThresholdTable thresholds;
      bool has_thresholds = false;
      fs::path threshold_path = directory / ("thresholds-" + backend + ".json");
      if (fs::exists(threshold_path)) {
        thresholds = load_threshold_json(threshold_path.string());
        has_thresholds = true;
      }
      std::vector<EvalRecord> records =
          join_records(instances, responses, has_thresholds ? &thresholds : nullptr);
      bool flag_backend = false;
      for (const EvalRecord& record : records) {
        if (record.predicted_flag) {
          flag_backend = true;
          break;
        }
      }
      for (Family family : {Family::traditional, Family::genai}) {
        std::vector<EvalRecord> subset;
        for (const EvalRecord& record : records) {
          if (record.family == family) subset.push_back(record);
        }
        if (subset.empty()) continue;
        std::vector<ReviewSample> samples;
        try {
          samples = sample_for_review(subset, flag_backend, sample_k, sample_pool,
                                      substream(seed, std::hash<std::string>{}(
                                                          backend + "/" + to_string(family))));
        } catch (const Error&) {
          continue;  // nothing eligible in this family
        }
        for (const ReviewSample& sample : samples) {
          QualitativeSample qualitative;
          qualitative.backend = backend;
          qualitative.universe = to_string(family);
          qualitative.instance_id = sample.instance_id;
          auto it = by_id.find(sample.instance_id);
          qualitative.text = it != by_id.end() ? it->second->text : "";
          qualitative.worst_score = sample.worst_score;
          qualitative.flagged_categories = sample.flagged_categories;
          bundle.samples.push_back(std::move(qualitative));
        }
      }
    }
  }
  return bundle;
}

RunOutcome run_pipeline(const RunConfig& config) {
  std::vector<std::string> problems = validate_config(config);
  if (!problems.empty()) {
    std::string message = "config validation failed:";
    for (const std::string& problem : problems) message += "\n  - " + problem;
    throw Error(ErrorKind::validation, message);
  }

  fs::path out_dir = config.out_dir;
  if (out_dir.is_relative()) out_dir = config.base_dir / out_dir;
  fs::create_directories(out_dir);
  fs::path manifest_path = out_dir / "manifest.json";
  Manifest manifest = Manifest::load(manifest_path);
  MetaCounters meta;
  // Counters persist across runs so skipped stages keep their numbers and
  // re-runs stay byte-identical.
  if (fs::exists(out_dir / "meta.json")) {
    ordered_json previous =
        ordered_json::parse(read_file((out_dir / "meta.json").string()), nullptr, false);
    if (!previous.is_discarded() && previous.contains("counters")) {
      for (const auto& [name, value] : previous.at("counters").items()) {
        meta.set(name, value.get<long>());
      }
    }
    if (!previous.is_discarded() && previous.contains("notes")) {
      for (const auto& note : previous.at("notes")) meta.add_note(note.get<std::string>());
    }
  }
  RunOutcome outcome;
  outcome.report_path = out_dir / "report.md";

  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto run_stage = [&](const std::string& name, const std::string& digest,
                       const std::vector<std::string>& outputs, auto&& body) {
    StageOutcome stage;
    stage.name = name;
    if (manifest.up_to_date(name, digest, outputs, out_dir)) {
      stage.skipped = true;
      manifest.record(name, digest, outputs, 0.0, true);
      outcome.stages.push_back(stage);
      return;
    }
    auto start = std::chrono::steady_clock::now();
    body();
    stage.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    manifest.record(name, digest, outputs, stage.duration_ms, false);
    manifest.save(manifest_path, config.bootstrap.seed);
    outcome.stages.push_back(stage);
  };

  // ---- ingest ----
  std::string ingest_digest;
  {
    ordered_json params;
    params["cutoffs"] = {config.cutoffs.movie_year_min, config.cutoffs.tv_year_min};
    for (const DatasetConfig& dataset : config.datasets) {
      ordered_json entry;
      entry["name"] = dataset.name;
      entry["format"] = dataset.format;
      entry["family"] = to_string(dataset.family);
      if (dataset.label_scheme) entry["scheme"] = *dataset.label_scheme;
      entry["file"] = file_digest(resolve_path(config, dataset.path));
      params["datasets"].push_back(entry);
    }
    ingest_digest = sha256_hex("ingest" + params.dump());
  }
  run_stage("ingest", ingest_digest, {"corpus.jsonl"}, [&] {
    std::vector<TextInstance> corpus;
    for (const DatasetConfig& dataset : config.datasets) {
      std::string path = resolve_path(config, dataset.path);
      std::vector<TextInstance> instances;
      if (dataset.format == "jsonl") {
        instances = ingest_jsonl(path, dataset.name, dataset.family);
      } else if (dataset.format == "media-csv") {
        LabelScheme scheme = LabelScheme::from_name(dataset.label_scheme.value_or("pg13-ok"));
        instances = media_to_instances(read_media_csv(path), scheme, dataset.name, config.cutoffs);
      } else {
        instances = ingest_csv(path, dataset.name, dataset.family, *dataset.columns);
      }
      corpus.insert(corpus.end(), instances.begin(), instances.end());
    }
    std::set<std::string> ids;
    for (const TextInstance& instance : corpus) {
      if (!ids.insert(instance.id).second) {
        throw Error(ErrorKind::validation, "duplicate instance id across datasets: " + instance.id);
      }
    }
    write_instances_jsonl((out_dir / "corpus.jsonl").string(), corpus);
  });

  // ---- tag ----
  std::string tag_digest;
  {
    ordered_json params;
    params["corpus"] = file_digest((out_dir / "corpus.jsonl").string());
    params["lexicon"] = file_digest(resolve_path(config, config.lexicon));
    for (const std::string& association : config.associations) {
      params["associations"].push_back(file_digest(resolve_path(config, association)));
    }
    tag_digest = sha256_hex("tag" + params.dump());
  }
  run_stage("tag", tag_digest, {"tagged.jsonl"}, [&] {
    std::vector<TextInstance> corpus =
        ingest_jsonl((out_dir / "corpus.jsonl").string(), "", Family::traditional);
    LexiconMatcher matcher(load_lexicon_tsv(resolve_path(config, config.lexicon)));
    std::vector<AssociationEntry> associations;
    for (const std::string& association : config.associations) {
      std::vector<AssociationEntry> loaded =
          load_associations_json(resolve_path(config, association));
      associations.insert(associations.end(), loaded.begin(), loaded.end());
    }
    tag_corpus(corpus, matcher, associations.empty() ? nullptr : &associations);
    write_instances_jsonl((out_dir / "tagged.jsonl").string(), corpus);
  });

  // ---- moderate + thresholds + score + analyze, per backend ----
  fs::path cache_path = config.cache_path.empty()
                            ? out_dir / "cache.jsonl"
                            : fs::path(resolve_path(config, config.cache_path));
  std::string tagged_digest = file_digest((out_dir / "tagged.jsonl").string());

  for (const BackendConfig& backend_config : config.backends) {
    const std::string& name = backend_config.name;
    std::string responses_file = "responses-" + name + ".jsonl";

    std::string moderate_digest;
    {
      ordered_json params;
      params["tagged"] = tagged_digest;
      params["backend"] = {{"name", backend_config.name},
                           {"kind", to_string(backend_config.kind)},
                           {"wire", backend_config.wire},
                           {"categories", backend_config.categories},
                           {"endpoint", backend_config.endpoint},
                           {"normalize", backend_config.normalize},
                           {"mock_seed", backend_config.mock.seed},
                           {"flag_threshold", backend_config.mock.flag_threshold},
                           {"jitter", backend_config.mock.jitter}};
      ordered_json keywords = ordered_json::object();
      for (const auto& [keyword, weights] : backend_config.mock.keyword_weights) {
        keywords[keyword] = weights;
      }
      params["keywords"] = keywords;
      moderate_digest = sha256_hex("moderate" + params.dump());
    }
    run_stage("moderate:" + name, moderate_digest, {responses_file}, [&] {
      std::vector<TextInstance> tagged =
          ingest_jsonl((out_dir / "tagged.jsonl").string(), "", Family::traditional);
      std::unique_ptr<Backend> backend = make_backend(backend_config);
      ResponseCache cache(cache_path);
      BatchOptions options;
      options.parallelism = backend_config.parallelism;
      options.max_attempts = backend_config.retry_max_attempts;
      options.retry_base_ms = backend_config.retry_base_ms;
      BatchStats stats;
      std::vector<ModerationResponse> responses =
          moderate_batch(tagged, *backend, &cache, options, &stats);
      write_responses_jsonl((out_dir / responses_file).string(), responses);
      meta.set("requests_sent-" + name, static_cast<long>(stats.requests_sent));
      meta.set("cache_hits-" + name, static_cast<long>(stats.cache_hits));
      meta.set("failures-" + name, static_cast<long>(stats.failures));
    });

    std::string responses_digest = file_digest((out_dir / responses_file).string());

    std::string thresholds_file = "thresholds-" + name + ".json";
    bool use_thresholds = backend_config.normalize;
    if (use_thresholds) {
      std::string digest = sha256_hex("thresholds" + responses_digest);
      run_stage("thresholds:" + name, digest, {thresholds_file}, [&] {
        std::vector<ModerationResponse> responses =
            read_responses_jsonl((out_dir / responses_file).string());
        ThresholdEstimate estimate = estimate_thresholds(observations_from_responses(responses));
        estimate.table.backend = name;
        if (!estimate.one_sided_categories.empty()) {
          std::string joined;
          for (const std::string& category : estimate.one_sided_categories) {
            if (!joined.empty()) joined += ", ";
            joined += category;
          }
          throw Error(ErrorKind::compute,
                      "backend '" + name + "': categories with one-sided observations: " + joined +
                          "; cannot normalize scores");
        }
        write_threshold_json((out_dir / thresholds_file).string(), estimate);
      });
    }

    auto load_joined = [&](JoinStats* stats) {
      std::vector<TextInstance> tagged =
          ingest_jsonl((out_dir / "tagged.jsonl").string(), "", Family::traditional);
      std::vector<ModerationResponse> responses =
          read_responses_jsonl((out_dir / responses_file).string());
      ThresholdTable thresholds;
      const ThresholdTable* thresholds_ptr = nullptr;
      if (use_thresholds) {
        thresholds = load_threshold_json((out_dir / thresholds_file).string());
        thresholds_ptr = &thresholds;
      }
      return join_records(tagged, responses, thresholds_ptr, stats);
    };

    std::string results_file = "results-" + name + ".csv";
    std::string categories_file = "categories-" + name + ".csv";
    {
      ordered_json params;
      params["tagged"] = tagged_digest;
      params["responses"] = responses_digest;
      params["n_samples"] = config.bootstrap.n_samples;
      params["level"] = config.bootstrap.level;
      params["seed"] = config.bootstrap.seed;
      params["universe"] = config.bootstrap.universe;
      std::string digest = sha256_hex("score" + params.dump());
      run_stage("score:" + name, digest, {results_file, categories_file}, [&] {
        JoinStats join_stats;
        std::vector<EvalRecord> records = load_joined(&join_stats);
        meta.set("excluded_error_responses-" + name, join_stats.excluded_errors);
        meta.set("missing_responses-" + name, join_stats.missing_responses);
        BootstrapOptions options;
        options.n_samples = config.bootstrap.n_samples;
        options.level = config.bootstrap.level;
        options.seed = config.bootstrap.seed;
        options.threads = threads;
        options.universe = config.bootstrap.universe == "identity"
                               ? BootstrapUniverse::identity_subset
                               : BootstrapUniverse::full_records;
        ScoreOutputs outputs = compute_scores(name, records, options);
        write_summary_csv((out_dir / results_file).string(), outputs.summary);
        write_categories_csv((out_dir / categories_file).string(), outputs.categories);
        meta.set("score_notes-" + name, static_cast<long>(outputs.notes.size()));
        for (const std::string& note : outputs.notes) meta.add_note(note);
      });
    }

    {
      ordered_json params;
      params["tagged"] = tagged_digest;
      params["responses"] = responses_digest;
      std::string digest = sha256_hex("analyze" + params.dump());
      BackendDescriptor descriptor = descriptor_from_config(backend_config);
      std::vector<std::string> outputs;
      if (descriptor.returns_flags) outputs.push_back("fit-" + name + "-logistic.csv");
      if (descriptor.returns_scores) outputs.push_back("fit-" + name + "-linear.csv");
      run_stage("analyze:" + name, digest, outputs, [&] {
        std::vector<EvalRecord> records = load_joined(nullptr);
        if (descriptor.returns_flags) {
          std::vector<std::string> dropped;
          DesignMatrix design = drop_constant_columns(
              build_design(records, RegressionTarget::false_positive), &dropped);
          write_fit_csv((out_dir / ("fit-" + name + "-logistic.csv")).string(),
                        fit_logistic(design));
          for (const std::string& term : dropped) {
            meta.add_note("analyze:" + name + "/logistic: dropped constant predictor '" +
                          term + "'");
          }
        }
        if (descriptor.returns_scores) {
          std::vector<std::string> dropped;
          DesignMatrix design =
              drop_constant_columns(build_design(records, RegressionTarget::score), &dropped);
          write_fit_csv((out_dir / ("fit-" + name + "-linear.csv")).string(),
                        fit_linear(design));
          for (const std::string& term : dropped) {
            meta.add_note("analyze:" + name + "/linear: dropped constant predictor '" + term +
                          "'");
          }
        }
      });
    }
  }

  // ---- report ----
  write_meta(out_dir / "meta.json", config.bootstrap.seed, meta);
  std::string report_digest;
  {
    ordered_json params;
    params["seed"] = config.bootstrap.seed;
    params["k"] = config.review_sample_k;
    params["pool"] = config.review_sample_pool;
    for (const std::string& name : sorted_matching_files(out_dir, "results-", ".csv")) {
      params["inputs"].push_back(file_digest((out_dir / name).string()));
    }
    for (const std::string& name : sorted_matching_files(out_dir, "categories-", ".csv")) {
      params["inputs"].push_back(file_digest((out_dir / name).string()));
    }
    for (const std::string& name : sorted_matching_files(out_dir, "fit-", ".csv")) {
      params["inputs"].push_back(file_digest((out_dir / name).string()));
    }
    for (const std::string& name : sorted_matching_files(out_dir, "responses-", ".jsonl")) {
      params["inputs"].push_back(file_digest((out_dir / name).string()));
    }
    params["meta"] = file_digest((out_dir / "meta.json").string());
    report_digest = sha256_hex("report" + params.dump());
  }
  run_stage("report", report_digest,
            {"report.md", "summary.csv", "categories.csv", "regressions.csv", "samples.csv",
             "coding_sheet.csv"},
            [&] {
              ReportBundle bundle =
                  assemble_report(out_dir.string(), config.bootstrap.seed,
                                  config.review_sample_k, config.review_sample_pool);
              emit(bundle, "markdown", (out_dir / "report.md").string());
            });

  manifest.save(manifest_path, config.bootstrap.seed);
  return outcome;
}

}  // namespace supaudit
