#include "core/config.hpp"

#include <json.hpp>

#include <set>

#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

using nlohmann::json;

RunConfig load_run_config(const std::string& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::parse, path + ": malformed config");
  }
  RunConfig config;
  config.base_dir = std::filesystem::absolute(std::filesystem::path(path)).parent_path();

  if (doc.contains("datasets")) {
    for (const auto& entry : doc.at("datasets")) {
      DatasetConfig dataset;
      dataset.name = entry.value("name", std::string());
      dataset.path = entry.value("path", std::string());
      dataset.format = entry.value("format", std::string("jsonl"));
      if (entry.contains("family")) {
        auto family = family_from_string(entry.at("family").get<std::string>());
        if (family) dataset.family = *family;
        else throw Error(ErrorKind::parse, path + ": bad family in dataset '" + dataset.name + "'");
      }
      if (entry.contains("label_scheme")) {
        dataset.label_scheme = entry.at("label_scheme").get<std::string>();
      }
      if (entry.contains("columns")) {
        const auto& columns = entry.at("columns");
        CsvColumnMap map;
        map.id = columns.value("id", std::string("id"));
        map.text = columns.value("text", std::string("text"));
        map.should_flag = columns.value("should_flag", std::string("should_flag"));
        if (columns.contains("subset")) map.subset = columns.at("subset").get<std::string>();
        if (columns.contains("identities")) {
          map.identities = columns.at("identities").get<std::string>();
        }
        dataset.columns = map;
      }
      config.datasets.push_back(std::move(dataset));
    }
  }
  config.lexicon = doc.value("lexicon", std::string());
  if (doc.contains("associations")) {
    if (doc.at("associations").is_array()) {
      config.associations = doc.at("associations").get<std::vector<std::string>>();
    } else {
      config.associations.push_back(doc.at("associations").get<std::string>());
    }
  }
  if (doc.contains("backends")) {
    const auto& backends = doc.at("backends");
    for (std::size_t i = 0; i < backends.size(); ++i) {
      config.backends.push_back(backend_config_from_json(
          backends[i], path + ": backends[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("bootstrap")) {
    const auto& bootstrap = doc.at("bootstrap");
    config.bootstrap.n_samples = bootstrap.value("n_samples", 1000);
    config.bootstrap.level = bootstrap.value("level", 0.95);
    if (bootstrap.contains("seed")) {
      config.bootstrap.seed = bootstrap.at("seed").get<uint64_t>();
      config.bootstrap.seed_set = true;
    }
    config.bootstrap.universe = bootstrap.value("universe", std::string("full"));
  }
  config.out_dir = doc.value("out_dir", std::string("out"));
  config.cache_path = doc.value("cache", std::string());
  config.threads = doc.value("threads", 0);
  if (doc.contains("release_cutoffs")) {
    const auto& cutoffs = doc.at("release_cutoffs");
    config.cutoffs.movie_year_min = cutoffs.value("movie_year_min", 1986);
    config.cutoffs.tv_year_min = cutoffs.value("tv_year_min", 1998);
  }
  if (doc.contains("review_sample")) {
    const auto& review = doc.at("review_sample");
    config.review_sample_k = review.value("k", 50);
    config.review_sample_pool = review.value("pool", 1500);
  }
  return config;
}

std::string resolve_path(const RunConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (config.base_dir / p).string();
}

std::vector<std::string> validate_config(const RunConfig& config) {
  std::vector<std::string> problems;
  auto note = [&](const std::string& problem) { problems.push_back(problem); };

  if (config.datasets.empty()) note("no datasets configured");
  std::set<std::string> dataset_names;
  for (const DatasetConfig& dataset : config.datasets) {
    std::string label = "dataset '" + dataset.name + "'";
    if (dataset.name.empty()) note("dataset with empty name");
    else if (!dataset_names.insert(dataset.name).second) note("duplicate " + label);
    if (dataset.path.empty()) {
      note(label + ": no path");
    } else if (!std::filesystem::exists(resolve_path(config, dataset.path))) {
      note(label + ": file not found: " + resolve_path(config, dataset.path));
    }
    if (dataset.format != "jsonl" && dataset.format != "media-csv" && dataset.format != "csv") {
      note(label + ": unknown format '" + dataset.format + "'");
    }
    if (dataset.format == "media-csv") {
      if (dataset.family != Family::genai) note(label + ": media-csv datasets are genai");
      std::string scheme = dataset.label_scheme.value_or("pg13-ok");
      try {
        LabelScheme::from_name(scheme);
      } catch (const Error& e) {
        note(label + ": " + e.what());
      }
    }
    if (dataset.format == "csv" && !dataset.columns) {
      note(label + ": csv format needs a 'columns' map");
    }
  }

  if (config.lexicon.empty()) {
    note("no lexicon configured");
  } else if (!std::filesystem::exists(resolve_path(config, config.lexicon))) {
    note("lexicon file not found: " + resolve_path(config, config.lexicon));
  }
  for (const std::string& association : config.associations) {
    if (!std::filesystem::exists(resolve_path(config, association))) {
      note("association file not found: " + resolve_path(config, association));
    }
  }

  if (config.backends.empty()) note("no backends configured");
  std::set<std::string> backend_names;
  for (const BackendConfig& backend : config.backends) {
    std::string label = "backend '" + backend.name + "'";
    if (backend.name.empty()) note("backend with empty name");
    else if (!backend_names.insert(backend.name).second) note("duplicate " + label);
    if (backend.parallelism < 1) note(label + ": parallelism must be >= 1");
    if (backend.wire != "mock" && backend.endpoint.empty()) note(label + ": no endpoint");
    bool needs_categories = backend.kind == BackendKind::score_only ||
                            backend.kind == BackendKind::scores_and_flags ||
                            backend.wire == "llama_guard";
    if (backend.categories.empty() && needs_categories) {
      note(label + ": no categories configured");
    }
    for (const auto& [keyword, weights] : backend.mock.keyword_weights) {
      for (const auto& [category, weight] : weights) {
        if (weight < 0.0 || weight > 1.0) {
          note(label + ": mock keyword '" + keyword + "' weight outside [0,1]");
        }
      }
    }
  }

  if (!config.bootstrap.seed_set) note("bootstrap.seed must be set explicitly");
  if (config.bootstrap.n_samples < 1) note("bootstrap.n_samples must be >= 1");
  if (!(config.bootstrap.level > 0.0 && config.bootstrap.level < 1.0)) {
    note("bootstrap.level must be in (0,1)");
  }
  if (config.bootstrap.universe != "full" && config.bootstrap.universe != "identity") {
    note("bootstrap.universe must be 'full' or 'identity'");
  }
  if (config.out_dir.empty()) note("out_dir must be set");
  if (config.review_sample_k < 1) note("review_sample.k must be >= 1");
  if (config.review_sample_pool < 1) note("review_sample.pool must be >= 1");
  return problems;
}

}  // namespace supaudit
