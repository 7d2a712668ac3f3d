#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/backends.hpp"
#include "core/corpus.hpp"

namespace supaudit {

struct DatasetConfig {
  std::string name;
  std::string path;
  std::string format = "jsonl";  // jsonl | media-csv | csv
  Family family = Family::traditional;
  std::optional<std::string> label_scheme;  // media-csv only
  std::optional<CsvColumnMap> columns;      // csv only
};

struct BootstrapConfig {
  int n_samples = 1000;
  double level = 0.95;
  uint64_t seed = 0;
  bool seed_set = false;         // the seed must be explicit in the config
  std::string universe = "full";  // full | identity
};

struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::string lexicon;
  std::vector<std::string> associations;
  std::vector<BackendConfig> backends;
  BootstrapConfig bootstrap;
  std::string out_dir = "out";
  std::string cache_path;  // defaults to <out_dir>/cache.jsonl
  int threads = 0;         // 0 = hardware concurrency
  ReleaseCutoffs cutoffs;
  int review_sample_k = 50;
  int review_sample_pool = 1500;
  std::filesystem::path base_dir;  // directory of the config file
};

RunConfig load_run_config(const std::string& path);

// Collects every problem rather than stopping at the first.
std::vector<std::string> validate_config(const RunConfig& config);

// Resolves a possibly-relative path against the config file's directory.
std::string resolve_path(const RunConfig& config, const std::string& path);

}  // namespace supaudit
