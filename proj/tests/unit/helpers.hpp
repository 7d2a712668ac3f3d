#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/eval.hpp"
#include "core/rng.hpp"

namespace testutil {

// Scratch directory unique to the test process, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    directory_ = std::filesystem::temp_directory_path() /
                 ("supaudit-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(directory_);
    std::filesystem::create_directories(directory_);
  }
  ~TempDir() { std::filesystem::remove_all(directory_); }

  std::string path(const std::string& name) const { return (directory_ / name).string(); }
  const std::filesystem::path& dir() const { return directory_; }

 private:
  std::filesystem::path directory_;
};

inline void write_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  return contents;
}

// Minimal flag-bearing record for metric tests.
inline supaudit::EvalRecord flag_record(const std::string& id, bool should_flag,
                                        bool predicted,
                                        std::initializer_list<supaudit::GeneralIdentity>
                                            identities = {}) {
  supaudit::EvalRecord record;
  record.instance_id = id;
  record.should_flag = should_flag;
  record.predicted_flag = predicted;
  for (supaudit::GeneralIdentity identity : identities) record.identities.insert(identity);
  return record;
}

inline supaudit::EvalRecord score_record(const std::string& id, bool should_flag,
                                         double worst,
                                         std::initializer_list<supaudit::GeneralIdentity>
                                             identities = {}) {
  supaudit::EvalRecord record;
  record.instance_id = id;
  record.should_flag = should_flag;
  record.worst_score = worst;
  for (supaudit::GeneralIdentity identity : identities) record.identities.insert(identity);
  return record;
}

}  // namespace testutil
