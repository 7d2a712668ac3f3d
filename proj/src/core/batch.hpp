#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/backends.hpp"
#include "core/corpus.hpp"
#include "core/moderation.hpp"

namespace supaudit {

// Append-only JSONL response store keyed by (backend name, sha256 of text).
// Raw payloads are kept verbatim so audits can be replayed.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path file);

  std::optional<ModerationResponse> find(const std::string& backend,
                                         const std::string& text_hash) const;
  void put(const std::string& text_hash, const ModerationResponse& response);
  std::size_t size() const;

 private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, ModerationResponse> entries_;  // "backend\nhash"
  std::ofstream appender_;
};

struct BatchOptions {
  int parallelism = 1;
  int max_attempts = 3;
  int retry_base_ms = 1000;
};

struct BatchStats {
  std::size_t requests_sent = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
  std::size_t failures = 0;  // permanent: recorded as error entries
};

// One response per instance, in input order. Cached responses are reused;
// at most `parallelism` requests are in flight; transient failures retry
// with exponential backoff, honoring server retry-after hints.
std::vector<ModerationResponse> moderate_batch(const std::vector<TextInstance>& instances,
                                               Backend& backend,
                                               ResponseCache* cache,
                                               const BatchOptions& options,
                                               BatchStats* stats = nullptr);

}  // namespace supaudit
