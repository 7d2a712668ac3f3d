#include "core/batch.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <thread>

#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

namespace {

std::string cache_key(const std::string& backend, const std::string& text_hash) {
  return backend + "\n" + text_hash;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (std::filesystem::exists(file_)) {
    std::ifstream in(file_);
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (trim_copy(line).empty()) continue;
      std::string where = file_.string() + ":" + std::to_string(line_number);
      nlohmann::json object = nlohmann::json::parse(line, nullptr, false);
      if (object.is_discarded() || !object.contains("text_hash") ||
          !object.contains("response")) {
        throw Error(ErrorKind::parse, where + ": malformed cache entry");
      }
      ModerationResponse response =
          response_from_json_line(object.at("response").dump(), where);
      entries_[cache_key(response.backend, object.at("text_hash").get<std::string>())] =
          std::move(response);
    }
  } else if (file_.has_parent_path()) {
    std::filesystem::create_directories(file_.parent_path());
  }
  appender_.open(file_, std::ios::binary | std::ios::app);
  if (!appender_) throw Error(ErrorKind::io, "cannot open cache for append: " + file_.string());
}

std::optional<ModerationResponse> ResponseCache::find(const std::string& backend,
                                                      const std::string& text_hash) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(cache_key(backend, text_hash));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& text_hash, const ModerationResponse& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::string key = cache_key(response.backend, text_hash);
  if (entries_.count(key)) return;
  entries_[key] = response;
  nlohmann::ordered_json entry;
  entry["text_hash"] = text_hash;
  entry["response"] = nlohmann::ordered_json::parse(response_to_json_line(response));
  appender_ << entry.dump() << '\n';
  appender_.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

std::vector<ModerationResponse> moderate_batch(const std::vector<TextInstance>& instances,
                                               Backend& backend,
                                               ResponseCache* cache,
                                               const BatchOptions& options,
                                               BatchStats* stats) {
  if (options.parallelism < 1) {
    throw Error(ErrorKind::validation, "parallelism must be >= 1");
  }
  const std::string backend_name = backend.descriptor().name;
  std::vector<ModerationResponse> responses(instances.size());
  std::vector<std::size_t> pending;  // one representative index per unique text
  std::unordered_map<std::string, std::vector<std::size_t>> followers;
  std::vector<std::string> hashes(instances.size());
  BatchStats local_stats;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    hashes[i] = sha256_hex(instances[i].text);
    if (cache) {
      if (auto hit = cache->find(backend_name, hashes[i])) {
        // Same text under a different id reuses the payload verbatim.
        hit->instance_id = instances[i].id;
        responses[i] = std::move(*hit);
        ++local_stats.cache_hits;
        continue;
      }
    }
    auto [it, first_seen] = followers.try_emplace(hashes[i]);
    if (first_seen) pending.push_back(i);
    else ++local_stats.cache_hits;  // duplicate text within the batch
    it->second.push_back(i);
  }

  std::atomic<std::size_t> cursor{0};
  std::atomic<std::size_t> retries{0};
  std::atomic<std::size_t> failures{0};
  std::mutex abort_mutex;
  std::exception_ptr abort_error;

  auto worker = [&] {
    while (true) {
      std::size_t slot = cursor.fetch_add(1);
      if (slot >= pending.size()) return;
      {
        std::lock_guard<std::mutex> lock(abort_mutex);
        if (abort_error) return;
      }
      std::size_t index = pending[slot];
      const TextInstance& instance = instances[index];
      ModerationResponse response;
      int attempt = 0;
      while (true) {
        ++attempt;
        try {
          response = backend.moderate(instance.id, instance.text);
          response.attempts = attempt;
          break;
        } catch (const TransientError& e) {
          if (attempt >= options.max_attempts) {
            response = ModerationResponse{};
            response.instance_id = instance.id;
            response.backend = backend_name;
            response.attempts = attempt;
            response.error = std::string("failed after ") + std::to_string(attempt) +
                             " attempts: " + e.what();
            response.received_at = iso8601_utc_now();
            ++failures;
            break;
          }
          ++retries;
          int backoff_ms = options.retry_base_ms << (attempt - 1);
          if (e.retry_after_ms() >= 0) backoff_ms = e.retry_after_ms();
          std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        } catch (...) {
          // Authentication and other permanent backend errors abort the batch.
          std::lock_guard<std::mutex> lock(abort_mutex);
          if (!abort_error) abort_error = std::current_exception();
          return;
        }
      }
      if (cache && !response.error) cache->put(hashes[index], response);
      for (std::size_t follower : followers.at(hashes[index])) {
        responses[follower] = response;
        responses[follower].instance_id = instances[follower].id;
      }
    }
  };

  std::size_t thread_count =
      std::min<std::size_t>(static_cast<std::size_t>(options.parallelism), pending.size());
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (std::thread& thread : threads) thread.join();
  }
  if (abort_error) std::rethrow_exception(abort_error);

  local_stats.requests_sent = pending.size();
  local_stats.retries = retries.load();
  local_stats.failures = failures.load();
  if (stats) *stats = local_stats;
  return responses;
}

}  // namespace supaudit
