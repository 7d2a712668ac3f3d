#pragma once

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/moderation.hpp"

namespace supaudit {

struct MockConfig {
  uint64_t seed = 0;
  double flag_threshold = 0.5;
  double jitter = 0.05;
  // keyword -> category -> weight
  std::map<std::string, std::map<std::string, double>> keyword_weights;
};

struct BackendConfig {
  std::string name;
  BackendKind kind = BackendKind::score_only;
  // Response mapping: "mock", "openai_moderation", "llama_guard", "allow_block".
  std::string wire = "mock";
  std::vector<std::string> categories;
  std::string endpoint;     // http(s)://host[:port]/path
  std::string api_key_env;  // credentials come from the environment only
  int parallelism = 4;
  // Divide category scores by estimated flagging thresholds before ranking.
  bool normalize = false;
  int retry_max_attempts = 3;
  int retry_base_ms = 1000;
  MockConfig mock;
};

BackendConfig backend_config_from_json(const nlohmann::json& object,
                                       const std::string& where);
std::vector<BackendConfig> load_backends_json(const std::string& path);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendDescriptor& descriptor() const = 0;
  // Throws TransientError for retryable failures and Error(auth) when the
  // service rejects the credentials.
  virtual ModerationResponse moderate(const std::string& instance_id,
                                      const std::string& text) = 0;
};

// Deterministic offline backend: category scores come from a keyword-weight
// table plus hash-derived jitter; flags fire above a fixed threshold.
class MockBackend : public Backend {
 public:
  MockBackend(std::string name, std::vector<std::string> categories, MockConfig config);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  ModerationResponse moderate(const std::string& instance_id,
                              const std::string& text) override;

 private:
  BackendDescriptor descriptor_;
  MockConfig config_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

BackendDescriptor descriptor_from_config(const BackendConfig& config);

}  // namespace supaudit
