#include "core/backends.hpp"

// httplib uses select/socket APIs; keep it out of the public headers.
#include <httplib.h>

#include <cstdlib>

#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

BackendConfig backend_config_from_json(const json& object, const std::string& where) {
  BackendConfig config;
  if (!object.is_object()) throw Error(ErrorKind::parse, where + ": backend must be an object");
  if (!object.contains("name")) throw Error(ErrorKind::parse, where + ": backend missing 'name'");
  config.name = object.at("name").get<std::string>();
  std::string kind = object.value("kind", std::string("score_only"));
  auto parsed_kind = backend_kind_from_string(kind);
  if (!parsed_kind) throw Error(ErrorKind::parse, where + ": unknown backend kind '" + kind + "'");
  config.kind = *parsed_kind;
  config.wire = object.value("wire", std::string("mock"));
  if (config.wire != "mock" && config.wire != "openai_moderation" &&
      config.wire != "llama_guard" && config.wire != "allow_block") {
    throw Error(ErrorKind::parse, where + ": unknown wire '" + config.wire + "'");
  }
  if (object.contains("categories")) {
    config.categories = object.at("categories").get<std::vector<std::string>>();
  }
  config.endpoint = object.value("endpoint", std::string());
  config.api_key_env = object.value("api_key_env", std::string());
  config.parallelism = object.value("parallelism", 4);
  config.normalize = object.value("normalize", false);
  config.retry_max_attempts = object.value("retry_max_attempts", 3);
  config.retry_base_ms = object.value("retry_base_ms", 1000);
  if (object.contains("mock")) {
    const json& mock = object.at("mock");
    config.mock.seed = mock.value("seed", 0ULL);
    config.mock.flag_threshold = mock.value("flag_threshold", 0.5);
    config.mock.jitter = mock.value("jitter", 0.05);
    if (mock.contains("keywords")) {
      for (const auto& [keyword, weights] : mock.at("keywords").items()) {
        for (const auto& [category, weight] : weights.items()) {
          config.mock.keyword_weights[ascii_lower_copy(keyword)][category] =
              weight.get<double>();
        }
      }
    }
  }
  return config;
}

std::vector<BackendConfig> load_backends_json(const std::string& path) {
  json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::parse, path + ": malformed JSON");
  std::vector<BackendConfig> configs;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      configs.push_back(backend_config_from_json(doc[i], path + "[" + std::to_string(i) + "]"));
    }
  } else {
    configs.push_back(backend_config_from_json(doc, path));
  }
  return configs;
}

BackendDescriptor descriptor_from_config(const BackendConfig& config) {
  BackendDescriptor descriptor;
  descriptor.name = config.name;
  descriptor.kind = config.kind;
  descriptor.categories = config.categories;
  switch (config.kind) {
    case BackendKind::score_only:
      descriptor.returns_scores = true;
      break;
    case BackendKind::flag_only:
    case BackendKind::prompted_llm:
      descriptor.returns_flags = true;
      break;
    case BackendKind::scores_and_flags:
      descriptor.returns_flags = true;
      descriptor.returns_scores = true;
      break;
  }
  return descriptor;
}

namespace {

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t hash = 0xcbf29ce484222325ULL ^ seed;
  for (char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

MockBackend::MockBackend(std::string name, std::vector<std::string> categories,
                         MockConfig config)
    : config_(std::move(config)) {
  descriptor_.name = std::move(name);
  descriptor_.kind = BackendKind::scores_and_flags;
  descriptor_.returns_flags = true;
  descriptor_.returns_scores = true;
  descriptor_.categories = std::move(categories);
}

ModerationResponse MockBackend::moderate(const std::string& instance_id,
                                         const std::string& text) {
  std::map<std::string, double> scores;
  std::map<std::string, bool> flags;
  for (const std::string& category : descriptor_.categories) scores[category] = 0.0;

  if (!text.empty()) {
    std::string lower = ascii_lower_copy(text);
    // Keyword hits: whole-token matches over lowercased text.
    std::size_t i = 0;
    while (i < lower.size()) {
      if (!is_word_byte(lower[i])) {
        ++i;
        continue;
      }
      std::size_t end = i;
      while (end < lower.size() && is_word_byte(lower[end])) ++end;
      auto it = config_.keyword_weights.find(lower.substr(i, end - i));
      if (it != config_.keyword_weights.end()) {
        for (const auto& [category, weight] : it->second) {
          scores[category] += weight;
        }
      }
      i = end;
    }
    for (const std::string& category : descriptor_.categories) {
      uint64_t h = fnv1a64(text, config_.seed) ^ fnv1a64(category, 0x9e3779b97f4a7c15ULL);
      double jitter = static_cast<double>(h % 100000) / 100000.0 * config_.jitter;
      double value = scores[category] + jitter;
      scores[category] = value < 0.0 ? 0.0 : (value > 1.0 ? 1.0 : value);
    }
  }

  bool any = false;
  for (const std::string& category : descriptor_.categories) {
    bool flagged = scores[category] > config_.flag_threshold;
    flags[category] = flagged;
    any = any || flagged;
  }

  ModerationResponse response;
  response.instance_id = instance_id;
  response.backend = descriptor_.name;
  response.overall_flag = any;
  response.category_flags = flags;
  response.category_scores = scores;
  ordered_json raw;
  raw["flagged"] = any;
  raw["category_flags"] = flags;
  raw["category_scores"] = scores;
  response.raw = raw.dump();
  response.received_at = "1970-01-01T00:00:00Z";  // fixed: mock runs must be reproducible
  return response;
}

namespace {

struct ParsedEndpoint {
  std::string host_port;  // scheme://host[:port]
  std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  std::size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorKind::validation, "endpoint must include a scheme: " + endpoint);
  }
  std::size_t path_start = endpoint.find('/', scheme + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(const BackendConfig& config)
      : config_(config), descriptor_(descriptor_from_config(config)) {
    if (config_.endpoint.empty()) {
      throw Error(ErrorKind::validation,
                  "backend '" + config_.name + "' has no endpoint configured");
    }
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (key) api_key_ = key;
    }
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  ModerationResponse moderate(const std::string& instance_id,
                              const std::string& text) override {
    ParsedEndpoint endpoint = parse_endpoint(config_.endpoint);
    httplib::Client client(endpoint.host_port);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    ordered_json body;
    if (config_.wire == "openai_moderation") {
      body["input"] = text;
    } else {
      body["prompt"] = text;
    }
    auto result = client.Post(endpoint.path, headers, body.dump(), "application/json");
    if (!result) {
      throw TransientError("backend '" + config_.name +
                           "': connection failed: " + httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403) {
      throw Error(ErrorKind::auth, "backend '" + config_.name + "': authentication failed (HTTP " +
                                       std::to_string(result->status) + ")");
    }
    if (result->status == 429 || result->status >= 500) {
      int retry_after_ms = -1;
      if (result->has_header("Retry-After")) {
        try {
          retry_after_ms = std::stoi(result->get_header_value("Retry-After")) * 1000;
        } catch (const std::exception&) {
        }
      }
      throw TransientError("backend '" + config_.name + "': HTTP " +
                               std::to_string(result->status),
                           retry_after_ms);
    }
    if (result->status != 200) {
      throw Error(ErrorKind::backend, "backend '" + config_.name + "': HTTP " +
                                          std::to_string(result->status));
    }

    ModerationResponse response;
    response.instance_id = instance_id;
    response.backend = config_.name;
    response.raw = result->body;
    response.received_at = iso8601_utc_now();
    parse_body(response);
    return response;
  }

 private:
  void parse_body(ModerationResponse& response) const {
    if (config_.wire == "openai_moderation") {
      json doc = json::parse(response.raw, nullptr, false);
      if (doc.is_discarded() || !doc.contains("results") || doc.at("results").empty()) {
        response.error = "parse_error: missing results";
        return;
      }
      const json& result = doc.at("results").at(0);
      if (result.contains("flagged")) response.overall_flag = result.at("flagged").get<bool>();
      if (result.contains("categories")) {
        response.category_flags = result.at("categories").get<std::map<std::string, bool>>();
      }
      if (result.contains("category_scores")) {
        response.category_scores =
            result.at("category_scores").get<std::map<std::string, double>>();
      }
      return;
    }
    // Prompted-LLM wires return a completion to be parsed.
    std::string completion = response.raw;
    json doc = json::parse(response.raw, nullptr, false);
    if (!doc.is_discarded() && doc.is_object() && doc.contains("completion")) {
      completion = doc.at("completion").get<std::string>();
    }
    VerdictStyle style = config_.wire == "llama_guard" ? VerdictStyle::llama_guard
                                                       : VerdictStyle::allow_block;
    try {
      Verdict verdict = parse_verdict(completion, style, config_.categories);
      response.overall_flag = verdict.flag;
      if (!verdict.category_flags.empty()) response.category_flags = verdict.category_flags;
    } catch (const Error& e) {
      response.error = std::string("parse_error: ") + e.what();
    }
  }

  BackendConfig config_;
  BackendDescriptor descriptor_;
  std::string api_key_;
};

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.wire == "mock") {
    return std::make_unique<MockBackend>(config.name, config.categories, config.mock);
  }
  return std::make_unique<HttpBackend>(config);
}

}  // namespace supaudit
