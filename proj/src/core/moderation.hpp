#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace supaudit {

enum class BackendKind : uint8_t {
  score_only,
  flag_only,
  scores_and_flags,
  prompted_llm,
};

const char* to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view name);

struct BackendDescriptor {
  std::string name;
  bool returns_flags = false;
  bool returns_scores = false;
  std::vector<std::string> categories;
  BackendKind kind = BackendKind::score_only;
};

struct ModerationResponse {
  std::string instance_id;
  std::string backend;
  std::optional<bool> overall_flag;
  std::optional<std::map<std::string, bool>> category_flags;
  std::optional<std::map<std::string, double>> category_scores;
  std::string raw;  // verbatim response payload
  std::string received_at;
  int attempts = 1;
  // Permanent transport failure or unparseable completion; such entries are
  // excluded from metrics and surfaced as counts.
  std::optional<std::string> error;

  bool operator==(const ModerationResponse&) const = default;
};

struct ThresholdBounds {
  double lower = 0;
  double upper = 1;
  double chosen = 0.5;
};

struct ThresholdTable {
  std::string backend;
  std::map<std::string, ThresholdBounds> categories;
};

struct Observation {
  std::string category;
  double score = 0;
  bool flag = false;
};

struct ThresholdEstimate {
  ThresholdTable table;
  // Categories with only flagged or only unflagged observations.
  std::vector<std::string> one_sided_categories;
};

// lower = max score among unflagged, upper = min score among flagged,
// chosen = midpoint. Inconsistent observations (lower > upper) are an error.
ThresholdEstimate estimate_thresholds(const std::vector<Observation>& observations);

// normalized[c] = score[c] / chosen[c]; errors when a present category has no
// threshold entry.
std::map<std::string, double> normalize_scores(const ModerationResponse& response,
                                               const ThresholdTable& thresholds);

// Max per-category score, normalized when a threshold table is supplied.
double worst_score(const ModerationResponse& response,
                   const ThresholdTable* thresholds = nullptr);

enum class VerdictStyle : uint8_t {
  llama_guard,  // "safe" | "unsafe\nO1,O5"
  allow_block,  // "ALLOW" | "BLOCK"
};

struct Verdict {
  bool flag = false;
  std::map<std::string, bool> category_flags;
  std::vector<std::string> unexpected_codes;
};

// Throws Error(parse) on completions that violate the prompt contract.
// Category codes "O<k>" map positionally onto `categories`; unexpected codes
// are preserved verbatim.
Verdict parse_verdict(std::string_view raw, VerdictStyle style,
                      const std::vector<std::string>& categories);

// Pairs every (category score, category flag) present in flag+score responses.
std::vector<Observation> observations_from_responses(
    const std::vector<ModerationResponse>& responses);

std::string response_to_json_line(const ModerationResponse& response);
ModerationResponse response_from_json_line(const std::string& line,
                                           const std::string& where);
std::vector<ModerationResponse> read_responses_jsonl(const std::string& path);
void write_responses_jsonl(const std::string& path,
                           const std::vector<ModerationResponse>& responses);

void write_threshold_json(const std::string& path, const ThresholdEstimate& estimate);
ThresholdTable load_threshold_json(const std::string& path);

}  // namespace supaudit
