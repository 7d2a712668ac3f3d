#include "core/moderation.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

using ordered_json = nlohmann::ordered_json;

const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::score_only: return "score_only";
    case BackendKind::flag_only: return "flag_only";
    case BackendKind::scores_and_flags: return "scores_and_flags";
    case BackendKind::prompted_llm: return "prompted_llm";
  }
  return "?";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view name) {
  if (name == "score_only") return BackendKind::score_only;
  if (name == "flag_only") return BackendKind::flag_only;
  if (name == "scores_and_flags") return BackendKind::scores_and_flags;
  if (name == "prompted_llm") return BackendKind::prompted_llm;
  return std::nullopt;
}

ThresholdEstimate estimate_thresholds(const std::vector<Observation>& observations) {
  struct Extremes {
    std::optional<double> max_unflagged;
    std::optional<double> min_flagged;
  };
  std::map<std::string, Extremes> per_category;
  for (const Observation& obs : observations) {
    Extremes& e = per_category[obs.category];
    if (obs.flag) {
      if (!e.min_flagged || obs.score < *e.min_flagged) e.min_flagged = obs.score;
    } else {
      if (!e.max_unflagged || obs.score > *e.max_unflagged) e.max_unflagged = obs.score;
    }
  }
  ThresholdEstimate estimate;
  for (const auto& [category, e] : per_category) {
    if (!e.max_unflagged || !e.min_flagged) {
      estimate.one_sided_categories.push_back(category);
      continue;
    }
    if (*e.max_unflagged > *e.min_flagged) {
      throw Error(ErrorKind::compute,
                  "inconsistent observations for category '" + category +
                      "': an unflagged score (" + format_double(*e.max_unflagged) +
                      ") exceeds a flagged score (" + format_double(*e.min_flagged) + ")");
    }
    ThresholdBounds bounds;
    bounds.lower = *e.max_unflagged;
    bounds.upper = *e.min_flagged;
    bounds.chosen = (bounds.lower + bounds.upper) / 2;
    estimate.table.categories[category] = bounds;
  }
  return estimate;
}

std::map<std::string, double> normalize_scores(const ModerationResponse& response,
                                               const ThresholdTable& thresholds) {
  if (!response.category_scores) {
    throw Error(ErrorKind::compute, "normalize_scores: response has no category scores");
  }
  std::map<std::string, double> normalized;
  for (const auto& [category, score] : *response.category_scores) {
    auto it = thresholds.categories.find(category);
    if (it == thresholds.categories.end()) {
      throw Error(ErrorKind::compute,
                  "no flagging threshold for category '" + category + "'");
    }
    normalized[category] = score / it->second.chosen;
  }
  return normalized;
}

double worst_score(const ModerationResponse& response, const ThresholdTable* thresholds) {
  if (!response.category_scores || response.category_scores->empty()) {
    throw Error(ErrorKind::compute, "worst_score: response has no category scores");
  }
  double worst = 0;
  bool first = true;
  if (thresholds) {
    for (const auto& [category, value] : normalize_scores(response, *thresholds)) {
      if (first || value > worst) worst = value;
      first = false;
    }
  } else {
    for (const auto& [category, value] : *response.category_scores) {
      if (first || value > worst) worst = value;
      first = false;
    }
  }
  return worst;
}

Verdict parse_verdict(std::string_view raw, VerdictStyle style,
                      const std::vector<std::string>& categories) {
  Verdict verdict;
  if (style == VerdictStyle::allow_block) {
    std::string token = ascii_lower_copy(trim_copy(raw));
    if (token == "allow") {
      verdict.flag = false;
    } else if (token == "block") {
      verdict.flag = true;
    } else {
      throw Error(ErrorKind::parse,
                  "expected ALLOW or BLOCK, got: '" + trim_copy(raw) + "'");
    }
    return verdict;
  }

  // Llama Guard style: first line is the verdict, second line lists codes.
  std::vector<std::string> lines = split(std::string(raw), '\n');
  std::string first_line = ascii_lower_copy(trim_copy(lines.empty() ? "" : lines[0]));
  if (first_line == "safe") {
    verdict.flag = false;
    return verdict;
  }
  if (first_line != "unsafe") {
    throw Error(ErrorKind::parse, "expected 'safe' or 'unsafe' first line, got: '" +
                                      trim_copy(lines.empty() ? "" : lines[0]) + "'");
  }
  verdict.flag = true;
  for (const std::string& category : categories) verdict.category_flags[category] = false;
  if (lines.size() > 1) {
    for (const std::string& code_raw : split(lines[1], ',')) {
      std::string code = trim_copy(code_raw);
      if (code.empty()) continue;
      std::size_t position = std::string::npos;
      if ((code[0] == 'O' || code[0] == 'o') && code.size() > 1) {
        bool digits = std::all_of(code.begin() + 1, code.end(),
                                  [](char c) { return c >= '0' && c <= '9'; });
        if (digits) position = static_cast<std::size_t>(std::stoul(code.substr(1))) - 1;
      }
      if (position < categories.size()) {
        verdict.category_flags[categories[position]] = true;
      } else {
        verdict.category_flags[code] = true;
        verdict.unexpected_codes.push_back(code);
      }
    }
  }
  return verdict;
}

std::vector<Observation> observations_from_responses(
    const std::vector<ModerationResponse>& responses) {
  std::vector<Observation> observations;
  for (const ModerationResponse& response : responses) {
    if (response.error || !response.category_scores || !response.category_flags) continue;
    for (const auto& [category, score] : *response.category_scores) {
      auto it = response.category_flags->find(category);
      if (it == response.category_flags->end()) continue;
      observations.push_back(Observation{category, score, it->second});
    }
  }
  return observations;
}

std::string response_to_json_line(const ModerationResponse& response) {
  ordered_json object;
  object["instance_id"] = response.instance_id;
  object["backend"] = response.backend;
  if (response.overall_flag) object["overall_flag"] = *response.overall_flag;
  if (response.category_flags) object["category_flags"] = *response.category_flags;
  if (response.category_scores) object["category_scores"] = *response.category_scores;
  object["raw"] = response.raw;
  object["received_at"] = response.received_at;
  object["attempts"] = response.attempts;
  if (response.error) object["error"] = *response.error;
  return object.dump();
}

ModerationResponse response_from_json_line(const std::string& line,
                                           const std::string& where) {
  ordered_json object = ordered_json::parse(line, nullptr, false);
  if (object.is_discarded() || !object.is_object()) {
    throw Error(ErrorKind::parse, where + ": malformed JSON");
  }
  ModerationResponse response;
  try {
    response.instance_id = object.at("instance_id").get<std::string>();
    response.backend = object.at("backend").get<std::string>();
    if (object.contains("overall_flag")) {
      response.overall_flag = object.at("overall_flag").get<bool>();
    }
    if (object.contains("category_flags")) {
      response.category_flags = object.at("category_flags").get<std::map<std::string, bool>>();
    }
    if (object.contains("category_scores")) {
      response.category_scores =
          object.at("category_scores").get<std::map<std::string, double>>();
    }
    response.raw = object.value("raw", std::string());
    response.received_at = object.value("received_at", std::string());
    response.attempts = object.value("attempts", 1);
    if (object.contains("error")) response.error = object.at("error").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, where + ": " + e.what());
  }
  if (response.category_scores) {
    for (const auto& [category, score] : *response.category_scores) {
      if (score < 0.0 || score > 1.0) {
        throw Error(ErrorKind::parse, where + ": score for '" + category +
                                          "' outside [0,1]: " + format_double(score));
      }
    }
  }
  return response;
}

std::vector<ModerationResponse> read_responses_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open file: " + path);
  std::vector<ModerationResponse> responses;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim_copy(line).empty()) continue;
    responses.push_back(
        response_from_json_line(line, path + ":" + std::to_string(line_number)));
  }
  return responses;
}

void write_responses_jsonl(const std::string& path,
                           const std::vector<ModerationResponse>& responses) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  for (const ModerationResponse& response : responses) {
    out << response_to_json_line(response) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

void write_threshold_json(const std::string& path, const ThresholdEstimate& estimate) {
  ordered_json object;
  object["backend"] = estimate.table.backend;
  ordered_json categories = ordered_json::object();
  for (const auto& [name, bounds] : estimate.table.categories) {
    categories[name] = {{"lower", bounds.lower},
                        {"upper", bounds.upper},
                        {"chosen", bounds.chosen}};
  }
  object["categories"] = std::move(categories);
  if (!estimate.one_sided_categories.empty()) {
    object["one_sided_categories"] = estimate.one_sided_categories;
  }
  write_file(path, object.dump(2) + "\n");
}

ThresholdTable load_threshold_json(const std::string& path) {
  nlohmann::json object = nlohmann::json::parse(read_file(path), nullptr, false);
  if (object.is_discarded() || !object.is_object()) {
    throw Error(ErrorKind::parse, path + ": malformed threshold table");
  }
  ThresholdTable table;
  table.backend = object.value("backend", std::string());
  if (!object.contains("categories")) {
    throw Error(ErrorKind::parse, path + ": missing 'categories'");
  }
  for (const auto& [name, bounds] : object.at("categories").items()) {
    ThresholdBounds entry;
    entry.lower = bounds.at("lower").get<double>();
    entry.upper = bounds.at("upper").get<double>();
    entry.chosen = bounds.at("chosen").get<double>();
    if (!(entry.lower <= entry.chosen && entry.chosen <= entry.upper && entry.upper <= 1.0)) {
      throw Error(ErrorKind::parse, path + ": bounds out of order for '" + name + "'");
    }
    table.categories[name] = entry;
  }
  return table;
}

}  // namespace supaudit
