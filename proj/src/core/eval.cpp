#include "core/eval.hpp"

#include <unordered_map>

#include "core/error.hpp"

namespace supaudit {

std::vector<EvalRecord> join_records(const std::vector<TextInstance>& instances,
                                     const std::vector<ModerationResponse>& responses,
                                     const ThresholdTable* thresholds,
                                     JoinStats* stats) {
  std::unordered_map<std::string, const ModerationResponse*> by_id;
  by_id.reserve(responses.size());
  for (const ModerationResponse& response : responses) {
    by_id[response.instance_id] = &response;
  }

  JoinStats local;
  std::vector<EvalRecord> records;
  records.reserve(instances.size());
  for (const TextInstance& instance : instances) {
    auto it = by_id.find(instance.id);
    if (it == by_id.end()) {
      ++local.missing_responses;
      continue;
    }
    const ModerationResponse& response = *it->second;
    if (response.error) {
      ++local.excluded_errors;
      continue;
    }
    EvalRecord record;
    record.instance_id = instance.id;
    record.identities = instance.identities;
    record.should_flag = instance.should_flag;
    record.predicted_flag = response.overall_flag;
    record.family = instance.family;
    record.has_slur = instance.has_slur;
    record.word_count = instance.word_count;
    record.dataset = instance.dataset;
    record.category_flags = response.category_flags;
    if (response.category_scores && !response.category_scores->empty()) {
      if (thresholds) {
        record.category_scores = normalize_scores(response, *thresholds);
      } else {
        record.category_scores = response.category_scores;
      }
      double worst = 0;
      bool first = true;
      for (const auto& [category, value] : *record.category_scores) {
        if (first || value > worst) worst = value;
        first = false;
      }
      record.worst_score = worst;
    }
    records.push_back(std::move(record));
  }
  if (stats) *stats = local;
  return records;
}

}  // namespace supaudit
