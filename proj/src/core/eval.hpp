#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/identity.hpp"
#include "core/moderation.hpp"

namespace supaudit {

// Joined (instance, backend) row: ground truth plus the backend's verdicts.
// Category scores are stored on the same scale as worst_score (normalized
// when a threshold table applied).
struct EvalRecord {
  std::string instance_id;
  IdentitySet identities;
  bool should_flag = false;
  std::optional<bool> predicted_flag;
  std::optional<double> worst_score;
  std::optional<std::map<std::string, bool>> category_flags;
  std::optional<std::map<std::string, double>> category_scores;
  Family family = Family::traditional;
  bool has_slur = false;
  int word_count = 0;
  std::string dataset;
};

struct JoinStats {
  long excluded_errors = 0;    // responses carrying transport/parse errors
  long missing_responses = 0;  // instances with no response at all
};

// Joins tagged instances with one backend's responses. Error entries are
// excluded and counted rather than silently dropped.
std::vector<EvalRecord> join_records(const std::vector<TextInstance>& instances,
                                     const std::vector<ModerationResponse>& responses,
                                     const ThresholdTable* thresholds,
                                     JoinStats* stats = nullptr);

}  // namespace supaudit
