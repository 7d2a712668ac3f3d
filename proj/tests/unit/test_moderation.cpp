#include <doctest.h>

#include "core/backends.hpp"
#include "core/error.hpp"
#include "core/moderation.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace supaudit;

namespace {

const std::vector<std::string> kLlamaCategories = {
    "violence_hate", "sexual", "criminal_planning", "guns_weapons", "self_harm", "substances"};

ModerationResponse scored(std::map<std::string, double> scores) {
  ModerationResponse response;
  response.instance_id = "x";
  response.backend = "b";
  response.category_scores = std::move(scores);
  return response;
}

}  // namespace

TEST_SUITE("moderation") {

TEST_CASE("llama-guard verdicts parse to flags and categories") {
  Verdict safe = parse_verdict("safe", VerdictStyle::llama_guard, kLlamaCategories);
  CHECK_FALSE(safe.flag);
  CHECK(safe.category_flags.empty());

  Verdict unsafe = parse_verdict("unsafe\nO1,O5", VerdictStyle::llama_guard, kLlamaCategories);
  CHECK(unsafe.flag);
  CHECK(unsafe.category_flags.at("violence_hate"));
  CHECK(unsafe.category_flags.at("self_harm"));
  CHECK_FALSE(unsafe.category_flags.at("sexual"));
  CHECK(unsafe.unexpected_codes.empty());

  CHECK_THROWS_AS(parse_verdict("maybe", VerdictStyle::llama_guard, kLlamaCategories), Error);
}

TEST_CASE("unexpected category codes are preserved verbatim") {
  Verdict verdict = parse_verdict("unsafe\nO9,zzz", VerdictStyle::llama_guard, kLlamaCategories);
  CHECK(verdict.flag);
  CHECK(verdict.category_flags.at("O9"));
  CHECK(verdict.category_flags.at("zzz"));
  REQUIRE(verdict.unexpected_codes.size() == 2);
}

TEST_CASE("allow/block verdicts") {
  CHECK_FALSE(parse_verdict("ALLOW", VerdictStyle::allow_block, {}).flag);
  CHECK(parse_verdict("BLOCK", VerdictStyle::allow_block, {}).flag);
  CHECK(parse_verdict("  block \n", VerdictStyle::allow_block, {}).flag);
  CHECK_THROWS_AS(parse_verdict("maybe", VerdictStyle::allow_block, {}), Error);
}

TEST_CASE("threshold estimation brackets from extreme observations") {
  std::vector<Observation> observations = {
      {"c", 0.2, false},
      {"c", 0.6, true},
  };
  ThresholdEstimate estimate = estimate_thresholds(observations);
  const ThresholdBounds& bounds = estimate.table.categories.at("c");
  CHECK(bounds.lower == 0.2);
  CHECK(bounds.upper == 0.6);
  CHECK(bounds.chosen == doctest::Approx(0.4));

  // boundary degeneracy: equal flagged/unflagged score
  ThresholdEstimate degenerate =
      estimate_thresholds({{"c", 0.5, true}, {"c", 0.5, false}});
  CHECK(degenerate.table.categories.at("c").lower == 0.5);
  CHECK(degenerate.table.categories.at("c").upper == 0.5);
  CHECK(degenerate.table.categories.at("c").chosen == 0.5);
}

TEST_CASE("inconsistent observations are an error naming the category") {
  CHECK_THROWS_WITH_AS(estimate_thresholds({{"bad", 0.7, false}, {"bad", 0.3, true}}),
                       doctest::Contains("bad"), Error);
}

TEST_CASE("one-sided categories are skipped with a warning") {
  ThresholdEstimate estimate =
      estimate_thresholds({{"onlyflag", 0.9, true}, {"both", 0.1, false}, {"both", 0.9, true}});
  CHECK(estimate.table.categories.count("onlyflag") == 0);
  CHECK(estimate.table.categories.count("both") == 1);
  REQUIRE(estimate.one_sided_categories.size() == 1);
  CHECK(estimate.one_sided_categories[0] == "onlyflag");
}

TEST_CASE("estimated bounds bracket a hidden threshold") {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    double hidden = 0.05 + 0.9 * rng.next_unit();
    std::vector<Observation> observations;
    bool any_flagged = false, any_unflagged = false;
    for (int i = 0; i < 60; ++i) {
      double score = rng.next_unit();
      bool flag = score > hidden;
      any_flagged = any_flagged || flag;
      any_unflagged = any_unflagged || !flag;
      observations.push_back({"c", score, flag});
    }
    if (!any_flagged || !any_unflagged) continue;
    ThresholdEstimate estimate = estimate_thresholds(observations);
    const ThresholdBounds& bounds = estimate.table.categories.at("c");
    CHECK(bounds.lower <= hidden);
    CHECK(hidden <= bounds.upper);
    CHECK(bounds.lower <= bounds.chosen);
    CHECK(bounds.chosen <= bounds.upper);
  }
}

TEST_CASE("normalized scores divide by the chosen threshold") {
  ThresholdTable table;
  table.backend = "b";
  table.categories["harassment"] = {0.439995, 0.44, 0.44};
  table.categories["violence"] = {0.5, 0.6, 0.55};

  auto normalized = normalize_scores(scored({{"harassment", 0.88}, {"violence", 0.0}}), table);
  CHECK(normalized.at("harassment") == doctest::Approx(2.0));
  CHECK(normalized.at("violence") == 0.0);

  auto at_threshold = normalize_scores(scored({{"harassment", 0.44}}), table);
  CHECK(at_threshold.at("harassment") == 1.0);

  CHECK_THROWS_WITH_AS(normalize_scores(scored({{"unknown", 0.2}}), table),
                       doctest::Contains("unknown"), Error);
}

TEST_CASE("worst_score takes the max category score") {
  CHECK(worst_score(scored({{"sexual", 0.1}, {"hate", 0.7}})) == 0.7);
  CHECK(worst_score(scored({{"toxicity", 0.3}})) == 0.3);

  // permutation invariance over categories
  Rng perm_rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<std::string, double>> entries;
    for (int c = 0; c < 6; ++c) {
      entries.emplace_back("cat" + std::to_string(c), perm_rng.next_unit());
    }
    ModerationResponse forward = scored({});
    for (const auto& [category, score] : entries) {
      (*forward.category_scores)[category] = score;
    }
    ModerationResponse reversed = scored({});
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
      (*reversed.category_scores)[it->first] = it->second;
    }
    CHECK(worst_score(forward) == worst_score(reversed));
  }

  ThresholdTable table;
  table.backend = "b";
  table.categories["harassment"] = {0.43, 0.45, 0.44};
  table.categories["violence"] = {0.5, 0.6, 0.55};
  ModerationResponse response = scored({{"harassment", 0.88}, {"violence", 0.275}});
  CHECK(worst_score(response, &table) == doctest::Approx(2.0));

  ModerationResponse empty;
  empty.category_scores = std::map<std::string, double>{};
  CHECK_THROWS_AS(worst_score(empty), Error);
}

TEST_CASE("normalized flags reproduce backend flags on consistent observations") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, double> hidden = {{"a", 0.2 + 0.6 * rng.next_unit()},
                                            {"b", 0.2 + 0.6 * rng.next_unit()}};
    std::vector<ModerationResponse> responses;
    std::vector<Observation> observations;
    for (int i = 0; i < 80; ++i) {
      std::map<std::string, double> scores;
      std::map<std::string, bool> flags;
      for (const auto& [category, threshold] : hidden) {
        double score = rng.next_unit();
        if (std::abs(score - threshold) < 1e-6) score = threshold + 0.01;
        scores[category] = score;
        flags[category] = score > threshold;
        observations.push_back({category, score, score > threshold});
      }
      ModerationResponse response = scored(scores);
      response.category_flags = flags;
      responses.push_back(std::move(response));
    }
    bool both_sides = true;
    for (const auto& [category, threshold] : hidden) {
      bool any_true = false, any_false = false;
      for (const Observation& observation : observations) {
        if (observation.category != category) continue;
        (observation.flag ? any_true : any_false) = true;
      }
      both_sides = both_sides && any_true && any_false;
    }
    if (!both_sides) continue;
    ThresholdTable table = estimate_thresholds(observations).table;
    for (const ModerationResponse& response : responses) {
      auto normalized = normalize_scores(response, table);
      for (const auto& [category, value] : normalized) {
        CHECK((value > 1.0) == response.category_flags->at(category));
      }
    }
  }
}

TEST_CASE("mock backend is deterministic") {
  BackendConfig config = load_backends_json(std::string(SUPAUDIT_DATA_DIR) +
                                            "/backends/mock.json")[0];
  auto backend = make_backend(config);
  ModerationResponse first = backend->moderate("id1", "a quiet sentence");
  ModerationResponse second = backend->moderate("id1", "a quiet sentence");
  CHECK(first == second);
  CHECK(first.raw == second.raw);
}

TEST_CASE("mock backend flags configured trigger words") {
  BackendConfig config = load_backends_json(std::string(SUPAUDIT_DATA_DIR) +
                                            "/backends/mock.json")[0];
  auto backend = make_backend(config);
  ModerationResponse flagged = backend->moderate("id", "the attack begins at dawn");
  CHECK(*flagged.overall_flag);
  CHECK(flagged.category_flags->at("violence"));
  CHECK(flagged.category_scores->at("violence") > 0.5);

  ModerationResponse empty = backend->moderate("id", "");
  CHECK_FALSE(*empty.overall_flag);
  for (const auto& [category, score] : *empty.category_scores) CHECK(score == 0.0);
}

TEST_CASE("responses round-trip through jsonl") {
  testutil::TempDir tmp("resp");
  std::vector<ModerationResponse> responses;
  ModerationResponse a = scored({{"hate", 0.25}});
  a.instance_id = "i1";
  a.backend = "mock";
  a.overall_flag = false;
  a.raw = "{\"x\":1}";
  a.received_at = "1970-01-01T00:00:00Z";
  responses.push_back(a);
  ModerationResponse b;
  b.instance_id = "i2";
  b.backend = "mock";
  b.error = "failed after 3 attempts: HTTP 500";
  b.attempts = 3;
  responses.push_back(b);

  write_responses_jsonl(tmp.path("r.jsonl"), responses);
  auto reread = read_responses_jsonl(tmp.path("r.jsonl"));
  CHECK(reread == responses);
}

TEST_CASE("scores outside [0,1] are rejected on read") {
  testutil::TempDir tmp("resp2");
  testutil::write_text(tmp.path("r.jsonl"),
                       R"({"instance_id":"i","backend":"b","category_scores":{"hate":1.5}})"
                       "\n");
  CHECK_THROWS_AS(read_responses_jsonl(tmp.path("r.jsonl")), Error);
}

TEST_CASE("threshold table json round-trip") {
  testutil::TempDir tmp("thr");
  ThresholdEstimate estimate;
  estimate.table.backend = "openai";
  estimate.table.categories["harassment"] = {0.439995, 0.44, 0.4399975};
  estimate.one_sided_categories.push_back("rare");
  write_threshold_json(tmp.path("t.json"), estimate);
  ThresholdTable reread = load_threshold_json(tmp.path("t.json"));
  CHECK(reread.backend == "openai");
  CHECK(reread.categories.at("harassment").lower == 0.439995);
  CHECK(reread.categories.at("harassment").upper == 0.44);
}

TEST_CASE("calibration fixture reproduces the published openai bounds") {
  auto responses =
      read_responses_jsonl(std::string(SUPAUDIT_DATA_DIR) + "/openai_calibration.jsonl");
  ThresholdEstimate estimate = estimate_thresholds(observations_from_responses(responses));
  const std::pair<std::string, std::pair<double, double>> expected[] = {
      {"harassment", {0.439995, 0.440000}},
      {"harassment/threatening", {0.309992, 0.310037}},
      {"hate", {0.399998, 0.400002}},
      {"hate/threatening", {0.109729, 0.110140}},
      {"self-harm", {0.398208, 0.400014}},
      {"self-harm/instructions", {0.119107, 0.120300}},
      {"self-harm/intent", {0.274655, 0.282941}},
      {"sexual", {0.529768, 0.530200}},
      {"sexual/minors", {0.319917, 0.320319}},
      {"violence", {0.580000, 0.580124}},
      {"violence/graphic", {0.708829, 0.711442}},
  };
  CHECK(estimate.table.categories.size() == 11);
  for (const auto& [category, bounds] : expected) {
    REQUIRE(estimate.table.categories.count(category) == 1);
    CHECK(estimate.table.categories.at(category).lower == bounds.first);
    CHECK(estimate.table.categories.at(category).upper == bounds.second);
  }
}

}  // TEST_SUITE
