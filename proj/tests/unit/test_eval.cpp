#include <doctest.h>

#include "core/eval.hpp"
#include "core/textutil.hpp"
#include "helpers.hpp"

using namespace supaudit;

namespace {

TextInstance instance(const std::string& id, const std::string& text, bool should_flag) {
  TextInstance out;
  out.id = id;
  out.text = text;
  out.dataset = "d";
  out.should_flag = should_flag;
  out.word_count = count_words(text);
  return out;
}

ModerationResponse response(const std::string& id, bool flag,
                            std::map<std::string, double> scores) {
  ModerationResponse out;
  out.instance_id = id;
  out.backend = "b";
  out.overall_flag = flag;
  out.category_scores = std::move(scores);
  return out;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("join carries labels, tags, and verdicts onto records") {
  std::vector<TextInstance> instances = {instance("a", "one two three", false),
                                         instance("b", "four", true)};
  instances[0].identities.insert(GeneralIdentity::lgbt);
  instances[0].tag_provenance[GeneralIdentity::lgbt] = TagProvenance::text_reference;
  instances[0].family = Family::genai;

  std::vector<ModerationResponse> responses = {
      response("a", true, {{"hate", 0.2}, {"violence", 0.6}}),
      response("b", false, {{"hate", 0.1}, {"violence", 0.0}}),
  };
  JoinStats stats;
  std::vector<EvalRecord> records = join_records(instances, responses, nullptr, &stats);
  REQUIRE(records.size() == 2);
  CHECK(stats.excluded_errors == 0);
  CHECK(stats.missing_responses == 0);
  CHECK(records[0].instance_id == "a");
  CHECK(records[0].identities.contains(GeneralIdentity::lgbt));
  CHECK(records[0].family == Family::genai);
  CHECK(records[0].word_count == 3);
  CHECK(*records[0].predicted_flag == true);
  CHECK(*records[0].worst_score == 0.6);  // max over category scores
  CHECK(records[1].should_flag == true);
}

TEST_CASE("join excludes error responses and counts the missing") {
  std::vector<TextInstance> instances = {instance("a", "x", false), instance("b", "y", false),
                                         instance("c", "z", false)};
  ModerationResponse failed;
  failed.instance_id = "b";
  failed.backend = "b";
  failed.error = "failed after 3 attempts: HTTP 500";
  std::vector<ModerationResponse> responses = {response("a", false, {{"hate", 0.1}}), failed};

  JoinStats stats;
  std::vector<EvalRecord> records = join_records(instances, responses, nullptr, &stats);
  REQUIRE(records.size() == 1);
  CHECK(records[0].instance_id == "a");
  CHECK(stats.excluded_errors == 1);   // the error entry
  CHECK(stats.missing_responses == 1); // "c" had no response at all
}

TEST_CASE("join normalizes scores when a threshold table applies") {
  std::vector<TextInstance> instances = {instance("a", "x", false)};
  std::vector<ModerationResponse> responses = {
      response("a", true, {{"hate", 0.2}, {"violence", 0.33}})};
  ThresholdTable thresholds;
  thresholds.backend = "b";
  thresholds.categories["hate"] = {0.35, 0.45, 0.4};
  thresholds.categories["violence"] = {0.25, 0.41, 0.33};

  std::vector<EvalRecord> records = join_records(instances, responses, &thresholds);
  REQUIRE(records.size() == 1);
  CHECK(records[0].category_scores->at("hate") == 0.2 / 0.4);
  CHECK(records[0].category_scores->at("violence") == 1.0);
  CHECK(*records[0].worst_score == 1.0);  // normalized scale
}

}  // TEST_SUITE
