#include <doctest.h>

#include <string>

#include "helpers.hpp"
#include "supaudit.h"

TEST_SUITE("capi") {

TEST_CASE("version string is exposed") {
  CHECK(std::string(supaudit_version()) == "0.1.0");
}

TEST_CASE("lexicon handle tags text through the C surface") {
  supaudit_lexicon* lexicon = nullptr;
  REQUIRE(supaudit_lexicon_open((std::string(SUPAUDIT_DATA_DIR) + "/lexicon.tsv").c_str(),
                                &lexicon) == SUPAUDIT_OK);
  CHECK(supaudit_lexicon_size(lexicon) > 800);

  char* identities = nullptr;
  int has_slur = -1;
  REQUIRE(supaudit_tag_text(lexicon, "I'm gay", &identities, &has_slur) == SUPAUDIT_OK);
  CHECK(std::string(identities) == "lgbt");
  CHECK(has_slur == 0);
  supaudit_string_free(identities);

  REQUIRE(supaudit_tag_text(lexicon, "bicycle race", &identities, &has_slur) == SUPAUDIT_OK);
  CHECK(std::string(identities).empty());
  supaudit_string_free(identities);

  supaudit_lexicon_free(lexicon);
}

TEST_CASE("corpus handle reads instances") {
  testutil::TempDir tmp("capi-corpus");
  testutil::write_text(tmp.path("c.jsonl"),
                       R"({"id":"a1","text":"one two","should_flag":false,"dataset":"d"})"
                       "\n"
                       R"({"id":"a2","text":"x","should_flag":true,"dataset":"d"})"
                       "\n");
  supaudit_corpus* corpus = nullptr;
  REQUIRE(supaudit_corpus_open(tmp.path("c.jsonl").c_str(), &corpus) == SUPAUDIT_OK);
  CHECK(supaudit_corpus_size(corpus) == 2);
  char* id = nullptr;
  REQUIRE(supaudit_corpus_id(corpus, 1, &id) == SUPAUDIT_OK);
  CHECK(std::string(id) == "a2");
  supaudit_string_free(id);
  CHECK(supaudit_corpus_id(corpus, 5, &id) == SUPAUDIT_ERR_INVALID_ARGUMENT);
  supaudit_corpus_free(corpus);
}

TEST_CASE("errors set a descriptive last_error") {
  supaudit_corpus* corpus = nullptr;
  supaudit_status status = supaudit_corpus_open("/nonexistent/file.jsonl", &corpus);
  CHECK(status == SUPAUDIT_ERR_IO);
  CHECK(std::string(supaudit_last_error()).find("nonexistent") != std::string::npos);
}

TEST_CASE("eval handle computes suppression over joined files") {
  testutil::TempDir tmp("capi-eval");
  std::string tagged;
  std::string responses;
  // 6 lgbt-tagged true negatives (3 flagged), 6 plain (1 flagged)
  for (int i = 0; i < 12; ++i) {
    bool lgbt = i < 6;
    bool flagged = lgbt ? i < 3 : i == 6;
    std::string id = "r" + std::to_string(i);
    tagged += "{\"id\":\"" + id + "\",\"text\":\"t" + std::to_string(i) +
              "\",\"should_flag\":false,\"dataset\":\"d\"" +
              (lgbt ? std::string(",\"identities\":[\"lgbt\"]") : std::string()) + "}\n";
    responses += "{\"instance_id\":\"" + id + "\",\"backend\":\"mock\",\"overall_flag\":" +
                 (flagged ? "true" : "false") + ",\"raw\":\"\",\"received_at\":\"\"}\n";
  }
  testutil::write_text(tmp.path("tagged.jsonl"), tagged);
  testutil::write_text(tmp.path("responses.jsonl"), responses);

  supaudit_eval* eval = nullptr;
  REQUIRE(supaudit_eval_open(tmp.path("tagged.jsonl").c_str(),
                             tmp.path("responses.jsonl").c_str(), nullptr,
                             &eval) == SUPAUDIT_OK);
  CHECK(supaudit_eval_size(eval) == 12);
  double value = 0;
  REQUIRE(supaudit_eval_suppression(eval, "lgbt", "flag_ratio", &value) == SUPAUDIT_OK);
  CHECK(value == (3.0 / 6.0) / (4.0 / 12.0));

  double ci_low = 0, ci_high = 0;
  REQUIRE(supaudit_eval_suppression_ci(eval, "lgbt", "flag_ratio", 200, 0.95, 7, 2, &value,
                                       &ci_low, &ci_high) == SUPAUDIT_OK);
  CHECK(ci_low <= value);
  CHECK(value <= ci_high);

  CHECK(supaudit_eval_suppression(eval, "martian", "flag_ratio", &value) ==
        SUPAUDIT_ERR_VALIDATION);
  supaudit_eval_free(eval);
}

TEST_CASE("validate reports problems through the C surface") {
  testutil::TempDir tmp("capi-validate");
  testutil::write_text(tmp.path("bad.json"), R"({
    "datasets": [], "lexicon": "", "backends": [],
    "bootstrap": {"n_samples": 100, "level": 0.95}, "out_dir": "out"
  })");
  char* problems = nullptr;
  size_t count = 0;
  REQUIRE(supaudit_validate(tmp.path("bad.json").c_str(), &problems, &count) == SUPAUDIT_OK);
  CHECK(count >= 4);
  REQUIRE(problems != nullptr);
  CHECK(std::string(problems).find("seed") != std::string::npos);
  supaudit_string_free(problems);
}

}  // TEST_SUITE
