#include <doctest.h>

#include <algorithm>
#include <set>

#include "core/error.hpp"
#include "core/report.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace supaudit;
using testutil::flag_record;
using testutil::score_record;

namespace {

SuppressionResult result_for(GeneralIdentity identity, double value) {
  SuppressionResult result;
  result.identity = identity;
  result.statistic = SuppressionStatistic::flag_ratio;
  result.value = value;
  result.ci_low = value - 0.1;
  result.ci_high = value + 0.1;
  result.n_true_negatives = 100;
  result.n_false_positives = 10;
  return result;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("summarize marks the worst identity") {
  std::vector<SuppressionResult> results = {
      result_for(GeneralIdentity::men, 1.2),
      result_for(GeneralIdentity::lgbt, 1.58),
      result_for(GeneralIdentity::women, 0.9),
  };
  std::vector<SummaryRow> rows = summarize("jigsaw", "traditional", results);
  REQUIRE(rows.size() == 3);
  int max_count = 0;
  for (const SummaryRow& row : rows) {
    if (row.is_max) {
      ++max_count;
      CHECK(row.identity == "lgbt");
      CHECK(row.value == 1.58);
    }
  }
  CHECK(max_count == 1);

  CHECK(summarize("b", "all", {}).empty());
}

TEST_CASE("flag-backend review sampling clamps to the available false positives") {
  std::vector<EvalRecord> records;
  for (int i = 0; i < 40; ++i) {
    records.push_back(flag_record("fp" + std::to_string(i), false, true));
  }
  for (int i = 0; i < 30; ++i) {
    records.push_back(flag_record("tn" + std::to_string(i), false, false));
  }
  for (int i = 0; i < 10; ++i) {
    records.push_back(flag_record("tp" + std::to_string(i), true, true));
  }
  auto samples = sample_for_review(records, true, 50, 1500, 7);
  CHECK(samples.size() == 40);
  std::set<std::string> ids;
  for (const ReviewSample& sample : samples) {
    CHECK(sample.instance_id.rfind("fp", 0) == 0);  // only false positives
    ids.insert(sample.instance_id);
  }
  CHECK(ids.size() == samples.size());  // no duplicates
}

TEST_CASE("review sampling is deterministic given the seed") {
  std::vector<EvalRecord> records;
  for (int i = 0; i < 300; ++i) {
    records.push_back(flag_record("fp" + std::to_string(i), false, true));
  }
  auto a = sample_for_review(records, true, 50, 1500, 7);
  auto b = sample_for_review(records, true, 50, 1500, 7);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].instance_id == b[i].instance_id);
  auto c = sample_for_review(records, true, 50, 1500, 8);
  bool all_equal = a.size() == c.size();
  for (std::size_t i = 0; all_equal && i < a.size(); ++i) {
    all_equal = a[i].instance_id == c[i].instance_id;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("score-backend review sampling draws from the top pool only") {
  std::vector<EvalRecord> records;
  for (int i = 0; i < 2000; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "tn%04d", i);
    records.push_back(score_record(id, false, i / 2000.0));
  }
  auto samples = sample_for_review(records, false, 50, 1500, 11);
  CHECK(samples.size() == 50);
  // top 1500 by score = scores >= 500/2000
  for (const ReviewSample& sample : samples) {
    REQUIRE(sample.worst_score.has_value());
    CHECK(*sample.worst_score >= 500 / 2000.0);
  }
}

TEST_CASE("review sampling errors when nothing is eligible") {
  std::vector<EvalRecord> records = {flag_record("a", false, false),
                                     flag_record("b", true, true)};
  CHECK_THROWS_AS(sample_for_review(records, true, 50, 1500, 1), Error);
  CHECK_THROWS_AS(sample_for_review(records, false, 50, 1500, 1), Error);
}

TEST_CASE("markdown rendering is deterministic and rounds to two decimals") {
  ReportBundle bundle;
  bundle.meta.seed = 7;
  bundle.meta.version = "0.1.0";
  bundle.meta.counters.emplace_back("excluded_error_responses-mock", 2);
  bundle.summary = summarize("mock", "traditional",
                             std::vector<SuppressionResult>{
                                 result_for(GeneralIdentity::lgbt, 1.57777),
                                 result_for(GeneralIdentity::men, 1.2),
                             });
  std::string once = render_markdown(bundle);
  std::string twice = render_markdown(bundle);
  CHECK(once == twice);
  CHECK(once.find("1.58") != std::string::npos);
  CHECK(once.find("1.57777") == std::string::npos);
  CHECK(once.find("**lgbt**") != std::string::npos);
  CHECK(once.find("excluded_error_responses-mock: 2") != std::string::npos);
}

TEST_CASE("emitted files are byte-identical across calls") {
  testutil::TempDir tmp_a("emit-a");
  testutil::TempDir tmp_b("emit-b");
  ReportBundle bundle;
  bundle.meta.seed = 3;
  bundle.meta.version = "0.1.0";
  bundle.summary = summarize("mock", "all",
                             std::vector<SuppressionResult>{result_for(GeneralIdentity::women, 1.3)});
  QualitativeSample sample;
  sample.backend = "mock";
  sample.universe = "traditional";
  sample.instance_id = "id-1";
  sample.text = "text with, comma and \"quotes\"";
  sample.worst_score = 0.75;
  bundle.samples.push_back(sample);

  emit(bundle, "markdown", (tmp_a.dir() / "report.md").string());
  emit(bundle, "markdown", (tmp_b.dir() / "report.md").string());
  for (const char* name : {"report.md", "summary.csv", "samples.csv", "coding_sheet.csv"}) {
    CHECK(testutil::slurp((tmp_a.dir() / name).string()) ==
          testutil::slurp((tmp_b.dir() / name).string()));
  }
  // coding sheet keeps the category columns empty for hand-coding
  std::string coding = testutil::slurp((tmp_a.dir() / "coding_sheet.csv").string());
  CHECK(coding.find("politics,religion,identity_bias,sexual,hate,violence,none") !=
        std::string::npos);
  CHECK(coding.find("id-1") != std::string::npos);
}

TEST_CASE("empty bundle emits header-only files") {
  testutil::TempDir tmp("emit-empty");
  ReportBundle bundle;
  bundle.meta.version = "0.1.0";
  emit(bundle, "csv", tmp.dir().string());
  std::string summary = testutil::slurp((tmp.dir() / "summary.csv").string());
  CHECK(summary == "identity,statistic,value,ci_low,ci_high,n_tn,n_fp,dataset,backend\n");
}

TEST_CASE("summary csv round-trips values exactly and recomputes the max marker") {
  testutil::TempDir tmp("sumcsv");
  std::vector<SummaryRow> rows = summarize(
      "mock", "genai",
      std::vector<SuppressionResult>{result_for(GeneralIdentity::men, 1.0 / 3.0),
                                     result_for(GeneralIdentity::lgbt, 2.0 / 3.0)});
  write_summary_csv(tmp.path("s.csv"), rows);
  std::vector<SummaryRow> reread = read_summary_csv(tmp.path("s.csv"));
  REQUIRE(reread.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(reread[i].value == rows[i].value);
    CHECK(reread[i].ci_low == rows[i].ci_low);
    CHECK(reread[i].identity == rows[i].identity);
    CHECK(reread[i].is_max == rows[i].is_max);
  }
}

}  // TEST_SUITE
