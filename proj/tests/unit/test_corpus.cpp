#include <doctest.h>

#include "core/corpus.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/textutil.hpp"
#include "helpers.hpp"

using namespace supaudit;

TEST_SUITE("corpus") {

TEST_CASE("word count equals whitespace-delimited token runs") {
  CHECK(count_words("hug gay") == 2);
  CHECK(count_words("") == 0);
  CHECK(count_words("   ") == 0);
  CHECK(count_words(" a\tb\nc  d ") == 4);
  CHECK(count_words("one") == 1);

  // Cross-check against an independent tokenizer over random strings.
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    int length = static_cast<int>(rng.next_below(40));
    for (int i = 0; i < length; ++i) {
      const char alphabet[] = {' ', ' ', '\t', '\n', 'a', 'b', 'x', '.', '7'};
      text.push_back(alphabet[rng.next_below(sizeof(alphabet))]);
    }
    int expected = 0;
    bool previous_space = true;
    for (char c : text) {
      bool space = c == ' ' || c == '\t' || c == '\n';
      if (!space && previous_space) ++expected;
      previous_space = space;
    }
    CHECK(count_words(text) == expected);
  }
}

TEST_CASE("ingest_jsonl parses instances with provenance") {
  testutil::TempDir tmp("ingest");
  testutil::write_text(
      tmp.path("in.jsonl"),
      R"({"id":"a1","text":"hug gay","should_flag":false,"identities":["lgbt"],"provenance":"template"})"
      "\n"
      R"({"id":"a2","text":"","should_flag":false})"
      "\n");
  auto instances = ingest_jsonl(tmp.path("in.jsonl"), "toy", Family::traditional);
  REQUIRE(instances.size() == 2);
  CHECK(instances[0].id == "a1");
  CHECK(instances[0].word_count == 2);
  CHECK(instances[0].identities.contains(GeneralIdentity::lgbt));
  CHECK(instances[0].identities.size() == 1);
  CHECK(instances[0].tag_provenance.at(GeneralIdentity::lgbt) == TagProvenance::template_based);
  CHECK(instances[1].word_count == 0);
  CHECK(instances[1].identities.empty());
}

TEST_CASE("ingest_jsonl default provenance is individually_coded") {
  testutil::TempDir tmp("ingest2");
  testutil::write_text(tmp.path("in.jsonl"),
                       R"({"id":"x","text":"t","should_flag":true,"identities":["women"]})"
                       "\n");
  auto instances = ingest_jsonl(tmp.path("in.jsonl"), "toy", Family::genai);
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].tag_provenance.at(GeneralIdentity::women) ==
        TagProvenance::individually_coded);
  CHECK(instances[0].family == Family::genai);
}

TEST_CASE("ingest_jsonl duplicate id errors at the offending line") {
  testutil::TempDir tmp("dup");
  testutil::write_text(tmp.path("in.jsonl"),
                       R"({"id":"a","text":"1","should_flag":false})"
                       "\n"
                       R"({"id":"b","text":"2","should_flag":false})"
                       "\n"
                       R"({"id":"a","text":"3","should_flag":false})"
                       "\n");
  try {
    ingest_jsonl(tmp.path("in.jsonl"), "toy", Family::traditional);
    FAIL("expected duplicate-id error");
  } catch (const Error& e) {
    std::string message = e.what();
    CHECK(message.find(":3") != std::string::npos);
    CHECK(message.find("duplicate id") != std::string::npos);
  }
}

TEST_CASE("ingest_jsonl malformed line errors with its line number") {
  testutil::TempDir tmp("bad");
  testutil::write_text(tmp.path("in.jsonl"),
                       R"({"id":"a","text":"1","should_flag":false})"
                       "\n"
                       "{not json\n");
  CHECK_THROWS_WITH_AS(ingest_jsonl(tmp.path("in.jsonl"), "toy", Family::traditional),
                       doctest::Contains(":2"), Error);
}

TEST_CASE("label_media follows the age-rating rules") {
  auto movie = [](Rating rating) {
    return MediaItem{"t", MediaKind::movie, 2000, rating, "s", MediaSource::tmdb};
  };
  auto episode = [](Rating rating) {
    return MediaItem{"t", MediaKind::tv_episode, 2000, rating, "s", MediaSource::imdb};
  };
  LabelScheme pg = LabelScheme::pg_ok();
  LabelScheme pg13 = LabelScheme::pg13_ok();

  CHECK(label_media(movie(Rating::PG13), pg) == true);
  CHECK(label_media(movie(Rating::PG13), pg13) == false);
  CHECK(label_media(movie(Rating::G), pg) == false);
  CHECK(label_media(movie(Rating::R), pg13) == true);
  CHECK(label_media(movie(Rating::UNRATED), pg) == std::nullopt);
  CHECK(label_media(episode(Rating::UNRATED), pg13) == std::nullopt);
  CHECK(label_media(episode(Rating::TV_14), pg) == true);
  CHECK(label_media(episode(Rating::TV_14), pg13) == false);
  CHECK(label_media(episode(Rating::TV_MA), pg13) == true);
  CHECK(label_media(episode(Rating::TV_PG), pg) == false);
}

TEST_CASE("label_media is monotone from pg_ok to pg13_ok") {
  LabelScheme pg = LabelScheme::pg_ok();
  LabelScheme pg13 = LabelScheme::pg13_ok();
  for (Rating rating : {Rating::G, Rating::PG, Rating::PG13, Rating::R, Rating::NC17}) {
    MediaItem item{"t", MediaKind::movie, 2000, rating, "s", MediaSource::tmdb};
    if (label_media(item, pg) == false) CHECK(label_media(item, pg13) == false);
  }
  for (Rating rating : {Rating::TV_Y, Rating::TV_Y7, Rating::TV_G, Rating::TV_PG,
                        Rating::TV_14, Rating::TV_MA}) {
    MediaItem item{"t", MediaKind::tv_episode, 2000, rating, "s", MediaSource::imdb};
    if (label_media(item, pg) == false) CHECK(label_media(item, pg13) == false);
  }
}

TEST_CASE("release filter uses the 1986/1998 cutoffs") {
  MediaItem movie{"t", MediaKind::movie, 1985, Rating::PG, "s", MediaSource::tmdb};
  CHECK_FALSE(passes_release_filter(movie));
  movie.release_year = 1986;
  CHECK(passes_release_filter(movie));
  movie.release_year = 2024;
  CHECK(passes_release_filter(movie));

  MediaItem episode{"t", MediaKind::tv_episode, 1997, Rating::TV_PG, "s", MediaSource::imdb};
  CHECK_FALSE(passes_release_filter(episode));
  episode.release_year = 1998;
  CHECK(passes_release_filter(episode));
}

TEST_CASE("media_to_instances drops unrated and filtered items") {
  std::vector<MediaItem> items = {
      {"Mystery", MediaKind::movie, 1995, Rating::UNRATED, "synopsis one", MediaSource::tmdb},
      {"Thriller", MediaKind::movie, 1990, Rating::R, "synopsis two", MediaSource::tmdb},
  };
  auto instances = media_to_instances(items, LabelScheme::pg13_ok(), "movies");
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].should_flag == true);
  CHECK(instances[0].text == "synopsis two");
  CHECK(instances[0].family == Family::genai);
  CHECK(instances[0].title == "Thriller");

  CHECK(media_to_instances({}, LabelScheme::pg13_ok(), "movies").empty());
}

TEST_CASE("media_to_instances emits at most one instance per input") {
  Rng rng(5);
  const Rating movie_ratings[] = {Rating::G, Rating::PG, Rating::PG13, Rating::R,
                                  Rating::NC17, Rating::UNRATED};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MediaItem> items;
    int n = static_cast<int>(rng.next_below(20));
    for (int i = 0; i < n; ++i) {
      items.push_back(MediaItem{"title " + std::to_string(i), MediaKind::movie,
                                1980 + static_cast<int>(rng.next_below(40)),
                                movie_ratings[rng.next_below(6)], "text", MediaSource::tmdb});
    }
    auto instances = media_to_instances(items, LabelScheme::pg_ok(), "d");
    CHECK(instances.size() <= items.size());
    for (const TextInstance& instance : instances) CHECK(instance.family == Family::genai);
  }
}

TEST_CASE("jsonl round-trip preserves the corpus") {
  testutil::TempDir tmp("roundtrip");
  std::vector<TextInstance> corpus;
  TextInstance a;
  a.id = "id-1";
  a.text = "my brother visited the mosque";
  a.dataset = "toy";
  a.family = Family::traditional;
  a.should_flag = false;
  a.identities.insert(GeneralIdentity::men);
  a.identities.insert(GeneralIdentity::non_christian);
  a.tag_provenance[GeneralIdentity::men] = TagProvenance::text_reference;
  a.tag_provenance[GeneralIdentity::non_christian] = TagProvenance::individually_coded;
  a.has_slur = false;
  a.word_count = count_words(a.text);
  corpus.push_back(a);

  TextInstance b;
  b.id = "id-2";
  b.text = "quiet, unrelated text";
  b.dataset = "toy";
  b.subset = "hate";
  b.family = Family::genai;
  b.should_flag = true;
  b.word_count = count_words(b.text);
  b.title = "Some Show";
  corpus.push_back(b);

  write_instances_jsonl(tmp.path("c.jsonl"), corpus);
  auto reread = ingest_jsonl(tmp.path("c.jsonl"), "", Family::traditional);
  CHECK(reread == corpus);

  // A second round trip is byte-stable.
  write_instances_jsonl(tmp.path("c2.jsonl"), reread);
  CHECK(testutil::slurp(tmp.path("c.jsonl")) == testutil::slurp(tmp.path("c2.jsonl")));
}

TEST_CASE("media csv parses quoted synopses") {
  testutil::TempDir tmp("csv");
  testutil::write_text(tmp.path("m.csv"),
                       "title,kind,release_year,rating,synopsis,source\n"
                       "\"A, Movie\",movie,2001,PG-13,\"Plot with, commas and \"\"quotes\"\"\",tmdb\n"
                       "Show,tv_episode,2005,TV-14,An episode synopsis,imdb\n");
  auto items = read_media_csv(tmp.path("m.csv"));
  REQUIRE(items.size() == 2);
  CHECK(items[0].title == "A, Movie");
  CHECK(items[0].rating == Rating::PG13);
  CHECK(items[0].synopsis == "Plot with, commas and \"quotes\"");
  CHECK(items[1].kind == MediaKind::tv_episode);
  CHECK(items[1].rating == Rating::TV_14);
}

TEST_CASE("media csv rejects tv ratings on movies") {
  testutil::TempDir tmp("csvbad");
  testutil::write_text(tmp.path("m.csv"),
                       "title,kind,release_year,rating,synopsis,source\n"
                       "Oops,movie,2001,TV-14,text,tmdb\n");
  CHECK_THROWS_AS(read_media_csv(tmp.path("m.csv")), Error);
}

TEST_CASE("column-mapped csv ingestion") {
  testutil::TempDir tmp("colmap");
  testutil::write_text(tmp.path("native.csv"),
                       "tweet_id,content,is_hate,bucket,groups\n"
                       "t1,some text here,1,hate,women|lgbt\n"
                       "t2,other text,0,offensive,\n");
  CsvColumnMap columns;
  columns.id = "tweet_id";
  columns.text = "content";
  columns.should_flag = "is_hate";
  columns.subset = "bucket";
  columns.identities = "groups";
  auto instances = ingest_csv(tmp.path("native.csv"), "tweeteval", Family::traditional, columns);
  REQUIRE(instances.size() == 2);
  CHECK(instances[0].should_flag);
  CHECK(instances[0].subset == "hate");
  CHECK(instances[0].identities.contains(GeneralIdentity::women));
  CHECK(instances[0].identities.contains(GeneralIdentity::lgbt));
  CHECK_FALSE(instances[1].should_flag);
  CHECK(instances[1].identities.empty());
}

}  // TEST_SUITE
