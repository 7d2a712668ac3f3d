#include <doctest.h>

#include <algorithm>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/tagging.hpp"
#include "core/textutil.hpp"
#include "helpers.hpp"

using namespace supaudit;

#ifndef SUPAUDIT_DATA_DIR
#error "SUPAUDIT_DATA_DIR must be defined"
#endif

namespace {

const LexiconMatcher& shipped_lexicon() {
  static LexiconMatcher matcher(load_lexicon_tsv(std::string(SUPAUDIT_DATA_DIR) + "/lexicon.tsv"));
  return matcher;
}

IdentitySet tags_of(const std::string& text) {
  return shipped_lexicon().tag_text(text).identities;
}

}  // namespace

TEST_SUITE("tagging") {

TEST_CASE("shipped lexicon loads with a consistent taxonomy") {
  const auto& entries = shipped_lexicon().entries();
  CHECK(entries.size() > 800);
  std::map<std::string, GeneralIdentity> taxonomy;
  for (const LexiconEntry& entry : entries) {
    auto [it, inserted] = taxonomy.emplace(entry.specific_identity, entry.general_identity);
    CHECK(it->second == entry.general_identity);
    CHECK(entry.term == ascii_lower_copy(entry.term));
    CHECK_FALSE(entry.term.empty());
  }
}

TEST_CASE("explicit identity references are tagged") {
  auto result = shipped_lexicon().tag_text("I'm gay");
  CHECK(result.identities.contains(GeneralIdentity::lgbt));
  CHECK(result.identities.size() == 1);
  CHECK_FALSE(result.has_slur);
}

TEST_CASE("common words excluded from the lexicon do not tag") {
  CHECK(tags_of("the black car drove by").empty());
  CHECK(tags_of("blackboard and chalk").empty());
}

TEST_CASE("neutral terms match case-insensitively") {
  auto tags = tags_of("She visited her Grandmother.");
  CHECK(tags.contains(GeneralIdentity::women));
  CHECK(tags.size() == 1);
}

TEST_CASE("word boundaries stop partial matches") {
  CHECK(tags_of("bicycle race").empty());       // "bi" must not match inside "bicycle"
  CHECK(tags_of("combination lock").empty());   // nor "bi" inside "combination"
  CHECK(tags_of("a bi flag").contains(GeneralIdentity::lgbt));
  CHECK(tags_of("transit authority").empty());  // "trans" inside "transit"
  CHECK(tags_of("gays").empty());               // no suffix matching
}

TEST_CASE("apostrophes act as word boundaries") {
  CHECK(tags_of("my son's bicycle").contains(GeneralIdentity::men));
  CHECK(tags_of("it's fine").empty());
}

TEST_CASE("multiword terms match across whitespace runs") {
  CHECK(tags_of("black lives matter march").contains(GeneralIdentity::non_white));
  CHECK(tags_of("black  lives\tmatter").contains(GeneralIdentity::non_white));
  CHECK(tags_of("blacklives matter").empty());
  CHECK(tags_of("black livesmatter").empty());
}

TEST_CASE("terms with internal punctuation match literally") {
  CHECK(tags_of("she is a t-girl!").contains(GeneralIdentity::lgbt));
  CHECK(tags_of("tgirl").empty());
  // "t girl" has a space where the term has a hyphen; only "girl" matches.
  CHECK_FALSE(tags_of("t girl").contains(GeneralIdentity::lgbt));
  CHECK(tags_of("t girl").contains(GeneralIdentity::women));
}

TEST_CASE("slur matches set has_slur") {
  auto result = shipped_lexicon().tag_text("some dyke remark");
  CHECK(result.has_slur);
  CHECK(result.identities.contains(GeneralIdentity::lgbt));
  CHECK_FALSE(shipped_lexicon().tag_text("my grandmother waved").has_slur);
}

TEST_CASE("tagging is deterministic and invariant to case and padding") {
  const std::string texts[] = {
      "I'm gay", "My GRANDMOTHER visited the Mosque", "bicycle race",
      "  padded muslim text  ", "black lives matter",
  };
  for (const std::string& text : texts) {
    auto base = shipped_lexicon().tag_text(text);
    CHECK(base.identities == shipped_lexicon().tag_text(text).identities);
    CHECK(base.identities == shipped_lexicon().tag_text(ascii_lower_copy(text)).identities);
    std::string upper = text;
    for (char& c : upper) c = (c >= 'a' && c <= 'z') ? char(c - 'a' + 'A') : c;
    CHECK(base.identities == shipped_lexicon().tag_text(upper).identities);
    CHECK(base.identities == shipped_lexicon().tag_text("  " + text + "\t").identities);
  }
}

TEST_CASE("adding lexicon entries never removes identities") {
  std::vector<LexiconEntry> base = {
      {"gay", "gay", GeneralIdentity::lgbt, TermClass::neutral},
      {"mosque", "muslim", GeneralIdentity::non_christian, TermClass::neutral},
  };
  std::vector<LexiconEntry> extended = base;
  extended.push_back({"church", "christian", GeneralIdentity::christian, TermClass::neutral});
  extended.push_back({"grandmother", "women", GeneralIdentity::women, TermClass::neutral});
  LexiconMatcher small(base), big(extended);
  const std::string texts[] = {"the gay couple", "near the mosque", "church and mosque",
                               "my grandmother is gay", "nothing here"};
  for (const std::string& text : texts) {
    IdentitySet before = small.tag_text(text).identities;
    IdentitySet after = big.tag_text(text).identities;
    before.for_each([&](GeneralIdentity identity) { CHECK(after.contains(identity)); });
  }
}

TEST_CASE("lexicon with conflicting taxonomy is rejected") {
  testutil::TempDir tmp("lex");
  testutil::write_text(tmp.path("bad.tsv"),
                       "gay\tgay\tlgbt\tneutral\n"
                       "homosexual\tgay\tmen\tneutral\n");
  CHECK_THROWS_WITH_AS(load_lexicon_tsv(tmp.path("bad.tsv")), doctest::Contains("maps to both"),
                       Error);
}

TEST_CASE("lexicon requires lowercase trimmed terms") {
  testutil::TempDir tmp("lex2");
  testutil::write_text(tmp.path("bad.tsv"), "Gay\tgay\tlgbt\tneutral\n");
  CHECK_THROWS_AS(load_lexicon_tsv(tmp.path("bad.tsv")), Error);
  testutil::write_text(tmp.path("bad2.tsv"), " gay\tgay\tlgbt\tneutral\n");
  CHECK_THROWS_AS(load_lexicon_tsv(tmp.path("bad2.tsv")), Error);
}

TEST_CASE("title normalization is idempotent") {
  Rng rng(21);
  auto random_title = [&] {
    std::string title;
    const char alphabet[] = "AbC xyz,.!-'09  ";
    int length = static_cast<int>(rng.next_below(24));
    for (int i = 0; i < length; ++i) title.push_back(alphabet[rng.next_below(sizeof(alphabet) - 1)]);
    return title;
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::string title = random_title();
    std::string once = normalize_title(title);
    CHECK(normalize_title(once) == once);
  }
  CHECK(normalize_title("The Matrix (1999)") == "the matrix 1999");
  CHECK(normalize_title("  But   I'm a CHEERLEADER!! ") == "but i m a cheerleader");
}

TEST_CASE("tag_media unions identities across lists") {
  std::vector<AssociationEntry> associations;
  {
    AssociationEntry entry;
    entry.title_key = normalize_title("But I'm a Cheerleader");
    entry.identities.insert(GeneralIdentity::lgbt);
    associations.push_back(entry);
  }
  {
    AssociationEntry entry;
    entry.title_key = normalize_title("Orbit City");
    entry.identities.insert(GeneralIdentity::women);
    associations.push_back(entry);
  }
  {
    AssociationEntry entry;
    entry.title_key = normalize_title("Orbit City");
    entry.identities.insert(GeneralIdentity::disability);
    associations.push_back(entry);
  }

  CHECK(tag_media("But I'm a Cheerleader", associations).contains(GeneralIdentity::lgbt));
  CHECK(tag_media("BUT I'M A CHEERLEADER", associations).contains(GeneralIdentity::lgbt));
  CHECK(tag_media("unknown title", associations).empty());
  IdentitySet both = tag_media("Orbit City", associations);
  CHECK(both.contains(GeneralIdentity::women));
  CHECK(both.contains(GeneralIdentity::disability));
  CHECK(both.size() == 2);
  // normalization idempotence on lookups
  CHECK(tag_media(normalize_title("Orbit City"), associations) == both);
}

TEST_CASE("validate_tags counts membership agreement") {
  std::map<std::string, IdentitySet> predicted, manual;
  for (int i = 0; i < 10; ++i) {
    std::string id = "r" + std::to_string(i);
    IdentitySet tags;
    if (i % 2 == 0) tags.insert(GeneralIdentity::christian);
    predicted[id] = tags;
    manual[id] = tags;
  }
  CHECK(validate_tags(predicted, manual, GeneralIdentity::christian) == 1.0);

  // flip one membership
  IdentitySet flipped;
  flipped.insert(GeneralIdentity::christian);
  manual["r1"] = flipped;
  CHECK(validate_tags(predicted, manual, GeneralIdentity::christian) == doctest::Approx(0.9));

  CHECK_THROWS_AS(validate_tags({}, {}, GeneralIdentity::men), Error);
}

TEST_CASE("tag_corpus applies text references and associations") {
  std::vector<TextInstance> instances(3);
  instances[0].id = "i0";
  instances[0].text = "my grandmother visited the mosque";
  instances[0].dataset = "toy";
  instances[1].id = "i1";
  instances[1].text = "a quiet afternoon";
  instances[1].dataset = "toy";
  instances[1].title = "Orbit City";
  instances[2].id = "i2";
  instances[2].text = "some dyke remark";
  instances[2].dataset = "toy";
  instances[2].identities.insert(GeneralIdentity::lgbt);
  instances[2].tag_provenance[GeneralIdentity::lgbt] = TagProvenance::individually_coded;

  std::vector<AssociationEntry> associations;
  AssociationEntry entry;
  entry.title_key = normalize_title("Orbit City");
  entry.identities.insert(GeneralIdentity::women);
  associations.push_back(entry);

  tag_corpus(instances, shipped_lexicon(), &associations);

  CHECK(instances[0].identities.contains(GeneralIdentity::women));
  CHECK(instances[0].identities.contains(GeneralIdentity::non_christian));
  CHECK(instances[0].tag_provenance.at(GeneralIdentity::women) == TagProvenance::text_reference);
  CHECK(instances[1].identities.contains(GeneralIdentity::women));
  CHECK(instances[1].tag_provenance.at(GeneralIdentity::women) ==
        TagProvenance::external_association);
  // the slur match owns the provenance so has_slur stays consistent
  CHECK(instances[2].has_slur);
  CHECK(instances[2].tag_provenance.at(GeneralIdentity::lgbt) == TagProvenance::text_reference);
}

}  // TEST_SUITE
