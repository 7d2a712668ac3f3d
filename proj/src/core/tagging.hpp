#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/corpus.hpp"
#include "core/identity.hpp"

namespace supaudit {

enum class TermClass : uint8_t { slur_or_slang, neutral };

const char* to_string(TermClass term_class);
std::optional<TermClass> term_class_from_string(std::string_view name);

struct LexiconEntry {
  std::string term;               // lowercase; may contain spaces
  std::string specific_identity;  // e.g. "muslim", "lesbian"
  GeneralIdentity general_identity = GeneralIdentity::men;
  TermClass term_class = TermClass::neutral;

  bool operator==(const LexiconEntry&) const = default;
};

// TSV columns: term, specific_identity, general_identity, term_class.
// Validates terms (non-empty, lowercase, trimmed), checks that every specific
// identity maps to exactly one general identity, and drops duplicate rows.
std::vector<LexiconEntry> load_lexicon_tsv(const std::string& path);
std::vector<LexiconEntry> parse_lexicon_tsv(const std::string& contents,
                                            const std::string& origin);

// Immutable compiled matcher; safe to share across threads.
//
// A term matches where it appears case-insensitively delimited by word
// boundaries (start/end of text or a non-word character). Single spaces in
// multiword terms match any whitespace run.
class LexiconMatcher {
 public:
  explicit LexiconMatcher(std::vector<LexiconEntry> entries);

  struct Match {
    std::size_t entry_index;
    std::size_t position;  // byte offset into the text
  };

  struct TagResult {
    IdentitySet identities;
    std::vector<Match> matches;
    bool has_slur = false;
  };

  TagResult tag_text(std::string_view text) const;

  const std::vector<LexiconEntry>& entries() const { return entries_; }

 private:
  std::vector<LexiconEntry> entries_;
  // first alphanumeric run of the term -> entry indices
  std::unordered_map<std::string, std::vector<uint32_t>> by_first_word_;
};

struct AssociationEntry {
  std::string title_key;  // normalized title
  IdentitySet identities;
};

// JSON: [{"title": "...", "identities": ["lgbt", ...]}, ...]
std::vector<AssociationEntry> load_associations_json(const std::string& path);

// Union of identities over entries whose title_key equals the normalized title.
IdentitySet tag_media(std::string_view title,
                      const std::vector<AssociationEntry>& associations);

// Fraction of ids where predicted and manual agree on membership of
// `identity`. Both maps must cover the same non-empty id set.
double validate_tags(const std::map<std::string, IdentitySet>& predicted,
                     const std::map<std::string, IdentitySet>& manual,
                     GeneralIdentity identity);

// Applies text-reference tagging (and association tagging for instances that
// carry a title) in place. Existing tags keep their provenance.
void tag_corpus(std::vector<TextInstance>& instances,
                const LexiconMatcher& matcher,
                const std::vector<AssociationEntry>* associations);

}  // namespace supaudit
