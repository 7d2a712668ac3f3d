#include "core/tagging.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

const char* to_string(TermClass term_class) {
  return term_class == TermClass::slur_or_slang ? "slur_or_slang" : "neutral";
}

std::optional<TermClass> term_class_from_string(std::string_view name) {
  if (name == "slur_or_slang") return TermClass::slur_or_slang;
  if (name == "neutral") return TermClass::neutral;
  return std::nullopt;
}

std::vector<LexiconEntry> parse_lexicon_tsv(const std::string& contents,
                                            const std::string& origin) {
  std::vector<LexiconEntry> entries;
  std::unordered_map<std::string, GeneralIdentity> taxonomy;
  std::set<std::pair<std::string, std::string>> seen;  // (term, specific)
  long line_number = 0;
  std::size_t start = 0;
  while (start <= contents.size()) {
    std::size_t end = contents.find('\n', start);
    std::string line = contents.substr(
        start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? contents.size() + 1 : end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::string where = origin + ":" + std::to_string(line_number);
    std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 4) {
      throw Error(ErrorKind::parse, where + ": expected 4 tab-separated fields");
    }
    LexiconEntry entry;
    entry.term = fields[0];
    entry.specific_identity = fields[1];
    if (entry.term.empty() || entry.term != trim_copy(entry.term)) {
      throw Error(ErrorKind::parse, where + ": term must be non-empty and trimmed");
    }
    if (entry.term != ascii_lower_copy(entry.term)) {
      throw Error(ErrorKind::parse, where + ": term must be lowercase: '" + entry.term + "'");
    }
    auto general = identity_from_string(fields[2]);
    if (!general) throw Error(ErrorKind::parse, where + ": unknown general identity '" + fields[2] + "'");
    entry.general_identity = *general;
    auto term_class = term_class_from_string(fields[3]);
    if (!term_class) throw Error(ErrorKind::parse, where + ": unknown term class '" + fields[3] + "'");
    entry.term_class = *term_class;

    auto [it, inserted] = taxonomy.try_emplace(entry.specific_identity, entry.general_identity);
    if (!inserted && it->second != entry.general_identity) {
      throw Error(ErrorKind::validation,
                  where + ": specific identity '" + entry.specific_identity +
                      "' maps to both '" + to_string(it->second) + "' and '" +
                      to_string(entry.general_identity) + "'");
    }
    if (seen.emplace(entry.term, entry.specific_identity).second) {
      entries.push_back(std::move(entry));
    }
  }
  return entries;
}

std::vector<LexiconEntry> load_lexicon_tsv(const std::string& path) {
  return parse_lexicon_tsv(read_file(path), path);
}

namespace {

std::string first_word(std::string_view term) {
  std::size_t i = 0;
  while (i < term.size() && is_word_byte(term[i])) ++i;
  return std::string(term.substr(0, i));
}

}  // namespace

LexiconMatcher::LexiconMatcher(std::vector<LexiconEntry> entries)
    : entries_(std::move(entries)) {
  for (uint32_t i = 0; i < entries_.size(); ++i) {
    std::string key = first_word(entries_[i].term);
    if (key.empty()) {
      throw Error(ErrorKind::validation,
                  "lexicon term must start with a word character: '" + entries_[i].term + "'");
    }
    by_first_word_[key].push_back(i);
  }
}

LexiconMatcher::TagResult LexiconMatcher::tag_text(std::string_view text) const {
  TagResult result;
  std::string lower = ascii_lower_copy(text);
  std::size_t i = 0;
  const std::size_t n = lower.size();
  while (i < n) {
    if (!is_word_byte(lower[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < n && is_word_byte(lower[run_end])) ++run_end;
    auto it = by_first_word_.find(lower.substr(i, run_end - i));
    if (it != by_first_word_.end()) {
      for (uint32_t entry_index : it->second) {
        const std::string& term = entries_[entry_index].term;
        // Walk the remainder of the term from the end of the first word;
        // a space in the term consumes a whitespace run in the text.
        std::size_t t = run_end - i;  // == first_word(term).size()
        std::size_t p = run_end;
        bool ok = true;
        while (t < term.size()) {
          if (term[t] == ' ') {
            if (p >= n || !is_ascii_space(lower[p])) {
              ok = false;
              break;
            }
            while (p < n && is_ascii_space(lower[p])) ++p;
            ++t;
          } else {
            if (p >= n || lower[p] != term[t]) {
              ok = false;
              break;
            }
            ++p;
            ++t;
          }
        }
        if (ok && (p == n || !is_word_byte(lower[p]))) {
          result.matches.push_back(Match{entry_index, i});
          result.identities.insert(entries_[entry_index].general_identity);
          if (entries_[entry_index].term_class == TermClass::slur_or_slang) {
            result.has_slur = true;
          }
        }
      }
    }
    i = run_end;
  }
  return result;
}

std::vector<AssociationEntry> load_associations_json(const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(ErrorKind::parse, path + ": expected a JSON array of {title, identities}");
  }
  std::vector<AssociationEntry> entries;
  for (const auto& item : doc) {
    if (!item.contains("title") || !item.contains("identities")) {
      throw Error(ErrorKind::parse, path + ": entry missing title or identities");
    }
    AssociationEntry entry;
    entry.title_key = normalize_title(item.at("title").get<std::string>());
    for (const auto& name : item.at("identities")) {
      auto identity = identity_from_string(name.get<std::string>());
      if (!identity) {
        throw Error(ErrorKind::parse, path + ": unknown identity '" + name.get<std::string>() + "'");
      }
      entry.identities.insert(*identity);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

IdentitySet tag_media(std::string_view title,
                      const std::vector<AssociationEntry>& associations) {
  std::string key = normalize_title(title);
  IdentitySet identities;
  for (const AssociationEntry& entry : associations) {
    if (entry.title_key == key) identities.merge(entry.identities);
  }
  return identities;
}

double validate_tags(const std::map<std::string, IdentitySet>& predicted,
                     const std::map<std::string, IdentitySet>& manual,
                     GeneralIdentity identity) {
  if (predicted.empty() || manual.empty()) {
    throw Error(ErrorKind::validation, "validate_tags: empty id domain");
  }
  if (predicted.size() != manual.size()) {
    throw Error(ErrorKind::validation, "validate_tags: id domains differ in size");
  }
  long agree = 0;
  for (const auto& [id, predicted_set] : predicted) {
    auto it = manual.find(id);
    if (it == manual.end()) {
      throw Error(ErrorKind::validation, "validate_tags: id '" + id + "' missing from manual map");
    }
    if (predicted_set.contains(identity) == it->second.contains(identity)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(predicted.size());
}

void tag_corpus(std::vector<TextInstance>& instances,
                const LexiconMatcher& matcher,
                const std::vector<AssociationEntry>* associations) {
  for (TextInstance& instance : instances) {
    LexiconMatcher::TagResult tags = matcher.tag_text(instance.text);
    IdentitySet slur_identities;
    for (const LexiconMatcher::Match& match : tags.matches) {
      const LexiconEntry& entry = matcher.entries()[match.entry_index];
      if (entry.term_class == TermClass::slur_or_slang) {
        slur_identities.insert(entry.general_identity);
      }
    }
    tags.identities.for_each([&](GeneralIdentity identity) {
      if (!instance.identities.contains(identity)) {
        instance.identities.insert(identity);
        instance.tag_provenance[identity] = TagProvenance::text_reference;
      } else if (slur_identities.contains(identity)) {
        // A slur reference is direct text evidence; it must own the tag so
        // has_slur always co-occurs with a text_reference provenance.
        instance.tag_provenance[identity] = TagProvenance::text_reference;
      }
    });
    if (tags.has_slur) instance.has_slur = true;
    if (associations && instance.title) {
      IdentitySet media_tags = tag_media(*instance.title, *associations);
      media_tags.for_each([&](GeneralIdentity identity) {
        if (!instance.identities.contains(identity)) {
          instance.identities.insert(identity);
          instance.tag_provenance[identity] = TagProvenance::external_association;
        }
      });
    }
  }
}

}  // namespace supaudit
