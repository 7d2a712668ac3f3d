#include "core/corpus.hpp"

#include <json.hpp>

#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/textutil.hpp"

namespace supaudit {

using ordered_json = nlohmann::ordered_json;

const char* to_string(MediaKind kind) {
  return kind == MediaKind::movie ? "movie" : "tv_episode";
}

std::optional<MediaKind> media_kind_from_string(std::string_view name) {
  if (name == "movie") return MediaKind::movie;
  if (name == "tv_episode" || name == "tv") return MediaKind::tv_episode;
  return std::nullopt;
}

const char* to_string(MediaSource source) {
  switch (source) {
    case MediaSource::tmdb: return "tmdb";
    case MediaSource::wikipedia: return "wikipedia";
    case MediaSource::imdb: return "imdb";
  }
  return "?";
}

std::optional<MediaSource> media_source_from_string(std::string_view name) {
  if (name == "tmdb") return MediaSource::tmdb;
  if (name == "wikipedia") return MediaSource::wikipedia;
  if (name == "imdb") return MediaSource::imdb;
  return std::nullopt;
}

const char* to_string(Rating rating) {
  switch (rating) {
    case Rating::G: return "G";
    case Rating::PG: return "PG";
    case Rating::PG13: return "PG-13";
    case Rating::R: return "R";
    case Rating::NC17: return "NC-17";
    case Rating::TV_Y: return "TV-Y";
    case Rating::TV_Y7: return "TV-Y7";
    case Rating::TV_G: return "TV-G";
    case Rating::TV_PG: return "TV-PG";
    case Rating::TV_14: return "TV-14";
    case Rating::TV_MA: return "TV-MA";
    case Rating::UNRATED: return "UNRATED";
  }
  return "?";
}

std::optional<Rating> rating_from_string(std::string_view name) {
  std::string key = ascii_lower_copy(name);
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  if (key == "g") return Rating::G;
  if (key == "pg") return Rating::PG;
  if (key == "pg-13" || key == "pg13") return Rating::PG13;
  if (key == "r") return Rating::R;
  if (key == "nc-17" || key == "nc17") return Rating::NC17;
  if (key == "tv-y" || key == "tvy") return Rating::TV_Y;
  if (key == "tv-y7" || key == "tvy7") return Rating::TV_Y7;
  if (key == "tv-g" || key == "tvg") return Rating::TV_G;
  if (key == "tv-pg" || key == "tvpg") return Rating::TV_PG;
  if (key == "tv-14" || key == "tv14") return Rating::TV_14;
  if (key == "tv-ma" || key == "tvma") return Rating::TV_MA;
  if (key == "unrated" || key == "nr" || key.empty()) return Rating::UNRATED;
  return std::nullopt;
}

bool is_tv_rating(Rating rating) {
  switch (rating) {
    case Rating::TV_Y:
    case Rating::TV_Y7:
    case Rating::TV_G:
    case Rating::TV_PG:
    case Rating::TV_14:
    case Rating::TV_MA:
      return true;
    default:
      return false;
  }
}

LabelScheme LabelScheme::pg_ok() {
  return LabelScheme{
      "pg_ok",
      {Rating::G, Rating::PG},
      {Rating::TV_Y, Rating::TV_Y7, Rating::TV_G, Rating::TV_PG},
  };
}

LabelScheme LabelScheme::pg13_ok() {
  return LabelScheme{
      "pg13_ok",
      {Rating::G, Rating::PG, Rating::PG13},
      {Rating::TV_Y, Rating::TV_Y7, Rating::TV_G, Rating::TV_PG, Rating::TV_14},
  };
}

LabelScheme LabelScheme::from_name(std::string_view name) {
  std::string key = ascii_lower_copy(name);
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  if (key == "pg_ok") return pg_ok();
  if (key == "pg13_ok" || key == "pg_13_ok") return pg13_ok();
  throw Error(ErrorKind::validation, "unknown label scheme: " + std::string(name));
}

std::optional<bool> label_media(const MediaItem& item, const LabelScheme& scheme) {
  if (item.rating == Rating::UNRATED) return std::nullopt;
  const auto& ok = item.kind == MediaKind::movie ? scheme.ok_movie_ratings
                                                 : scheme.ok_tv_ratings;
  return ok.count(item.rating) == 0;
}

bool passes_release_filter(const MediaItem& item, const ReleaseCutoffs& cutoffs) {
  return item.kind == MediaKind::movie ? item.release_year >= cutoffs.movie_year_min
                                       : item.release_year >= cutoffs.tv_year_min;
}

namespace {

// id slug for media-derived instances: normalized title + year, with a
// counter when titles collide.
std::string media_instance_id(const MediaItem& item,
                              std::unordered_map<std::string, int>& seen) {
  std::string base = normalize_title(item.title);
  for (char& c : base) {
    if (c == ' ') c = '-';
  }
  if (base.empty()) base = "untitled";
  base += "-" + std::to_string(item.release_year);
  int n = ++seen[base];
  if (n > 1) base += "-" + std::to_string(n);
  return base;
}

}  // namespace

std::vector<TextInstance> media_to_instances(const std::vector<MediaItem>& items,
                                             const LabelScheme& scheme,
                                             const std::string& dataset,
                                             const ReleaseCutoffs& cutoffs) {
  std::vector<TextInstance> out;
  std::unordered_map<std::string, int> seen_ids;
  for (const MediaItem& item : items) {
    if (!passes_release_filter(item, cutoffs)) continue;
    std::optional<bool> label = label_media(item, scheme);
    if (!label) continue;
    TextInstance instance;
    instance.id = media_instance_id(item, seen_ids);
    instance.text = item.synopsis;
    instance.dataset = dataset;
    instance.family = Family::genai;
    instance.should_flag = *label;
    instance.word_count = count_words(instance.text);
    instance.title = item.title;
    out.push_back(std::move(instance));
  }
  return out;
}

namespace {

void check_instance_invariants(const TextInstance& instance, const std::string& where) {
  bool any_text_reference = false;
  instance.identities.for_each([&](GeneralIdentity identity) {
    auto it = instance.tag_provenance.find(identity);
    if (it == instance.tag_provenance.end()) {
      throw Error(ErrorKind::validation,
                  where + ": identity '" + to_string(identity) + "' has no tag provenance");
    }
    if (it->second == TagProvenance::text_reference) any_text_reference = true;
  });
  if (instance.has_slur && !any_text_reference) {
    throw Error(ErrorKind::validation,
                where + ": has_slur requires at least one text_reference identity tag");
  }
}

TextInstance instance_from_json(const ordered_json& object,
                                const std::string& dataset,
                                Family family,
                                const std::string& where) {
  if (!object.is_object()) {
    throw Error(ErrorKind::parse, where + ": not a JSON object");
  }
  for (const char* field : {"id", "text", "should_flag"}) {
    if (!object.contains(field)) {
      throw Error(ErrorKind::parse, where + ": missing required field '" + std::string(field) + "'");
    }
  }
  TextInstance instance;
  try {
    instance.id = object.at("id").get<std::string>();
    instance.text = object.at("text").get<std::string>();
    instance.should_flag = object.at("should_flag").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, where + ": " + e.what());
  }
  if (instance.id.empty()) {
    throw Error(ErrorKind::parse, where + ": empty id");
  }
  // Caller-supplied dataset name wins; otherwise take the line's own.
  instance.dataset = dataset;
  if (instance.dataset.empty() && object.contains("dataset")) {
    instance.dataset = object.at("dataset").get<std::string>();
  }
  if (instance.dataset.empty()) {
    throw Error(ErrorKind::parse, where + ": no dataset name given");
  }
  instance.family = family;
  if (object.contains("family")) {
    auto parsed = family_from_string(object.at("family").get<std::string>());
    if (!parsed) throw Error(ErrorKind::parse, where + ": bad family");
    instance.family = *parsed;
  }
  if (object.contains("subset") && !object.at("subset").is_null()) {
    instance.subset = object.at("subset").get<std::string>();
  }
  if (object.contains("title") && !object.at("title").is_null()) {
    instance.title = object.at("title").get<std::string>();
  }

  TagProvenance line_provenance = TagProvenance::individually_coded;
  if (object.contains("provenance")) {
    auto parsed = provenance_from_string(object.at("provenance").get<std::string>());
    if (!parsed) {
      throw Error(ErrorKind::parse,
                  where + ": unknown provenance '" + object.at("provenance").get<std::string>() + "'");
    }
    line_provenance = *parsed;
  }
  if (object.contains("identities")) {
    if (!object.at("identities").is_array()) {
      throw Error(ErrorKind::parse, where + ": identities must be an array");
    }
    for (const auto& name : object.at("identities")) {
      auto identity = identity_from_string(name.get<std::string>());
      if (!identity) {
        throw Error(ErrorKind::parse, where + ": unknown identity '" + name.get<std::string>() + "'");
      }
      instance.identities.insert(*identity);
      instance.tag_provenance[*identity] = line_provenance;
    }
  }
  if (object.contains("tag_provenance")) {
    for (const auto& [key, value] : object.at("tag_provenance").items()) {
      auto identity = identity_from_string(key);
      if (!identity) throw Error(ErrorKind::parse, where + ": unknown identity '" + key + "'");
      auto provenance = provenance_from_string(value.get<std::string>());
      if (!provenance) {
        throw Error(ErrorKind::parse, where + ": unknown provenance '" + value.get<std::string>() + "'");
      }
      instance.identities.insert(*identity);
      instance.tag_provenance[*identity] = *provenance;
    }
  }
  if (object.contains("has_slur")) {
    instance.has_slur = object.at("has_slur").get<bool>();
  }
  instance.word_count = count_words(instance.text);
  check_instance_invariants(instance, where);
  return instance;
}

}  // namespace

std::vector<TextInstance> ingest_jsonl(const std::string& path,
                                       const std::string& dataset,
                                       Family family) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open file: " + path);
  std::vector<TextInstance> instances;
  std::unordered_set<std::string> ids;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim_copy(line).empty()) continue;
    std::string where = path + ":" + std::to_string(line_number);
    ordered_json object = ordered_json::parse(line, nullptr, false);
    if (object.is_discarded()) {
      throw Error(ErrorKind::parse, where + ": malformed JSON");
    }
    TextInstance instance = instance_from_json(object, dataset, family, where);
    if (!ids.insert(instance.id).second) {
      throw Error(ErrorKind::parse, where + ": duplicate id '" + instance.id + "'");
    }
    instances.push_back(std::move(instance));
  }
  return instances;
}

std::string instance_to_json_line(const TextInstance& instance) {
  ordered_json object;
  object["id"] = instance.id;
  object["text"] = instance.text;
  object["dataset"] = instance.dataset;
  if (instance.subset) object["subset"] = *instance.subset;
  object["family"] = to_string(instance.family);
  object["should_flag"] = instance.should_flag;
  ordered_json identities = ordered_json::array();
  ordered_json provenance = ordered_json::object();
  instance.identities.for_each([&](GeneralIdentity identity) {
    identities.push_back(to_string(identity));
    provenance[to_string(identity)] = to_string(instance.tag_provenance.at(identity));
  });
  object["identities"] = std::move(identities);
  if (!provenance.empty()) object["tag_provenance"] = std::move(provenance);
  object["has_slur"] = instance.has_slur;
  object["word_count"] = instance.word_count;
  if (instance.title) object["title"] = *instance.title;
  return object.dump();
}

void write_instances_jsonl(const std::string& path,
                           const std::vector<TextInstance>& instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  for (const TextInstance& instance : instances) {
    out << instance_to_json_line(instance) << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

std::vector<MediaItem> read_media_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  for (const char* column : {"title", "kind", "release_year", "rating", "synopsis", "source"}) {
    if (!table.has_column(column)) {
      throw Error(ErrorKind::parse, path + ": missing column '" + std::string(column) + "'");
    }
  }
  std::vector<MediaItem> items;
  for (std::size_t row = 0; row < table.row_count(); ++row) {
    std::string where = path + ": row " + std::to_string(row + 2);
    MediaItem item;
    item.title = table.cell(row, "title");
    auto kind = media_kind_from_string(table.cell(row, "kind"));
    if (!kind) throw Error(ErrorKind::parse, where + ": bad kind '" + table.cell(row, "kind") + "'");
    item.kind = *kind;
    try {
      item.release_year = std::stoi(table.cell(row, "release_year"));
    } catch (const std::exception&) {
      throw Error(ErrorKind::parse, where + ": bad release_year");
    }
    auto rating = rating_from_string(table.cell(row, "rating"));
    if (!rating) throw Error(ErrorKind::parse, where + ": bad rating '" + table.cell(row, "rating") + "'");
    item.rating = *rating;
    if (item.rating != Rating::UNRATED) {
      bool tv = is_tv_rating(item.rating);
      if (tv != (item.kind == MediaKind::tv_episode)) {
        throw Error(ErrorKind::parse,
                    where + ": rating " + to_string(item.rating) + " does not apply to " +
                        to_string(item.kind));
      }
    }
    item.synopsis = table.cell(row, "synopsis");
    auto source = media_source_from_string(table.cell(row, "source"));
    if (!source) throw Error(ErrorKind::parse, where + ": bad source");
    item.source = *source;
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<TextInstance> ingest_csv(const std::string& path,
                                     const std::string& dataset,
                                     Family family,
                                     const CsvColumnMap& columns) {
  CsvTable table = read_csv(path);
  for (const std::string& column : {columns.id, columns.text, columns.should_flag}) {
    if (!table.has_column(column)) {
      throw Error(ErrorKind::parse, path + ": missing column '" + column + "'");
    }
  }
  std::vector<TextInstance> instances;
  std::unordered_set<std::string> ids;
  for (std::size_t row = 0; row < table.row_count(); ++row) {
    std::string where = path + ": row " + std::to_string(row + 2);
    TextInstance instance;
    instance.id = table.cell(row, columns.id);
    instance.text = table.cell(row, columns.text);
    instance.dataset = dataset;
    instance.family = family;
    std::string flag = ascii_lower_copy(trim_copy(table.cell(row, columns.should_flag)));
    if (flag == "1" || flag == "true" || flag == "yes" || flag == "y") {
      instance.should_flag = true;
    } else if (flag == "0" || flag == "false" || flag == "no" || flag == "n") {
      instance.should_flag = false;
    } else {
      throw Error(ErrorKind::parse, where + ": bad should_flag value '" + flag + "'");
    }
    if (columns.subset && table.has_column(*columns.subset)) {
      std::string subset = table.cell(row, *columns.subset);
      if (!subset.empty()) instance.subset = subset;
    }
    if (columns.identities && table.has_column(*columns.identities)) {
      for (const std::string& name : split(table.cell(row, *columns.identities), '|')) {
        if (name.empty()) continue;
        auto identity = identity_from_string(name);
        if (!identity) throw Error(ErrorKind::parse, where + ": unknown identity '" + name + "'");
        instance.identities.insert(*identity);
        instance.tag_provenance[*identity] = TagProvenance::individually_coded;
      }
    }
    instance.word_count = count_words(instance.text);
    if (!ids.insert(instance.id).second) {
      throw Error(ErrorKind::parse, where + ": duplicate id '" + instance.id + "'");
    }
    instances.push_back(std::move(instance));
  }
  return instances;
}

}  // namespace supaudit
