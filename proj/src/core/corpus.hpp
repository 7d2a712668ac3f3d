#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/identity.hpp"

namespace supaudit {

// One labeled text with its ground-truth flag label and identity tags.
struct TextInstance {
  std::string id;
  std::string text;
  std::string dataset;
  std::optional<std::string> subset;
  Family family = Family::traditional;
  bool should_flag = false;
  IdentitySet identities;
  std::map<GeneralIdentity, TagProvenance> tag_provenance;
  bool has_slur = false;
  int word_count = 0;
  // Media-derived instances keep the source title so association lists can be
  // applied at tagging time.
  std::optional<std::string> title;

  bool operator==(const TextInstance&) const = default;
};

enum class MediaKind : uint8_t { movie, tv_episode };
enum class MediaSource : uint8_t { tmdb, wikipedia, imdb };

enum class Rating : uint8_t {
  G, PG, PG13, R, NC17,
  TV_Y, TV_Y7, TV_G, TV_PG, TV_14, TV_MA,
  UNRATED,
};

const char* to_string(MediaKind kind);
std::optional<MediaKind> media_kind_from_string(std::string_view name);
const char* to_string(MediaSource source);
std::optional<MediaSource> media_source_from_string(std::string_view name);
const char* to_string(Rating rating);
std::optional<Rating> rating_from_string(std::string_view name);

bool is_tv_rating(Rating rating);

struct MediaItem {
  std::string title;
  MediaKind kind = MediaKind::movie;
  int release_year = 0;
  Rating rating = Rating::UNRATED;
  std::string synopsis;
  MediaSource source = MediaSource::tmdb;
};

// Age-rating labeling rule: ratings in the ok sets mean "should not flag".
struct LabelScheme {
  std::string name;
  std::set<Rating> ok_movie_ratings;
  std::set<Rating> ok_tv_ratings;

  static LabelScheme pg_ok();
  static LabelScheme pg13_ok();
  // Accepts "pg-ok"/"pg_ok" and "pg13-ok"/"pg-13-ok"/"pg13_ok".
  static LabelScheme from_name(std::string_view name);
};

// Release-year cutoffs; ratings systems predate neither year.
struct ReleaseCutoffs {
  int movie_year_min = 1986;
  int tv_year_min = 1998;
};

// Absent for UNRATED items; otherwise should_flag = rating outside the ok set.
std::optional<bool> label_media(const MediaItem& item, const LabelScheme& scheme);

bool passes_release_filter(const MediaItem& item, const ReleaseCutoffs& cutoffs = {});

std::vector<TextInstance> media_to_instances(const std::vector<MediaItem>& items,
                                             const LabelScheme& scheme,
                                             const std::string& dataset,
                                             const ReleaseCutoffs& cutoffs = {});

// One JSON object per line; requires id, text, should_flag. Pre-supplied
// identities default to individually_coded provenance unless the line names
// another method. Errors carry the offending line number.
std::vector<TextInstance> ingest_jsonl(const std::string& path,
                                       const std::string& dataset,
                                       Family family);

void write_instances_jsonl(const std::string& path,
                           const std::vector<TextInstance>& instances);

std::string instance_to_json_line(const TextInstance& instance);

std::vector<MediaItem> read_media_csv(const std::string& path);

// Column-mapped CSV ingestion for datasets shipped in their native layout.
struct CsvColumnMap {
  std::string id;
  std::string text;
  std::string should_flag;
  std::optional<std::string> subset;
  std::optional<std::string> identities;  // '|'-separated identity names
};

std::vector<TextInstance> ingest_csv(const std::string& path,
                                     const std::string& dataset,
                                     Family family,
                                     const CsvColumnMap& columns);

}  // namespace supaudit
