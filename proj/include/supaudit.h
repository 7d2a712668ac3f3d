/* supaudit — batch audit toolkit for measuring identity-related speech
 * suppression by content-moderation services.
 *
 * C API over the C++ core: opaque handles, integer status codes, and
 * file-oriented pipeline stages. All functions return SUPAUDIT_OK (0) on
 * success; on failure, supaudit_last_error() describes what went wrong for
 * the calling thread. Strings returned through char** outputs are owned by
 * the caller and released with supaudit_string_free().
 */

#ifndef SUPAUDIT_H
#define SUPAUDIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum supaudit_status {
  SUPAUDIT_OK = 0,
  SUPAUDIT_ERR_VALIDATION = 1,
  SUPAUDIT_ERR_STAGE = 2,
  SUPAUDIT_ERR_IO = 3,
  SUPAUDIT_ERR_PARSE = 4,
  SUPAUDIT_ERR_COMPUTE = 5,
  SUPAUDIT_ERR_BACKEND = 6,
  SUPAUDIT_ERR_AUTH = 7,
  SUPAUDIT_ERR_INVALID_ARGUMENT = 8,
} supaudit_status;

const char* supaudit_version(void);

/* Last error message for the calling thread; empty string when none. */
const char* supaudit_last_error(void);

void supaudit_string_free(char* s);

/* ---- pipeline stages (file in, file out) ---- */

/* format: "jsonl" | "media-csv". scheme (media-csv only): "pg-ok" | "pg13-ok".
 * movie_year_min/tv_year_min <= 0 use the defaults (1986 / 1998). */
supaudit_status supaudit_ingest(const char* in_path, const char* format,
                                const char* dataset, const char* family,
                                const char* scheme, int movie_year_min,
                                int tv_year_min, const char* out_path);

/* associations_path may be NULL. */
supaudit_status supaudit_tag(const char* in_path, const char* lexicon_path,
                             const char* associations_path, const char* out_path);

/* backends_path holds one backend config object or an array of them;
 * backend_name selects. parallelism <= 0 uses the backend's configured value.
 * cache_path may be NULL to disable caching. */
supaudit_status supaudit_moderate(const char* in_path, const char* backends_path,
                                  const char* backend_name, const char* cache_path,
                                  int parallelism, const char* out_path);

supaudit_status supaudit_thresholds(const char* responses_path, const char* out_path);

/* thresholds_path may be NULL (raw scores). bootstrap_universe: "full"
 * resamples the whole record set per CI, "identity" resamples only the
 * identity's records (NULL = "full"). out_categories_path may be NULL. */
supaudit_status supaudit_score(const char* tagged_path, const char* responses_path,
                               const char* thresholds_path, int bootstrap_samples,
                               double level, uint64_t seed, int threads,
                               const char* bootstrap_universe, const char* out_path,
                               const char* out_categories_path);

/* model: "logistic" | "linear". thresholds_path may be NULL. */
supaudit_status supaudit_analyze(const char* tagged_path, const char* responses_path,
                                 const char* thresholds_path, const char* model,
                                 const char* out_path);

/* Assembles report.md (plus CSV side tables) from a pipeline results
 * directory. format: "markdown" | "csv". */
supaudit_status supaudit_report(const char* results_dir, const char* format,
                                uint64_t seed, int sample_k, int sample_pool,
                                const char* out_path);

/* Runs the whole pipeline from a declarative config. out_dir may be NULL to
 * use the config's own; threads <= 0 keeps the config's setting. */
supaudit_status supaudit_run(const char* config_path, const char* out_dir, int threads);

/* Validation problems come back as a newline-separated list (NULL when the
 * config is valid). Returns SUPAUDIT_OK when validation executed, regardless
 * of the number of problems found. */
supaudit_status supaudit_validate(const char* config_path, char** problems_out,
                                  size_t* problem_count_out);

/* ---- opaque handles ---- */

typedef struct supaudit_corpus supaudit_corpus;
typedef struct supaudit_lexicon supaudit_lexicon;
typedef struct supaudit_eval supaudit_eval;

supaudit_status supaudit_corpus_open(const char* jsonl_path, supaudit_corpus** out);
void supaudit_corpus_free(supaudit_corpus* corpus);
size_t supaudit_corpus_size(const supaudit_corpus* corpus);
/* id of the i-th instance; caller frees. */
supaudit_status supaudit_corpus_id(const supaudit_corpus* corpus, size_t index,
                                   char** id_out);

supaudit_status supaudit_lexicon_open(const char* tsv_path, supaudit_lexicon** out);
void supaudit_lexicon_free(supaudit_lexicon* lexicon);
size_t supaudit_lexicon_size(const supaudit_lexicon* lexicon);
/* identities_out receives a comma-separated list of general identities
 * (caller frees); has_slur_out receives 0/1. */
supaudit_status supaudit_tag_text(const supaudit_lexicon* lexicon, const char* text,
                                  char** identities_out, int* has_slur_out);

/* Joined (tagged corpus, responses) rows ready for the suppression metrics.
 * thresholds_path may be NULL. */
supaudit_status supaudit_eval_open(const char* tagged_path, const char* responses_path,
                                   const char* thresholds_path, supaudit_eval** out);
void supaudit_eval_free(supaudit_eval* eval);
size_t supaudit_eval_size(const supaudit_eval* eval);

/* statistic: "flag_ratio" | "score_ratio". identity: one of the nine general
 * identity names. */
supaudit_status supaudit_eval_suppression(const supaudit_eval* eval, const char* identity,
                                          const char* statistic, double* value_out);
supaudit_status supaudit_eval_suppression_ci(const supaudit_eval* eval,
                                             const char* identity, const char* statistic,
                                             int bootstrap_samples, double level,
                                             uint64_t seed, int threads, double* value_out,
                                             double* ci_low_out, double* ci_high_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SUPAUDIT_H */
