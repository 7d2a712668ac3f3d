#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/eval.hpp"
#include "core/identity.hpp"

namespace supaudit {

enum class SuppressionStatistic : uint8_t { flag_ratio, score_ratio };

const char* to_string(SuppressionStatistic statistic);

// False positive rate: P[flag | should_flag = 0], over records that carry a
// predicted flag. Errors when there are no true negatives.
double fpr(std::span<const EvalRecord> records);

// FPR restricted to records tagged with `identity`.
double i_fpr(std::span<const EvalRecord> records, GeneralIdentity identity);

// i-FPR / FPR. Errors when the overall FPR is zero.
double flag_suppression(std::span<const EvalRecord> records, GeneralIdentity identity);

// Median worst score over true negatives tagged with `identity`; the median
// of an even-length set is the midpoint of the central pair.
double i_median(std::span<const EvalRecord> records, GeneralIdentity identity);

// Median worst score over all true negatives.
double overall_median(std::span<const EvalRecord> records);

// i-median / overall median. Errors when the overall median is zero.
double score_suppression(std::span<const EvalRecord> records, GeneralIdentity identity);

// Argmax and max over the identities whose statistic is computable; ties
// break by identity enum order. Errors when none is computable.
std::pair<GeneralIdentity, double> max_suppression(std::span<const EvalRecord> records,
                                                   std::span<const GeneralIdentity> identities,
                                                   SuppressionStatistic statistic);

// The suppression statistic computed against a single category's flag or
// score instead of the overall verdict. Records lacking the category are
// excluded; errors when no record carries it.
double per_category_suppression(std::span<const EvalRecord> records,
                                GeneralIdentity identity,
                                const std::string& category,
                                SuppressionStatistic statistic);

// What gets resampled for a per-identity CI: the full record universe of the
// analysis (default), or only the records carrying the identity, holding the
// overall denominator at its point estimate.
enum class BootstrapUniverse : uint8_t { full_records, identity_subset };

struct BootstrapOptions {
  int n_samples = 1000;
  double level = 0.95;
  uint64_t seed = 0;
  int threads = 1;
  BootstrapUniverse universe = BootstrapUniverse::full_records;
};

struct BootstrapCi {
  double low = 0;
  double high = 0;
  int discarded = 0;  // resamples where the statistic was undefined
};

// Percentile bootstrap: resample the records with replacement to the original
// cardinality n_samples times and take the empirical (1±level)/2 percentiles
// of the recomputed statistic. Deterministic given the seed; parallel and
// serial evaluation draw identical resamples. Errors when more than half the
// resamples leave the statistic undefined.
BootstrapCi bootstrap_ci(std::span<const EvalRecord> records,
                         const std::function<double(std::span<const EvalRecord>)>& statistic,
                         const BootstrapOptions& options);

// One identity's suppression statistic with its CI and sample counts.
struct SuppressionResult {
  std::optional<GeneralIdentity> identity;  // nullopt = overall row
  SuppressionStatistic statistic = SuppressionStatistic::flag_ratio;
  double value = 1.0;
  double ci_low = 0;
  double ci_high = 0;
  long n_true_negatives = 0;
  std::optional<long> n_false_positives;
  int bootstrap_discarded = 0;
};

// Computes every computable identity's suppression with bootstrap CIs in a
// single pass per resample (identical resample streams to bootstrap_ci).
// Uncomputable identities (no tagged true negatives) are omitted.
std::vector<SuppressionResult> suppression_with_ci(std::span<const EvalRecord> records,
                                                   SuppressionStatistic statistic,
                                                   const BootstrapOptions& options);

// Per-category variant used for the category breakdown tables.
std::vector<SuppressionResult> per_category_suppression_with_ci(
    std::span<const EvalRecord> records, const std::string& category,
    SuppressionStatistic statistic, const BootstrapOptions& options);

}  // namespace supaudit
