#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace supaudit {

const char* to_string(SuppressionStatistic statistic) {
  return statistic == SuppressionStatistic::flag_ratio ? "flag_ratio" : "score_ratio";
}

namespace {

bool is_true_negative_flag(const EvalRecord& record) {
  return !record.should_flag && record.predicted_flag.has_value();
}

bool is_true_negative_score(const EvalRecord& record) {
  return !record.should_flag && record.worst_score.has_value();
}

double median_of_sorted(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2;
}

// Type-7 percentile (linear interpolation between order statistics) on a
// sorted vector; always lies within [min, max].
double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::compute, "percentile of empty set");
  double h = p * static_cast<double>(sorted.size() - 1);
  std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

double fpr(std::span<const EvalRecord> records) {
  long true_negatives = 0;
  long false_positives = 0;
  for (const EvalRecord& record : records) {
    if (!is_true_negative_flag(record)) continue;
    ++true_negatives;
    if (*record.predicted_flag) ++false_positives;
  }
  if (true_negatives == 0) {
    throw Error(ErrorKind::compute, "fpr: no true negatives with predictions");
  }
  return static_cast<double>(false_positives) / static_cast<double>(true_negatives);
}

double i_fpr(std::span<const EvalRecord> records, GeneralIdentity identity) {
  long true_negatives = 0;
  long false_positives = 0;
  for (const EvalRecord& record : records) {
    if (!record.identities.contains(identity) || !is_true_negative_flag(record)) continue;
    ++true_negatives;
    if (*record.predicted_flag) ++false_positives;
  }
  if (true_negatives == 0) {
    throw Error(ErrorKind::compute,
                std::string("i_fpr: no true negatives tagged '") + to_string(identity) + "'");
  }
  return static_cast<double>(false_positives) / static_cast<double>(true_negatives);
}

double flag_suppression(std::span<const EvalRecord> records, GeneralIdentity identity) {
  double overall = fpr(records);
  if (overall == 0.0) {
    throw Error(ErrorKind::compute, "overall FPR zero; ratio undefined");
  }
  return i_fpr(records, identity) / overall;
}

double i_median(std::span<const EvalRecord> records, GeneralIdentity identity) {
  std::vector<double> scores;
  for (const EvalRecord& record : records) {
    if (record.identities.contains(identity) && is_true_negative_score(record)) {
      scores.push_back(*record.worst_score);
    }
  }
  if (scores.empty()) {
    throw Error(ErrorKind::compute,
                std::string("i_median: no scored true negatives tagged '") +
                    to_string(identity) + "'");
  }
  return median_of_sorted(scores);
}

double overall_median(std::span<const EvalRecord> records) {
  std::vector<double> scores;
  for (const EvalRecord& record : records) {
    if (is_true_negative_score(record)) scores.push_back(*record.worst_score);
  }
  if (scores.empty()) {
    throw Error(ErrorKind::compute, "overall median: no scored true negatives");
  }
  return median_of_sorted(scores);
}

double score_suppression(std::span<const EvalRecord> records, GeneralIdentity identity) {
  double overall = overall_median(records);
  if (overall == 0.0) {
    throw Error(ErrorKind::compute, "overall median zero; ratio undefined");
  }
  return i_median(records, identity) / overall;
}

std::pair<GeneralIdentity, double> max_suppression(std::span<const EvalRecord> records,
                                                   std::span<const GeneralIdentity> identities,
                                                   SuppressionStatistic statistic) {
  std::optional<std::pair<GeneralIdentity, double>> best;
  for (GeneralIdentity identity : identities) {
    double value;
    try {
      value = statistic == SuppressionStatistic::flag_ratio
                  ? flag_suppression(records, identity)
                  : score_suppression(records, identity);
    } catch (const Error&) {
      continue;  // identity not computable on this sample
    }
    if (!best || value > best->second) best = {identity, value};
  }
  if (!best) {
    throw Error(ErrorKind::compute, "max_suppression: no identity computable");
  }
  return *best;
}

double per_category_suppression(std::span<const EvalRecord> records,
                                GeneralIdentity identity,
                                const std::string& category,
                                SuppressionStatistic statistic) {
  if (statistic == SuppressionStatistic::flag_ratio) {
    long tn = 0, fp = 0, tn_i = 0, fp_i = 0;
    for (const EvalRecord& record : records) {
      if (record.should_flag || !record.category_flags) continue;
      auto it = record.category_flags->find(category);
      if (it == record.category_flags->end()) continue;
      ++tn;
      if (it->second) ++fp;
      if (record.identities.contains(identity)) {
        ++tn_i;
        if (it->second) ++fp_i;
      }
    }
    if (tn == 0) {
      throw Error(ErrorKind::compute, "category '" + category + "' absent from records");
    }
    if (fp == 0) {
      throw Error(ErrorKind::compute,
                  "category '" + category + "': overall FPR zero; ratio undefined");
    }
    if (tn_i == 0) {
      throw Error(ErrorKind::compute, "category '" + category + "': no true negatives tagged '" +
                                          std::string(to_string(identity)) + "'");
    }
    double overall = static_cast<double>(fp) / static_cast<double>(tn);
    double group = static_cast<double>(fp_i) / static_cast<double>(tn_i);
    return group / overall;
  }

  std::vector<double> all_scores;
  std::vector<double> identity_scores;
  for (const EvalRecord& record : records) {
    if (record.should_flag || !record.category_scores) continue;
    auto it = record.category_scores->find(category);
    if (it == record.category_scores->end()) continue;
    all_scores.push_back(it->second);
    if (record.identities.contains(identity)) identity_scores.push_back(it->second);
  }
  if (all_scores.empty()) {
    throw Error(ErrorKind::compute, "category '" + category + "' absent from records");
  }
  if (identity_scores.empty()) {
    throw Error(ErrorKind::compute, "category '" + category + "': no true negatives tagged '" +
                                        std::string(to_string(identity)) + "'");
  }
  double overall = median_of_sorted(all_scores);
  if (overall == 0.0) {
    throw Error(ErrorKind::compute,
                "category '" + category + "': overall median zero; ratio undefined");
  }
  return median_of_sorted(identity_scores) / overall;
}

namespace {

// Evaluates `compute(k)` for k in [0, n_samples) across `threads` workers,
// writing into slot k. Work split is static so the result layout never
// depends on scheduling.
template <typename Fn>
void for_each_resample(int n_samples, int threads, Fn&& compute) {
  if (threads <= 1 || n_samples < 2) {
    for (int k = 0; k < n_samples; ++k) compute(k);
    return;
  }
  int worker_count = std::min(threads, n_samples);
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(worker_count));
  for (int w = 0; w < worker_count; ++w) {
    workers.emplace_back([&, w] {
      for (int k = w; k < n_samples; k += worker_count) compute(k);
    });
  }
  for (std::thread& worker : workers) worker.join();
}

void validate_bootstrap_options(const BootstrapOptions& options) {
  if (options.n_samples < 1) {
    throw Error(ErrorKind::validation, "bootstrap n_samples must be >= 1");
  }
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw Error(ErrorKind::validation, "bootstrap level must be in (0,1)");
  }
}

BootstrapCi ci_from_samples(std::vector<double>& defined, int discarded,
                            const BootstrapOptions& options) {
  if (discarded * 2 > options.n_samples) {
    throw Error(ErrorKind::compute,
                "bootstrap: statistic undefined on more than half the resamples (" +
                    std::to_string(discarded) + "/" + std::to_string(options.n_samples) + ")");
  }
  std::sort(defined.begin(), defined.end());
  double alpha = (1.0 - options.level) / 2.0;
  BootstrapCi ci;
  ci.low = percentile_sorted(defined, alpha);
  ci.high = percentile_sorted(defined, 1.0 - alpha);
  ci.discarded = discarded;
  return ci;
}

}  // namespace

BootstrapCi bootstrap_ci(std::span<const EvalRecord> records,
                         const std::function<double(std::span<const EvalRecord>)>& statistic,
                         const BootstrapOptions& options) {
  validate_bootstrap_options(options);
  if (records.empty()) throw Error(ErrorKind::compute, "bootstrap: empty record set");
  statistic(records);  // must be computable on the full sample

  const std::size_t n = records.size();
  std::vector<std::optional<double>> values(static_cast<std::size_t>(options.n_samples));
  for_each_resample(options.n_samples, options.threads, [&](int k) {
    Rng rng(substream(options.seed, static_cast<uint64_t>(k)));
    std::vector<EvalRecord> resample;
    resample.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      resample.push_back(records[rng.next_below(n)]);
    }
    try {
      values[static_cast<std::size_t>(k)] = statistic(resample);
    } catch (const Error&) {
      values[static_cast<std::size_t>(k)] = std::nullopt;
    }
  });

  std::vector<double> defined;
  defined.reserve(values.size());
  int discarded = 0;
  for (const auto& value : values) {
    if (value) defined.push_back(*value);
    else ++discarded;
  }
  return ci_from_samples(defined, discarded, options);
}

namespace {

// Flattened per-record fields for the tight resampling loops.
struct FlagView {
  std::vector<uint16_t> identity_bits;
  std::vector<uint8_t> is_tn;  // true negative with a prediction
  std::vector<uint8_t> is_fp;
};

struct ScoreView {
  std::vector<uint16_t> identity_bits;
  std::vector<uint8_t> is_tn;  // true negative with a score
  std::vector<double> score;
};

struct FlagCounts {
  long tn = 0, fp = 0;
  long tn_i[kIdentityCount] = {0};
  long fp_i[kIdentityCount] = {0};
};

FlagCounts count_flags(const FlagView& view, const std::vector<std::size_t>* indices) {
  FlagCounts counts;
  std::size_t n = view.is_tn.size();
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t index = indices ? (*indices)[j] : j;
    if (!view.is_tn[index]) continue;
    ++counts.tn;
    bool fp = view.is_fp[index];
    if (fp) ++counts.fp;
    uint16_t bits = view.identity_bits[index];
    while (bits) {
      unsigned bit = static_cast<unsigned>(__builtin_ctz(bits));
      bits = static_cast<uint16_t>(bits & (bits - 1));
      ++counts.tn_i[bit];
      if (fp) ++counts.fp_i[bit];
    }
  }
  return counts;
}

std::optional<double> flag_ratio_from_counts(const FlagCounts& counts, unsigned identity) {
  if (counts.tn == 0 || counts.fp == 0 || counts.tn_i[identity] == 0) return std::nullopt;
  double overall = static_cast<double>(counts.fp) / static_cast<double>(counts.tn);
  double group = static_cast<double>(counts.fp_i[identity]) /
                 static_cast<double>(counts.tn_i[identity]);
  return group / overall;
}

}  // namespace

namespace {

// Alternative universe: each identity's CI resamples only that identity's
// records, with the overall rate/median frozen at the full-sample value.
std::vector<SuppressionResult> suppression_with_subset_ci(
    std::span<const EvalRecord> records, SuppressionStatistic statistic,
    const BootstrapOptions& options) {
  std::vector<SuppressionResult> results;
  double overall;
  long overall_tn = 0;
  std::optional<long> overall_fp;
  if (statistic == SuppressionStatistic::flag_ratio) {
    overall = fpr(records);
    if (overall == 0.0) throw Error(ErrorKind::compute, "overall FPR zero; ratio undefined");
    long fp = 0;
    for (const EvalRecord& record : records) {
      if (!is_true_negative_flag(record)) continue;
      ++overall_tn;
      if (*record.predicted_flag) ++fp;
    }
    overall_fp = fp;
  } else {
    overall = overall_median(records);
    if (overall == 0.0) throw Error(ErrorKind::compute, "overall median zero; ratio undefined");
    for (const EvalRecord& record : records) {
      if (is_true_negative_score(record)) ++overall_tn;
    }
  }

  for (GeneralIdentity identity : kAllIdentities) {
    std::vector<EvalRecord> subset;
    for (const EvalRecord& record : records) {
      if (record.identities.contains(identity)) subset.push_back(record);
    }
    SuppressionResult result;
    result.identity = identity;
    result.statistic = statistic;
    try {
      if (statistic == SuppressionStatistic::flag_ratio) {
        result.value = i_fpr(records, identity) / overall;
        long tn = 0, fp = 0;
        for (const EvalRecord& record : subset) {
          if (!is_true_negative_flag(record)) continue;
          ++tn;
          if (*record.predicted_flag) ++fp;
        }
        result.n_true_negatives = tn;
        result.n_false_positives = fp;
      } else {
        result.value = i_median(records, identity) / overall;
        long tn = 0;
        for (const EvalRecord& record : subset) {
          if (is_true_negative_score(record)) ++tn;
        }
        result.n_true_negatives = tn;
      }
      BootstrapCi ci = bootstrap_ci(
          subset,
          [&](std::span<const EvalRecord> resample) {
            return statistic == SuppressionStatistic::flag_ratio
                       ? fpr(resample) / overall
                       : overall_median(resample) / overall;
          },
          options);
      result.ci_low = ci.low;
      result.ci_high = ci.high;
      result.bootstrap_discarded = ci.discarded;
    } catch (const Error&) {
      continue;  // identity absent or CI undefined on most resamples
    }
    results.push_back(result);
  }

  SuppressionResult overall_row;
  overall_row.statistic = statistic;
  overall_row.value = 1.0;
  overall_row.ci_low = 1.0;
  overall_row.ci_high = 1.0;
  overall_row.n_true_negatives = overall_tn;
  overall_row.n_false_positives = overall_fp;
  results.push_back(overall_row);
  return results;
}

}  // namespace

std::vector<SuppressionResult> suppression_with_ci(std::span<const EvalRecord> records,
                                                   SuppressionStatistic statistic,
                                                   const BootstrapOptions& options) {
  validate_bootstrap_options(options);
  const std::size_t n = records.size();
  if (n == 0) throw Error(ErrorKind::compute, "suppression_with_ci: empty record set");
  if (options.universe == BootstrapUniverse::identity_subset) {
    return suppression_with_subset_ci(records, statistic, options);
  }
  const int n_samples = options.n_samples;
  const std::size_t slots = kIdentityCount + 1;  // nine identities + overall

  std::vector<std::optional<double>> resampled(static_cast<std::size_t>(n_samples) * slots);

  if (statistic == SuppressionStatistic::flag_ratio) {
    FlagView view;
    view.identity_bits.reserve(n);
    view.is_tn.reserve(n);
    view.is_fp.reserve(n);
    for (const EvalRecord& record : records) {
      view.identity_bits.push_back(record.identities.bits());
      bool tn = is_true_negative_flag(record);
      view.is_tn.push_back(tn);
      view.is_fp.push_back(tn && *record.predicted_flag);
    }

    FlagCounts point = count_flags(view, nullptr);
    if (point.tn == 0) throw Error(ErrorKind::compute, "fpr: no true negatives with predictions");
    if (point.fp == 0) throw Error(ErrorKind::compute, "overall FPR zero; ratio undefined");

    for_each_resample(n_samples, options.threads, [&](int k) {
      Rng rng(substream(options.seed, static_cast<uint64_t>(k)));
      std::vector<std::size_t> indices(n);
      for (std::size_t j = 0; j < n; ++j) indices[j] = rng.next_below(n);
      FlagCounts counts = count_flags(view, &indices);
      std::size_t base = static_cast<std::size_t>(k) * slots;
      for (unsigned i = 0; i < kIdentityCount; ++i) {
        resampled[base + i] = flag_ratio_from_counts(counts, i);
      }
      resampled[base + kIdentityCount] =
          (counts.tn && counts.fp) ? std::optional<double>(1.0) : std::nullopt;
    });

    std::vector<SuppressionResult> results;
    for (unsigned i = 0; i <= kIdentityCount; ++i) {
      SuppressionResult result;
      result.statistic = statistic;
      if (i < kIdentityCount) {
        if (point.tn_i[i] == 0) continue;  // identity absent from the sample
        result.identity = kAllIdentities[i];
        result.value = *flag_ratio_from_counts(point, i);
        result.n_true_negatives = point.tn_i[i];
        result.n_false_positives = point.fp_i[i];
      } else {
        result.value = 1.0;
        result.n_true_negatives = point.tn;
        result.n_false_positives = point.fp;
      }
      std::vector<double> defined;
      defined.reserve(static_cast<std::size_t>(n_samples));
      int discarded = 0;
      for (int k = 0; k < n_samples; ++k) {
        const auto& value = resampled[static_cast<std::size_t>(k) * slots + i];
        if (value) defined.push_back(*value);
        else ++discarded;
      }
      try {
        BootstrapCi ci = ci_from_samples(defined, discarded, options);
        result.ci_low = ci.low;
        result.ci_high = ci.high;
        result.bootstrap_discarded = ci.discarded;
      } catch (const Error&) {
        continue;  // CI undefined on most resamples: omit the row
      }
      results.push_back(result);
    }
    return results;
  }

  // score_ratio
  ScoreView view;
  view.identity_bits.reserve(n);
  view.is_tn.reserve(n);
  view.score.reserve(n);
  for (const EvalRecord& record : records) {
    view.identity_bits.push_back(record.identities.bits());
    bool tn = is_true_negative_score(record);
    view.is_tn.push_back(tn);
    view.score.push_back(tn ? *record.worst_score : 0.0);
  }

  auto medians_for = [&](const std::vector<std::size_t>* indices)
      -> std::pair<std::optional<double>, std::array<std::optional<double>, kIdentityCount>> {
    std::vector<double> overall;
    std::array<std::vector<double>, kIdentityCount> per_identity;
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t index = indices ? (*indices)[j] : j;
      if (!view.is_tn[index]) continue;
      double score = view.score[index];
      overall.push_back(score);
      uint16_t bits = view.identity_bits[index];
      while (bits) {
        unsigned bit = static_cast<unsigned>(__builtin_ctz(bits));
        bits = static_cast<uint16_t>(bits & (bits - 1));
        per_identity[bit].push_back(score);
      }
    }
    std::pair<std::optional<double>, std::array<std::optional<double>, kIdentityCount>> out;
    if (!overall.empty()) {
      double med = median_of_sorted(overall);
      if (med != 0.0) out.first = med;
    }
    for (unsigned i = 0; i < kIdentityCount; ++i) {
      if (!per_identity[i].empty()) out.second[i] = median_of_sorted(per_identity[i]);
    }
    return out;
  };

  auto point = medians_for(nullptr);
  {
    std::vector<double> overall_scores;
    for (std::size_t j = 0; j < n; ++j) {
      if (view.is_tn[j]) overall_scores.push_back(view.score[j]);
    }
    if (overall_scores.empty()) {
      throw Error(ErrorKind::compute, "overall median: no scored true negatives");
    }
  }
  if (!point.first) {
    throw Error(ErrorKind::compute, "overall median zero; ratio undefined");
  }

  for_each_resample(n_samples, options.threads, [&](int k) {
    Rng rng(substream(options.seed, static_cast<uint64_t>(k)));
    std::vector<std::size_t> indices(n);
    for (std::size_t j = 0; j < n; ++j) indices[j] = rng.next_below(n);
    auto medians = medians_for(&indices);
    std::size_t base = static_cast<std::size_t>(k) * slots;
    for (unsigned i = 0; i < kIdentityCount; ++i) {
      if (medians.first && medians.second[i]) {
        resampled[base + i] = *medians.second[i] / *medians.first;
      }
    }
    if (medians.first) resampled[base + kIdentityCount] = 1.0;
  });

  std::vector<SuppressionResult> results;
  long overall_count = 0;
  std::array<long, kIdentityCount> identity_counts{};
  for (std::size_t j = 0; j < n; ++j) {
    if (!view.is_tn[j]) continue;
    ++overall_count;
    uint16_t bits = view.identity_bits[j];
    while (bits) {
      unsigned bit = static_cast<unsigned>(__builtin_ctz(bits));
      bits = static_cast<uint16_t>(bits & (bits - 1));
      ++identity_counts[bit];
    }
  }
  for (unsigned i = 0; i <= kIdentityCount; ++i) {
    SuppressionResult result;
    result.statistic = statistic;
    if (i < kIdentityCount) {
      if (!point.second[i]) continue;
      result.identity = kAllIdentities[i];
      result.value = *point.second[i] / *point.first;
      result.n_true_negatives = identity_counts[i];
    } else {
      result.value = 1.0;
      result.n_true_negatives = overall_count;
    }
    std::vector<double> defined;
    defined.reserve(static_cast<std::size_t>(n_samples));
    int discarded = 0;
    for (int k = 0; k < n_samples; ++k) {
      const auto& value = resampled[static_cast<std::size_t>(k) * slots + i];
      if (value) defined.push_back(*value);
      else ++discarded;
    }
    try {
      BootstrapCi ci = ci_from_samples(defined, discarded, options);
      result.ci_low = ci.low;
      result.ci_high = ci.high;
      result.bootstrap_discarded = ci.discarded;
    } catch (const Error&) {
      continue;
    }
    results.push_back(result);
  }
  return results;
}

std::vector<SuppressionResult> per_category_suppression_with_ci(
    std::span<const EvalRecord> records, const std::string& category,
    SuppressionStatistic statistic, const BootstrapOptions& options) {
  // Project the category's flag/score onto the overall slots and reuse the
  // whole-record machinery; records lacking the category drop out.
  std::vector<EvalRecord> projected;
  projected.reserve(records.size());
  for (const EvalRecord& record : records) {
    EvalRecord copy;
    copy.instance_id = record.instance_id;
    copy.identities = record.identities;
    copy.should_flag = record.should_flag;
    copy.family = record.family;
    copy.has_slur = record.has_slur;
    copy.word_count = record.word_count;
    copy.dataset = record.dataset;
    if (statistic == SuppressionStatistic::flag_ratio) {
      if (record.category_flags) {
        auto it = record.category_flags->find(category);
        if (it != record.category_flags->end()) copy.predicted_flag = it->second;
      }
    } else if (record.category_scores) {
      auto it = record.category_scores->find(category);
      if (it != record.category_scores->end()) copy.worst_score = it->second;
    }
    projected.push_back(std::move(copy));
  }
  bool any = false;
  for (const EvalRecord& record : projected) {
    if (record.predicted_flag || record.worst_score) {
      any = true;
      break;
    }
  }
  if (!any) {
    throw Error(ErrorKind::compute, "category '" + category + "' absent from records");
  }
  return suppression_with_ci(projected, statistic, options);
}

}  // namespace supaudit
