#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bemask {

/// Answer normalization applied before any equality test: ASCII lowercase,
/// whitespace runs collapsed to single spaces, leading/trailing punctuation
/// stripped. The version tag is recorded in every metrics report.
std::string normalize_answer(std::string_view text);
inline constexpr const char* kNormalizationVersion = "norm-v1";

/// One ranked candidate: an answer string, or a sentence index rendered in
/// decimal for the sentence-level task.
struct Candidate {
    std::string text;
    double score = 0.0;
};

/// Ranking for one question (key = qid) or one question-context pair
/// (key = group_id before aggregation).
struct RankedPrediction {
    std::string key;
    std::vector<Candidate> candidates;
};

/// Canonical form: candidates unique after normalization (max score wins),
/// sorted by descending score with ties broken by ascending normalized
/// text. All metric functions expect canonical predictions.
RankedPrediction canonicalize(const RankedPrediction& prediction);

/// Pool pair-level predictions into one ranking per group. Duplicate
/// candidates merge keeping the maximum score; on equal scores the
/// lexicographically smaller raw text survives, so the result does not
/// depend on input order. Groups with zero pair predictions cannot occur
/// here by construction; an empty input gives an empty output. Idempotent.
/// Output is sorted by key.
std::vector<RankedPrediction> aggregate_passages(
    const std::vector<RankedPrediction>& pair_predictions);

/// Gold sets keyed like the predictions; entries are normalized answer
/// strings (or decimal sentence indices).
using GoldMap = std::map<std::string, std::set<std::string>>;

/// 1-based rank of the first gold candidate, or 0 when no candidate is gold.
int64_t rank_of_first_gold(const RankedPrediction& prediction,
                           const std::set<std::string>& golds);

/// Mean over questions (the keys of golds) of 1/rank of the first gold
/// candidate; a question with no ranking, no candidates, or first gold
/// beyond the cutoff contributes 0. Every prediction key must appear in
/// golds; an empty question set raises ConfigError.
double mrr(const std::vector<RankedPrediction>& rankings, const GoldMap& golds,
           std::optional<int64_t> cutoff = std::nullopt);

/// Fraction of questions whose top candidate is gold.
double precision_at_1(const std::vector<RankedPrediction>& rankings,
                      const GoldMap& golds);

/// Fraction of questions with at least one gold in the top three.
double recall_at_3(const std::vector<RankedPrediction>& rankings,
                   const GoldMap& golds);

/// Strict accuracy (top-1 gold) and lenient accuracy (gold within top-5).
std::pair<double, double> strict_lenient_acc(
    const std::vector<RankedPrediction>& rankings, const GoldMap& golds);

enum class QaDataset { kCovidQa, kBioasq };

QaDataset parse_dataset(const std::string& name);

struct MetricsReport {
    std::string dataset;
    std::optional<double> p_at_1;
    std::optional<double> r_at_3;
    std::optional<double> mrr_value;
    std::optional<double> strict_acc;
    std::optional<double> lenient_acc;
    std::map<std::string, int64_t> per_question;  // rank of first gold, 0=none
    int64_t question_count = 0;

    std::string to_json(const std::string& provenance_json = "") const;
};

/// Compute the metric subset for a dataset: P@1/R@3/MRR (no cutoff) for the
/// sentence-level task, SAcc/LAcc/MRR@5 for the answer-level task. Checks
/// the report invariants (SAcc <= LAcc, P@1 <= R@3, everything in [0,1])
/// and raises InvariantError on violation.
MetricsReport evaluate(QaDataset dataset,
                       const std::vector<RankedPrediction>& rankings,
                       const GoldMap& golds,
                       std::optional<int64_t> mrr_cutoff_override = std::nullopt);

/// Predictions JSONL: one object per line,
///   {"qid"|"group_id": str, "candidates":
///       [{"text": str | "sentence_index": int, "score": num}]}.
/// Entries sharing a key are concatenated (pair predictions for one group
/// may span lines). Canonicalization is left to the caller/aggregator.
std::vector<RankedPrediction> load_predictions(const std::string& path);
std::vector<RankedPrediction> parse_predictions(const std::string& content);

/// Golds JSON: {"golds": {key: ["variant", ...] | [int, ...]}}. Values are
/// normalized on load.
GoldMap load_golds(const std::string& path);
GoldMap parse_golds(const std::string& content);

}  // namespace bemask
