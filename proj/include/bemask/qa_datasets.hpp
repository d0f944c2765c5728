#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "bemask/corpus.hpp"

namespace bemask {

/// Extractive QA pair in SQuAD style. group_id ties together the pairs
/// expanded from one original question so predictions can be pooled again.
struct SquadAnswer {
    std::string text;
    int32_t answer_start = 0;
};

struct SquadExample {
    std::string qid;
    std::string question;
    std::string context;
    std::vector<SquadAnswer> answers;  // empty when no variant occurs
    std::string group_id;
    bool has_answer = false;
};

struct BioasqOptions {
    /// Pairs whose context contains no answer variant are flagged; they are
    /// kept in the conversion result either way, and this switch controls
    /// whether write_squad_json emits them.
    bool keep_unanswerable = false;
    /// Contexts longer than this are split at sentence boundaries into
    /// chunks overlapping by one sentence, each its own pair in the group.
    int32_t max_context_chars = 4096;
};

struct BioasqConversion {
    std::vector<SquadExample> examples;
    /// group_id -> answer variant strings, for later SAcc/LAcc/MRR scoring.
    std::vector<std::pair<std::string, std::vector<std::string>>> golds;
    int64_t factoid_questions = 0;   // factoid questions with >= 1 passage
    int64_t skipped_no_passage = 0;  // factoid questions without passages
    int64_t skipped_non_factoid = 0;
    int64_t flagged_pairs = 0;  // pairs with no answer occurrence
};

/// Convert a BioASQ-style JSON file ({"questions":[...]}) into SQuAD pairs.
/// Only factoid questions contribute. Passages come from snippets[].text
/// (or a plain "passages" string array); answer offsets are located by
/// case-insensitive search of every exact_answer variant, keeping all
/// occurrences. Every emitted offset is re-checked against the context;
/// a failure raises InvariantError.
BioasqConversion convert_bioasq(const std::string& path,
                                const BioasqOptions& options = {});
BioasqConversion convert_bioasq_json(const std::string& content,
                                     const BioasqOptions& options = {});

/// SQuAD v1.1-style JSON ({"data":[{"paragraphs":[...]}]}) with the group
/// map and gold variants as extra top-level objects; sidecar JSONL maps
/// qid -> group_id.
void write_squad_json(const BioasqConversion& conversion,
                      const std::string& path, const std::string& sidecar_path,
                      bool keep_unanswerable,
                      const std::string& provenance_json = "");

/// Sentence-level QA example: which sentences of the article contain the
/// gold answer.
struct SentenceQAExample {
    std::string qid;  // unique per question-article pair
    std::string question;
    std::string doc_id;
    std::set<int32_t> gold_sentence_indices;
    std::string gold_answer_text;
};

struct CovidQaLoad {
    std::vector<SentenceQAExample> examples;
    int64_t distinct_questions = 0;
    std::vector<std::string> rejected;  // diagnostics for dropped pairs
};

/// Load a CovidQA-style collection. Accepted layouts:
///   {"categories":[{"sub_categories":[{"nq_name"/"question", "answers":
///       [{"id", "exact_answer", ...}]}]}]}
/// or the flat {"data":[{"question", "answers":[...]}]}.
/// Every answer record references a corpus document by id; a missing
/// document raises ConsistencyError listing the ids. Gold sentences are
/// those containing the answer string (case-insensitive,
/// whitespace-normalized); a pair whose answer occurs nowhere in its
/// document is rejected with a diagnostic.
CovidQaLoad load_covidqa(const std::string& path, const Corpus& corpus);
CovidQaLoad load_covidqa_json(const std::string& content,
                              const Corpus& corpus);

}  // namespace bemask
