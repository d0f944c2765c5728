#pragma once

// Shared fixture builders for unit and acceptance tests. Everything here is
// deterministic: fixtures carry their own ground truth (token ids, planted
// mention positions) computed independently of the library's tokenizer, so
// tests can verify pipeline output against knowledge the pipeline never saw.

#include <cstdint>
#include <string>
#include <vector>

#include "bemask/tokenizer.hpp"

namespace bemask::testing {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Vocabulary used across the unit tests: the five specials, isolated
/// punctuation, a hand-picked word list (including the subword pair
/// hyper/##tension), and nothing else. "qzx" is deliberately absent.
std::string small_vocab_text();

/// A corpus of space-separated vocabulary words, one token per word, with
/// entity surfaces planted at known token positions. Several mentions are
/// planted back-to-back to exercise the adjacency rule.
struct SynthCorpus {
    std::string vocab_text;
    std::string corpus_jsonl;
    std::string annotations_jsonl;

    struct Mention {
        int32_t doc = 0;
        int32_t tok_begin = 0;  // == word index: every word is one token
        int32_t tok_len = 0;
        std::string surface;  // case-folded
    };

    std::vector<std::vector<int32_t>> doc_token_ids;  // ground truth per doc
    std::vector<Mention> mentions;                    // sorted by (doc, tok_begin)
    std::vector<std::string> entity_surfaces;         // unique, sorted
    int64_t total_tokens = 0;
};

SynthCorpus make_synth_corpus(int64_t target_tokens, int32_t n_entities,
                              uint64_t seed, bool plant_entities);

/// CovidQA-shaped fixture matching the published collection counts:
/// 27 questions (sub_categories), 127 answer pairs, 85 distinct articles,
/// every answer string planted verbatim in its article.
struct CovidQaFixture {
    std::string covidqa_json;
    std::string corpus_jsonl;
    int64_t question_count = 0;
    int64_t pair_count = 0;
    int64_t article_count = 0;
};

CovidQaFixture make_covidqa_official_fixture();

}  // namespace bemask::testing
