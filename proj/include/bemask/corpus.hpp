#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bemask {

/// Sentence extent inside Document::text. Spans start at the first
/// non-whitespace character and end after the terminator (or last
/// non-whitespace character when the text just stops).
struct SentenceSpan {
    int32_t char_start = 0;
    int32_t char_end = 0;
    int32_t sent_index = 0;
};

struct Document {
    std::string doc_id;
    std::string text;
    std::vector<SentenceSpan> sentences;

    std::string_view sentence_text(int32_t sent_index) const {
        const auto& s = sentences.at(sent_index);
        return std::string_view(text).substr(s.char_start,
                                             s.char_end - s.char_start);
    }
};

struct Corpus {
    std::vector<Document> docs;

    const Document* find(const std::string& doc_id) const;
};

/// Default abbreviation stoplist: a '.' ending one of these strings never
/// terminates a sentence.
const std::vector<std::string>& default_abbreviations();

/// Load one abbreviation per line; empty lines ignored.
std::vector<std::string> load_abbreviations(const std::string& path);

/// Rule-based sentence splitter. A sentence ends at a run of '.', '?', '!'
/// followed by whitespace and then an uppercase letter or digit, unless the
/// terminator closes a stoplisted abbreviation. Decimal numbers never split
/// because the terminator must be followed by whitespace.
std::vector<SentenceSpan> segment_sentences(
    std::string_view text,
    const std::vector<std::string>& abbreviations = default_abbreviations());

/// Corpus JSONL: one object per line,
///   {"doc_id": str, "text": str, "sentences": [[start,end],...] optional}.
/// Lines without sentence offsets get them from segment_sentences.
/// FormatError carries the 1-based line number; duplicate doc_id raises
/// ConsistencyError.
Corpus load_corpus(
    const std::string& path,
    const std::vector<std::string>& abbreviations = default_abbreviations());

Corpus parse_corpus(
    std::string_view content,
    const std::vector<std::string>& abbreviations = default_abbreviations());

}  // namespace bemask
