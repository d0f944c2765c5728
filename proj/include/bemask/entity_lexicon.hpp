#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bemask/corpus.hpp"
#include "bemask/tokenizer.hpp"

namespace bemask {

/// One entry of the entity set: a case-folded surface form, its annotation
/// label, the number of annotation records backing it, and its subword ids
/// under the shared vocabulary.
struct EntityEntry {
    std::string surface;  // case-folded canonical form
    std::string label;
    int64_t count = 0;
    std::vector<int32_t> token_ids;
};

/// The entity set built during the offline recognition pass. Entries are
/// unique by surface and kept sorted, which fixes the canonical order all
/// downstream sampling relies on. Immutable after build.
struct EntityLexicon {
    std::vector<EntityEntry> entities;  // sorted by surface

    int64_t size() const { return static_cast<int64_t>(entities.size()); }
    bool contains(std::string_view surface) const;
    const EntityEntry* find(std::string_view surface) const;

    uint64_t content_hash() const;
};

/// One located occurrence of a lexicon surface inside a document.
struct EntityMention {
    std::string doc_id;
    std::string entity_surface;  // canonical (case-folded) form
    int32_t char_start = 0;
    int32_t char_end = 0;
    TokenRange token_range;
};

/// Standoff NER annotation record:
///   {"doc_id": str, "start": int, "end": int, "text": str, "label": str}.
struct AnnotationRecord {
    std::string doc_id;
    int32_t start = 0;
    int32_t end = 0;
    std::string text;
    std::string label;
};

/// Parse annotation JSONL. FormatError carries the line number.
std::vector<AnnotationRecord> load_annotations(const std::string& path);
std::vector<AnnotationRecord> parse_annotations(std::string_view content);

struct LexiconOptions {
    int64_t min_count = 1;
    std::vector<std::string> label_allowlist;  // empty = all labels
    /// When set, every record's [start,end) is checked against the document
    /// text (case-insensitively); mismatches raise ConsistencyError.
    const Corpus* corpus = nullptr;
};

/// Build the entity set from annotation records. Surfaces are case-folded;
/// those occurring fewer than min_count times are dropped. Every record is
/// validated: start < end and end - start == text length; a degenerate or
/// inconsistent record raises ConsistencyError naming it. Empty input gives
/// an empty lexicon.
EntityLexicon build_lexicon(const std::vector<AnnotationRecord>& records,
                            const Vocab& vocab, const LexiconOptions& options);

EntityLexicon build_lexicon(const std::string& annotations_path,
                            const Vocab& vocab, const LexiconOptions& options);

/// All non-overlapping occurrences of lexicon surfaces in doc.text, matched
/// case-insensitively at word boundaries and aligned to token ranges.
/// Overlap resolution: the longest match starting earliest wins, then the
/// scan resumes after it. Candidates whose character span cannot be aligned
/// to whole tokens are skipped. Output is sorted by char_start.
std::vector<EntityMention> find_mentions(const Document& doc,
                                         const EntityLexicon& lexicon,
                                         const std::vector<TokenSpan>& tokens);

/// Lexicon files are JSON; see save_lexicon for the layout. The optional
/// provenance object is written through untouched.
void save_lexicon(const EntityLexicon& lexicon, const std::string& path,
                  const std::string& provenance_json = "");
EntityLexicon load_lexicon(const std::string& path);

}  // namespace bemask
