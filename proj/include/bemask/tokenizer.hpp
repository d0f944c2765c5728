#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bemask {

/// Subword vocabulary with the five reserved tokens. Immutable after load;
/// safe to share across threads.
struct Vocab {
    std::vector<std::string> tokens;              // id -> surface
    std::unordered_map<std::string, int32_t> ids; // surface -> id

    int32_t pad_id = -1;
    int32_t unk_id = -1;
    int32_t cls_id = -1;
    int32_t sep_id = -1;
    int32_t mask_id = -1;

    std::string continuation_prefix = "##";
    bool lowercase = true;

    // Non-special ids in ascending order, plus the inverse map used when a
    // masking swap must avoid the original token.
    std::vector<int32_t> non_special_ids;
    std::vector<int32_t> non_special_index;  // id -> position, -1 for specials

    // Content hash of the vocabulary (token list), recorded in batch headers.
    uint64_t content_hash = 0;

    int32_t size() const { return static_cast<int32_t>(tokens.size()); }

    bool is_special(int32_t id) const {
        return id == pad_id || id == unk_id || id == cls_id || id == sep_id ||
               id == mask_id;
    }

    /// Id for a token string, or nullopt when absent.
    std::optional<int32_t> lookup(std::string_view token) const;
};

/// One subword occurrence in a source text. Offsets are byte offsets into
/// the original string, so UTF-8 input passes through untouched.
struct TokenSpan {
    int32_t token_id = 0;
    int32_t char_start = 0;
    int32_t char_end = 0;
    int32_t word_index = 0;       // whitespace-delimited word this came from
    bool is_continuation = false; // true for non-initial subwords of a word
};

/// Half-open token index range [begin, end).
struct TokenRange {
    int32_t begin = 0;
    int32_t end = 0;

    int32_t size() const { return end - begin; }
    bool operator==(const TokenRange&) const = default;
};

/// Reserved token names the loader requires:
/// [PAD], [UNK], [CLS], [SEP], [MASK].
///
/// File format: UTF-8 text, one token per line, id = zero-based line number.
/// Throws ConfigError when a reserved token is missing, FormatError on
/// duplicate or empty lines.
Vocab load_vocab(const std::string& path, bool lowercase = true);

/// Same contract as load_vocab but over in-memory file content. Useful for
/// tests and for hashing exactly what was read.
Vocab parse_vocab(std::string_view content, bool lowercase = true);

/// Greedy longest-match subword segmentation.
///
/// Words are produced by splitting on ASCII whitespace and isolating ASCII
/// punctuation bytes as single-character words. Each word is segmented
/// left-to-right, always taking the longest vocabulary entry that matches
/// (continuation entries carry the "##" prefix). A word with no legal
/// segmentation, or longer than kMaxWordBytes, becomes one unk_token span
/// covering the whole word. Pure function; deterministic.
std::vector<TokenSpan> tokenize(std::string_view text, const Vocab& vocab);

constexpr int kMaxWordBytes = 100;

/// Minimal contiguous token range covering the character span
/// [char_start, char_end). Returns nullopt when a boundary falls strictly
/// inside a token, i.e. when no range covers the span without also covering
/// characters outside it, or when the span touches no token at all.
/// Precondition char_start < char_end (ConfigError otherwise).
std::optional<TokenRange> align_span(int32_t char_start, int32_t char_end,
                                     const std::vector<TokenSpan>& tokens);

}  // namespace bemask
