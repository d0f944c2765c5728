#include "bemask/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "bemask/errors.hpp"
#include "bemask/rng.hpp"

namespace bemask {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
}

bool is_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace

std::optional<int32_t> Vocab::lookup(std::string_view token) const {
    auto it = ids.find(std::string(token));
    if (it == ids.end()) return std::nullopt;
    return it->second;
}

Vocab parse_vocab(std::string_view content, bool lowercase) {
    Vocab vocab;
    vocab.lowercase = lowercase;

    size_t pos = 0;
    int line_no = 0;
    while (pos <= content.size()) {
        size_t nl = content.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? content.substr(pos)
                                    : content.substr(pos, nl - pos);
        if (nl == std::string_view::npos && line.empty()) break;  // trailing \n
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) {
            throw FormatError("vocab: empty token at line " +
                              std::to_string(line_no));
        }
        std::string token(line);
        auto [it, inserted] =
            vocab.ids.emplace(token, static_cast<int32_t>(vocab.tokens.size()));
        if (!inserted) {
            throw FormatError("vocab: duplicate token \"" + token +
                              "\" at line " + std::to_string(line_no));
        }
        vocab.tokens.push_back(std::move(token));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    auto require = [&](const char* name) -> int32_t {
        auto it = vocab.ids.find(name);
        if (it == vocab.ids.end()) {
            throw ConfigError(std::string("vocab: missing special token ") +
                              name);
        }
        return it->second;
    };
    vocab.pad_id = require("[PAD]");
    vocab.unk_id = require("[UNK]");
    vocab.cls_id = require("[CLS]");
    vocab.sep_id = require("[SEP]");
    vocab.mask_id = require("[MASK]");

    vocab.non_special_index.assign(vocab.tokens.size(), -1);
    for (int32_t id = 0; id < vocab.size(); ++id) {
        if (vocab.is_special(id)) continue;
        vocab.non_special_index[id] =
            static_cast<int32_t>(vocab.non_special_ids.size());
        vocab.non_special_ids.push_back(id);
    }

    uint64_t h = kFnvOffset;
    for (const auto& t : vocab.tokens) {
        h = fnv1a(t, h);
        h = fnv1a("\n", h);
    }
    vocab.content_hash = h;
    return vocab;
}

Vocab load_vocab(const std::string& path, bool lowercase) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("vocab: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_vocab(buf.str(), lowercase);
}

namespace {

// Greedy longest-match segmentation of one word. Appends spans to out;
// falls back to a single unk span when any position has no match.
void segment_word(std::string_view text, int32_t begin, int32_t end,
                  int32_t word_index, const Vocab& vocab,
                  std::vector<TokenSpan>& out) {
    const size_t unk_mark = out.size();
    if (end - begin > kMaxWordBytes) {
        out.push_back({vocab.unk_id, begin, end, word_index, false});
        return;
    }
    std::string word(text.substr(begin, end - begin));
    if (vocab.lowercase) word = ascii_lower(word);

    int32_t cursor = 0;
    const int32_t len = static_cast<int32_t>(word.size());
    while (cursor < len) {
        const bool continuation = cursor > 0;
        int32_t best_len = 0;
        int32_t best_id = -1;
        std::string candidate =
            continuation ? vocab.continuation_prefix : std::string();
        const size_t prefix_len = candidate.size();
        candidate.append(word, cursor, len - cursor);
        // Try the longest piece first and shrink.
        for (int32_t piece = len - cursor; piece >= 1; --piece) {
            candidate.resize(prefix_len + piece);
            if (auto id = vocab.lookup(candidate)) {
                best_len = piece;
                best_id = *id;
                break;
            }
        }
        if (best_id < 0) {
            out.resize(unk_mark);
            out.push_back({vocab.unk_id, begin, end, word_index, false});
            return;
        }
        out.push_back({best_id, begin + cursor, begin + cursor + best_len,
                       word_index, continuation});
        cursor += best_len;
    }
}

}  // namespace

std::vector<TokenSpan> tokenize(std::string_view text, const Vocab& vocab) {
    std::vector<TokenSpan> out;
    const int32_t n = static_cast<int32_t>(text.size());
    int32_t i = 0;
    int32_t word_index = -1;
    while (i < n) {
        if (is_space(text[i])) {
            ++i;
            continue;
        }
        // One whitespace-delimited word: [i, word_end).
        int32_t word_end = i;
        while (word_end < n && !is_space(text[word_end])) ++word_end;
        ++word_index;
        // Isolate punctuation bytes as single-character pieces.
        int32_t p = i;
        while (p < word_end) {
            if (is_punct(text[p])) {
                segment_word(text, p, p + 1, word_index, vocab, out);
                ++p;
                continue;
            }
            int32_t q = p;
            while (q < word_end && !is_punct(text[q])) ++q;
            segment_word(text, p, q, word_index, vocab, out);
            p = q;
        }
        i = word_end;
    }
    return out;
}

std::optional<TokenRange> align_span(int32_t char_start, int32_t char_end,
                                     const std::vector<TokenSpan>& tokens) {
    if (char_start >= char_end) {
        throw ConfigError("align_span: char_start must be < char_end (got " +
                          std::to_string(char_start) + ", " +
                          std::to_string(char_end) + ")");
    }
    // First token overlapping the span.
    auto first = std::lower_bound(
        tokens.begin(), tokens.end(), char_start,
        [](const TokenSpan& t, int32_t v) { return t.char_end <= v; });
    if (first == tokens.end() || first->char_start >= char_end) {
        return std::nullopt;  // span touches no token
    }
    auto last = first;
    while (std::next(last) != tokens.end() &&
           std::next(last)->char_start < char_end) {
        ++last;
    }
    // A boundary strictly inside a token means a covering range would also
    // cover characters outside the span.
    if (first->char_start < char_start) return std::nullopt;
    if (last->char_end > char_end) return std::nullopt;
    return TokenRange{static_cast<int32_t>(first - tokens.begin()),
                      static_cast<int32_t>(last - tokens.begin()) + 1};
}

}  // namespace bemask
