#include "bemask/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "bemask/errors.hpp"

namespace bemask {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
}

bool is_upper_or_digit(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_word_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9');
}

// True when text[..=dot] ends with a stoplisted abbreviation whose left edge
// sits on a word boundary.
bool ends_with_abbreviation(std::string_view text, size_t dot,
                            const std::vector<std::string>& abbreviations) {
    for (const auto& abbr : abbreviations) {
        if (abbr.empty() || abbr.size() > dot + 1) continue;
        const size_t start = dot + 1 - abbr.size();
        if (text.substr(start, abbr.size()) != abbr) continue;
        if (start == 0 || !is_word_char(text[start - 1])) return true;
    }
    return false;
}

}  // namespace

const Document* Corpus::find(const std::string& doc_id) const {
    for (const auto& d : docs) {
        if (d.doc_id == doc_id) return &d;
    }
    return nullptr;
}

const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> kDefaults = {
        "Fig.", "et al.", "e.g.", "i.e.", "vs.",
    };
    return kDefaults;
}

std::vector<std::string> load_abbreviations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("abbreviations: cannot open " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

std::vector<SentenceSpan> segment_sentences(
    std::string_view text, const std::vector<std::string>& abbreviations) {
    std::vector<SentenceSpan> out;
    const size_t n = text.size();

    size_t cursor = 0;  // start of the unconsumed remainder
    auto emit = [&](size_t start, size_t end) {
        while (start < end && is_space(text[start])) ++start;
        while (end > start && is_space(text[end - 1])) --end;
        if (start >= end) return;
        out.push_back({static_cast<int32_t>(start), static_cast<int32_t>(end),
                       static_cast<int32_t>(out.size())});
    };

    size_t i = 0;
    while (i < n) {
        char c = text[i];
        if (c != '.' && c != '?' && c != '!') {
            ++i;
            continue;
        }
        size_t run_end = i;  // last terminator of the run "..", "?!", ...
        while (run_end + 1 < n && (text[run_end + 1] == '.' ||
                                   text[run_end + 1] == '?' ||
                                   text[run_end + 1] == '!')) {
            ++run_end;
        }
        size_t next = run_end + 1;
        if (next >= n || !is_space(text[next])) {
            i = run_end + 1;
            continue;
        }
        size_t after = next;
        while (after < n && is_space(text[after])) ++after;
        if (after >= n || !is_upper_or_digit(text[after])) {
            i = run_end + 1;
            continue;
        }
        if (text[i] == '.' && run_end == i &&
            ends_with_abbreviation(text, i, abbreviations)) {
            i = run_end + 1;
            continue;
        }
        emit(cursor, run_end + 1);
        cursor = after;
        i = after;
    }
    emit(cursor, n);
    return out;
}

namespace {

std::vector<SentenceSpan> sentences_from_json(const nlohmann::json& arr,
                                              const std::string& doc_id,
                                              const std::string& text) {
    std::vector<SentenceSpan> spans;
    int32_t prev_end = 0;
    for (const auto& pair : arr) {
        if (!pair.is_array() || pair.size() != 2 ||
            !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
            throw FormatError("corpus: doc " + doc_id +
                              ": sentence offsets must be [start,end] pairs");
        }
        int32_t s = pair[0].get<int32_t>();
        int32_t e = pair[1].get<int32_t>();
        if (s < prev_end || s >= e || e > static_cast<int32_t>(text.size())) {
            throw ConsistencyError("corpus: doc " + doc_id +
                                   ": bad sentence span [" + std::to_string(s) +
                                   "," + std::to_string(e) + ")");
        }
        spans.push_back({s, e, static_cast<int32_t>(spans.size())});
        prev_end = e;
    }
    // Provided spans must cover every non-whitespace character.
    size_t k = 0;
    for (int32_t pos = 0; pos < static_cast<int32_t>(text.size()); ++pos) {
        if (is_space(text[pos])) continue;
        while (k < spans.size() && spans[k].char_end <= pos) ++k;
        if (k >= spans.size() || pos < spans[k].char_start) {
            throw ConsistencyError(
                "corpus: doc " + doc_id + ": sentence spans leave character " +
                std::to_string(pos) + " uncovered");
        }
    }
    return spans;
}

}  // namespace

Corpus parse_corpus(std::string_view content,
                    const std::vector<std::string>& abbreviations) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    size_t pos = 0;
    int line_no = 0;
    while (pos < content.size()) {
        size_t nl = content.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? content.substr(pos)
                                    : content.substr(pos, nl - pos);
        pos = (nl == std::string_view::npos) ? content.size() : nl + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("corpus: line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_id") ||
            !obj.contains("text") || !obj["doc_id"].is_string() ||
            !obj["text"].is_string()) {
            throw FormatError("corpus: line " + std::to_string(line_no) +
                              ": expected {\"doc_id\": str, \"text\": str}");
        }
        Document doc;
        doc.doc_id = obj["doc_id"].get<std::string>();
        doc.text = obj["text"].get<std::string>();
        if (!seen.insert(doc.doc_id).second) {
            throw ConsistencyError("corpus: duplicate doc_id \"" + doc.doc_id +
                                   "\" at line " + std::to_string(line_no));
        }
        if (obj.contains("sentences") && !obj["sentences"].is_null()) {
            doc.sentences =
                sentences_from_json(obj["sentences"], doc.doc_id, doc.text);
        } else {
            doc.sentences = segment_sentences(doc.text, abbreviations);
        }
        corpus.docs.push_back(std::move(doc));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path,
                   const std::vector<std::string>& abbreviations) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("corpus: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str(), abbreviations);
}

}  // namespace bemask
