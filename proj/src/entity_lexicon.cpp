#include "bemask/entity_lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "bemask/errors.hpp"
#include "bemask/log.hpp"
#include "bemask/rng.hpp"

namespace bemask {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

bool is_word_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9');
}

std::string describe(const AnnotationRecord& r) {
    return "{doc_id=" + r.doc_id + ", start=" + std::to_string(r.start) +
           ", end=" + std::to_string(r.end) + ", text=\"" + r.text + "\"}";
}

}  // namespace

bool EntityLexicon::contains(std::string_view surface) const {
    return find(surface) != nullptr;
}

const EntityEntry* EntityLexicon::find(std::string_view surface) const {
    auto it = std::lower_bound(
        entities.begin(), entities.end(), surface,
        [](const EntityEntry& e, std::string_view s) { return e.surface < s; });
    if (it == entities.end() || it->surface != surface) return nullptr;
    return &*it;
}

uint64_t EntityLexicon::content_hash() const {
    uint64_t h = kFnvOffset;
    for (const auto& e : entities) {
        h = fnv1a(e.surface, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(e.label, h);
        h = fnv1a("\n", h);
    }
    return h;
}

std::vector<AnnotationRecord> parse_annotations(std::string_view content) {
    std::vector<AnnotationRecord> records;
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
            throw FormatError("annotations: line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        AnnotationRecord rec;
        try {
            rec.doc_id = obj.at("doc_id").get<std::string>();
            rec.start = obj.at("start").get<int32_t>();
            rec.end = obj.at("end").get<int32_t>();
            rec.text = obj.at("text").get<std::string>();
            rec.label = obj.at("label").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("annotations: line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("annotations: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_annotations(buf.str());
}

EntityLexicon build_lexicon(const std::vector<AnnotationRecord>& records,
                            const Vocab& vocab,
                            const LexiconOptions& options) {
    struct Tally {
        int64_t count = 0;
        std::map<std::string, int64_t> labels;
    };
    std::map<std::string, Tally> tallies;  // surface -> tally, sorted

    for (const auto& rec : records) {
        if (rec.start >= rec.end) {
            throw ConsistencyError("annotations: degenerate span " +
                                   describe(rec));
        }
        if (rec.end - rec.start != static_cast<int32_t>(rec.text.size())) {
            throw ConsistencyError(
                "annotations: span length does not match text field " +
                describe(rec));
        }
        if (options.corpus != nullptr) {
            const Document* doc = options.corpus->find(rec.doc_id);
            if (doc == nullptr) {
                throw ConsistencyError("annotations: unknown doc_id " +
                                       describe(rec));
            }
            if (rec.end > static_cast<int32_t>(doc->text.size()) ||
                ascii_lower(std::string_view(doc->text)
                                .substr(rec.start, rec.end - rec.start)) !=
                    ascii_lower(rec.text)) {
                throw ConsistencyError(
                    "annotations: span does not match document text " +
                    describe(rec));
            }
        }
        if (!options.label_allowlist.empty() &&
            std::find(options.label_allowlist.begin(),
                      options.label_allowlist.end(),
                      rec.label) == options.label_allowlist.end()) {
            continue;
        }
        Tally& t = tallies[ascii_lower(rec.text)];
        t.count += 1;
        t.labels[rec.label] += 1;
    }

    EntityLexicon lexicon;
    for (auto& [surface, tally] : tallies) {
        if (tally.count < options.min_count) continue;
        EntityEntry entry;
        entry.surface = surface;
        entry.count = tally.count;
        // Most frequent label wins; ties go to the lexicographically first.
        int64_t best = -1;
        for (const auto& [label, n] : tally.labels) {
            if (n > best) {
                best = n;
                entry.label = label;
            }
        }
        for (const auto& span : tokenize(surface, vocab)) {
            entry.token_ids.push_back(span.token_id);
        }
        if (entry.token_ids.empty()) continue;  // all-whitespace surface
        lexicon.entities.push_back(std::move(entry));
    }
    return lexicon;
}

EntityLexicon build_lexicon(const std::string& annotations_path,
                            const Vocab& vocab,
                            const LexiconOptions& options) {
    return build_lexicon(load_annotations(annotations_path), vocab, options);
}

std::vector<EntityMention> find_mentions(
    const Document& doc, const EntityLexicon& lexicon,
    const std::vector<TokenSpan>& tokens) {
    std::vector<EntityMention> mentions;
    if (lexicon.entities.empty()) return mentions;

    const std::string folded = ascii_lower(doc.text);
    const int32_t n = static_cast<int32_t>(folded.size());

    // Surfaces grouped by first byte, longest first, for the earliest-longest
    // scan below.
    std::unordered_map<char, std::vector<const EntityEntry*>> by_first;
    for (const auto& e : lexicon.entities) {
        if (!e.surface.empty()) by_first[e.surface[0]].push_back(&e);
    }
    for (auto& [c, list] : by_first) {
        std::sort(list.begin(), list.end(),
                  [](const EntityEntry* a, const EntityEntry* b) {
                      if (a->surface.size() != b->surface.size()) {
                          return a->surface.size() > b->surface.size();
                      }
                      return a->surface < b->surface;
                  });
    }

    int32_t i = 0;
    int dropped = 0;
    while (i < n) {
        if (i > 0 && is_word_char(folded[i - 1]) && is_word_char(folded[i])) {
            ++i;  // inside a word: no mention can start here
            continue;
        }
        auto it = by_first.find(folded[i]);
        const EntityEntry* hit = nullptr;
        if (it != by_first.end()) {
            for (const EntityEntry* e : it->second) {
                const int32_t len = static_cast<int32_t>(e->surface.size());
                if (i + len > n) continue;
                if (folded.compare(i, len, e->surface) != 0) continue;
                if (i + len < n && is_word_char(folded[i + len - 1]) &&
                    is_word_char(folded[i + len])) {
                    continue;  // right edge inside a word
                }
                hit = e;
                break;  // longest match at this position
            }
        }
        if (hit == nullptr) {
            ++i;
            continue;
        }
        const int32_t end = i + static_cast<int32_t>(hit->surface.size());
        auto range = align_span(i, end, tokens);
        if (!range) {
            ++dropped;
            ++i;
            continue;
        }
        mentions.push_back({doc.doc_id, hit->surface, i, end, *range});
        i = end;
    }
    if (dropped > 0) {
        log::debug("find_mentions: dropped " + std::to_string(dropped) +
                   " unalignable candidate(s) in doc " + doc.doc_id);
    }
    return mentions;
}

void save_lexicon(const EntityLexicon& lexicon, const std::string& path,
                  const std::string& provenance_json) {
    nlohmann::ordered_json doc;
    doc["format"] = "bemask-lexicon";
    doc["version"] = 1;
    if (!provenance_json.empty()) {
        doc["provenance"] = nlohmann::ordered_json::parse(provenance_json);
    }
    auto& arr = doc["entities"] = nlohmann::ordered_json::array();
    for (const auto& e : lexicon.entities) {
        arr.push_back({{"surface", e.surface},
                       {"label", e.label},
                       {"count", e.count},
                       {"token_ids", e.token_ids}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("lexicon: cannot write " + path);
    out << doc.dump(2) << "\n";
}

EntityLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("lexicon: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("lexicon: " + path + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "bemask-lexicon") {
        throw FormatError("lexicon: " + path + ": not a bemask lexicon file");
    }
    EntityLexicon lexicon;
    for (const auto& item : doc.at("entities")) {
        EntityEntry e;
        e.surface = item.at("surface").get<std::string>();
        e.label = item.at("label").get<std::string>();
        e.count = item.at("count").get<int64_t>();
        e.token_ids = item.at("token_ids").get<std::vector<int32_t>>();
        if (e.surface.empty() || e.token_ids.empty()) {
            throw FormatError("lexicon: " + path + ": invalid entry \"" +
                              e.surface + "\"");
        }
        lexicon.entities.push_back(std::move(e));
    }
    std::sort(lexicon.entities.begin(), lexicon.entities.end(),
              [](const EntityEntry& a, const EntityEntry& b) {
                  return a.surface < b.surface;
              });
    for (size_t k = 1; k < lexicon.entities.size(); ++k) {
        if (lexicon.entities[k].surface == lexicon.entities[k - 1].surface) {
            throw FormatError("lexicon: " + path + ": duplicate surface \"" +
                              lexicon.entities[k].surface + "\"");
        }
    }
    return lexicon;
}

}  // namespace bemask
