#include "bemask/qa_datasets.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "bemask/errors.hpp"
#include "bemask/log.hpp"

namespace bemask {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::string(what) + ": cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Case-insensitive offsets of needle in haystack (all occurrences,
// overlapping allowed).
std::vector<int32_t> find_all_ci(const std::string& haystack_lower,
                                 const std::string& needle_lower) {
    std::vector<int32_t> hits;
    if (needle_lower.empty()) return hits;
    size_t pos = haystack_lower.find(needle_lower);
    while (pos != std::string::npos) {
        hits.push_back(static_cast<int32_t>(pos));
        pos = haystack_lower.find(needle_lower, pos + 1);
    }
    return hits;
}

// exact_answer comes as a string, a list of strings, or a list of lists of
// strings; flatten to the distinct variant list, preserving first-seen order.
std::vector<std::string> answer_variants(const nlohmann::json& exact) {
    std::vector<std::string> variants;
    std::unordered_set<std::string> seen;
    auto add = [&](const std::string& s) {
        if (!s.empty() && seen.insert(s).second) variants.push_back(s);
    };
    if (exact.is_string()) {
        add(exact.get<std::string>());
    } else if (exact.is_array()) {
        for (const auto& item : exact) {
            if (item.is_string()) {
                add(item.get<std::string>());
            } else if (item.is_array()) {
                for (const auto& inner : item) {
                    if (inner.is_string()) add(inner.get<std::string>());
                }
            }
        }
    }
    return variants;
}

std::vector<std::string> question_passages(const nlohmann::json& q) {
    std::vector<std::string> passages;
    if (q.contains("snippets") && q["snippets"].is_array()) {
        for (const auto& s : q["snippets"]) {
            if (s.is_object() && s.contains("text") && s["text"].is_string()) {
                passages.push_back(s["text"].get<std::string>());
            } else if (s.is_string()) {
                passages.push_back(s.get<std::string>());
            }
        }
    } else if (q.contains("passages") && q["passages"].is_array()) {
        for (const auto& s : q["passages"]) {
            if (s.is_string()) passages.push_back(s.get<std::string>());
        }
    }
    passages.erase(std::remove_if(passages.begin(), passages.end(),
                                  [](const std::string& p) {
                                      return p.find_first_not_of(" \t\r\n") ==
                                             std::string::npos;
                                  }),
                   passages.end());
    return passages;
}

// Split an overlong context at sentence boundaries into chunks of at most
// max_chars, overlapping by one sentence.
std::vector<std::string> chunk_context(const std::string& context,
                                       int32_t max_chars) {
    if (static_cast<int32_t>(context.size()) <= max_chars) return {context};
    const auto sentences = segment_sentences(context);
    if (sentences.size() <= 1) {
        // No boundary to split at: hard cut.
        std::vector<std::string> chunks;
        for (size_t pos = 0; pos < context.size();
             pos += static_cast<size_t>(max_chars)) {
            chunks.push_back(context.substr(pos, max_chars));
        }
        return chunks;
    }
    std::vector<std::string> chunks;
    size_t i = 0;
    while (i < sentences.size()) {
        size_t j = i;
        const int32_t start = sentences[i].char_start;
        while (j + 1 < sentences.size() &&
               sentences[j + 1].char_end - start <= max_chars) {
            ++j;
        }
        chunks.push_back(context.substr(start, sentences[j].char_end - start));
        if (j + 1 >= sentences.size()) break;
        // Overlap of one sentence; a chunk that is one overlong sentence
        // cannot overlap or the loop would stall.
        i = (j == i) ? j + 1 : j;
    }
    return chunks;
}

}  // namespace

BioasqConversion convert_bioasq_json(const std::string& content,
                                     const BioasqOptions& options) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bioasq: not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("questions") ||
        !doc["questions"].is_array()) {
        throw FormatError("bioasq: expected {\"questions\": [...]}");
    }

    BioasqConversion out;
    int64_t q_ordinal = 0;
    for (const auto& q : doc["questions"]) {
        ++q_ordinal;
        const std::string type = q.value("type", "");
        if (type != "factoid") {
            ++out.skipped_non_factoid;
            continue;
        }
        const std::string group_id =
            q.contains("id") && q["id"].is_string()
                ? q["id"].get<std::string>()
                : "q" + std::to_string(q_ordinal);
        const std::string body = q.value("body", "");
        const auto passages = question_passages(q);
        if (passages.empty()) {
            ++out.skipped_no_passage;
            log::warn("bioasq: factoid question " + group_id +
                      " has no passages; skipped");
            continue;
        }
        std::vector<std::string> variants;
        if (q.contains("exact_answer")) {
            variants = answer_variants(q["exact_answer"]);
        }
        ++out.factoid_questions;
        out.golds.emplace_back(group_id, variants);

        std::vector<std::string> lowered;
        lowered.reserve(variants.size());
        for (const auto& v : variants) lowered.push_back(ascii_lower(v));

        int64_t pair_ordinal = 0;
        for (const auto& passage : passages) {
            for (const auto& context :
                 chunk_context(passage, options.max_context_chars)) {
                SquadExample ex;
                ex.group_id = group_id;
                ex.qid = group_id + "_p" + std::to_string(pair_ordinal++);
                ex.question = body;
                ex.context = context;
                const std::string context_lower = ascii_lower(context);
                for (size_t v = 0; v < variants.size(); ++v) {
                    for (int32_t at : find_all_ci(context_lower, lowered[v])) {
                        ex.answers.push_back({variants[v], at});
                    }
                }
                std::sort(ex.answers.begin(), ex.answers.end(),
                          [](const SquadAnswer& a, const SquadAnswer& b) {
                              if (a.answer_start != b.answer_start) {
                                  return a.answer_start < b.answer_start;
                              }
                              return a.text < b.text;
                          });
                ex.has_answer = !ex.answers.empty();
                if (!ex.has_answer) ++out.flagged_pairs;
                // Self-check: every recorded offset must reproduce its text.
                for (const auto& ans : ex.answers) {
                    if (ans.answer_start < 0 ||
                        ans.answer_start + ans.text.size() >
                            ex.context.size() ||
                        ascii_lower(std::string_view(ex.context)
                                        .substr(ans.answer_start,
                                                ans.text.size())) !=
                            ascii_lower(ans.text)) {
                        throw InvariantError(
                            "bioasq: answer_start self-check failed for qid " +
                            ex.qid);
                    }
                }
                out.examples.push_back(std::move(ex));
            }
        }
    }
    return out;
}

BioasqConversion convert_bioasq(const std::string& path,
                                const BioasqOptions& options) {
    return convert_bioasq_json(read_file(path, "bioasq"), options);
}

void write_squad_json(const BioasqConversion& conversion,
                      const std::string& path, const std::string& sidecar_path,
                      bool keep_unanswerable,
                      const std::string& provenance_json) {
    nlohmann::ordered_json root;
    root["version"] = "1.1";
    if (!provenance_json.empty()) {
        root["provenance"] = nlohmann::ordered_json::parse(provenance_json);
    }
    auto paragraphs = nlohmann::ordered_json::array();
    for (const auto& ex : conversion.examples) {
        if (!ex.has_answer && !keep_unanswerable) continue;
        auto answers = nlohmann::ordered_json::array();
        for (const auto& a : ex.answers) {
            answers.push_back(
                {{"text", a.text}, {"answer_start", a.answer_start}});
        }
        paragraphs.push_back(
            {{"context", ex.context},
             {"qas", nlohmann::ordered_json::array(
                         {{{"id", ex.qid},
                           {"question", ex.question},
                           {"answers", answers}}})}});
    }
    root["data"] = nlohmann::ordered_json::array(
        {{{"title", "bioasq-factoid"}, {"paragraphs", paragraphs}}});
    auto golds = nlohmann::ordered_json::object();
    for (const auto& [group_id, variants] : conversion.golds) {
        golds[group_id] = variants;
    }
    root["gold_answers"] = golds;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("squad: cannot write " + path);
    out << root.dump(2) << "\n";

    if (!sidecar_path.empty()) {
        std::ofstream side(sidecar_path, std::ios::binary);
        if (!side) throw ConfigError("squad: cannot write " + sidecar_path);
        for (const auto& ex : conversion.examples) {
            if (!ex.has_answer && !keep_unanswerable) continue;
            side << nlohmann::ordered_json{{"qid", ex.qid},
                                           {"group_id", ex.group_id}}
                        .dump()
                 << "\n";
        }
    }
}

namespace {

std::string collapse_ws_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // also trims leading whitespace
    for (char c : s) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                           c == '\f' || c == '\v';
        if (space) {
            if (!in_space) out.push_back(' ');
            in_space = true;
            continue;
        }
        in_space = false;
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.push_back(c);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

struct RawCovidPair {
    std::string question;
    std::string doc_id;
    std::string answer;
};

std::vector<RawCovidPair> covid_pairs(const nlohmann::json& doc) {
    std::vector<RawCovidPair> pairs;
    auto take_question = [&](const nlohmann::json& q) {
        std::string question;
        for (const char* key : {"nq_name", "question", "kq_name", "name"}) {
            if (q.contains(key) && q[key].is_string()) {
                question = q[key].get<std::string>();
                break;
            }
        }
        if (!q.contains("answers") || !q["answers"].is_array()) return;
        for (const auto& a : q["answers"]) {
            if (!a.is_object()) continue;
            RawCovidPair pair;
            pair.question = question;
            pair.doc_id = a.value("id", "");
            pair.answer = a.value("exact_answer", "");
            pairs.push_back(std::move(pair));
        }
    };
    if (doc.contains("categories") && doc["categories"].is_array()) {
        for (const auto& cat : doc["categories"]) {
            for (const char* key : {"sub_categories", "subcategories"}) {
                if (cat.contains(key) && cat[key].is_array()) {
                    for (const auto& sub : cat[key]) take_question(sub);
                }
            }
        }
    } else if (doc.contains("data") && doc["data"].is_array()) {
        for (const auto& q : doc["data"]) take_question(q);
    } else {
        throw FormatError(
            "covidqa: expected {\"categories\": [...]} or {\"data\": [...]}");
    }
    return pairs;
}

}  // namespace

CovidQaLoad load_covidqa_json(const std::string& content,
                              const Corpus& corpus) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("covidqa: not valid JSON: ") + e.what());
    }
    const auto pairs = covid_pairs(doc);

    // Resolve documents up front so a broken corpus fails loudly.
    std::set<std::string> missing;
    for (const auto& pair : pairs) {
        if (corpus.find(pair.doc_id) == nullptr) missing.insert(pair.doc_id);
    }
    if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) {
            if (!ids.empty()) ids += ", ";
            ids += id;
        }
        throw ConsistencyError("covidqa: documents missing from corpus: " +
                               ids);
    }

    CovidQaLoad out;
    std::set<std::string> questions;
    int64_t ordinal = 0;
    for (const auto& pair : pairs) {
        ++ordinal;
        const Document& article = *corpus.find(pair.doc_id);
        SentenceQAExample ex;
        ex.qid = "covidqa_" + std::to_string(ordinal);
        ex.question = pair.question;
        ex.doc_id = pair.doc_id;
        ex.gold_answer_text = pair.answer;
        const std::string needle = collapse_ws_lower(pair.answer);
        if (!needle.empty()) {
            for (const auto& sent : article.sentences) {
                const std::string hay =
                    collapse_ws_lower(article.sentence_text(sent.sent_index));
                if (hay.find(needle) != std::string::npos) {
                    ex.gold_sentence_indices.insert(sent.sent_index);
                }
            }
        }
        if (ex.gold_sentence_indices.empty()) {
            out.rejected.push_back("pair " + ex.qid + " (question \"" +
                                   pair.question + "\"): answer \"" +
                                   pair.answer + "\" not found in document " +
                                   pair.doc_id);
            continue;
        }
        questions.insert(pair.question);
        out.examples.push_back(std::move(ex));
    }
    out.distinct_questions = static_cast<int64_t>(questions.size());
    for (const auto& reason : out.rejected) {
        log::warn("covidqa: rejected " + reason);
    }
    return out;
}

CovidQaLoad load_covidqa(const std::string& path, const Corpus& corpus) {
    return load_covidqa_json(read_file(path, "covidqa"), corpus);
}

}  // namespace bemask
