#include "support/fixtures.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bemask/rng.hpp"

namespace bemask::testing {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fixture: cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("fixture: cannot write " + path);
    out << content;
}

std::string small_vocab_text() {
    static const char* words[] = {
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
        ".", ",", "hyper", "##tension", "heart", "disease", "coronary",
        "covid", "patients", "with", "and", "diabetes", "the", "of", "in",
        "a", "was", "reported", "risk", "increased", "or", "for", "study",
        "trial", "dose", "treatment", "observed", "days", "wide", "b",
    };
    std::string out;
    for (const char* w : words) {
        out += w;
        out += '\n';
    }
    return out;
}

namespace {

// Independent word -> id map straight off the vocab text, bypassing the
// library loader.
std::map<std::string, int32_t> id_map(const std::string& vocab_text) {
    std::map<std::string, int32_t> ids;
    std::istringstream in(vocab_text);
    std::string line;
    int32_t id = 0;
    while (std::getline(in, line)) ids[line] = id++;
    return ids;
}

std::string filler_word(int32_t i) {
    std::string w(3, 'a');
    w[0] = static_cast<char>('a' + (i / 26 / 26) % 26);
    w[1] = static_cast<char>('a' + (i / 26) % 26);
    w[2] = static_cast<char>('a' + i % 26);
    return w;
}

}  // namespace

SynthCorpus make_synth_corpus(int64_t target_tokens, int32_t n_entities,
                              uint64_t seed, bool plant_entities) {
    SynthCorpus out;

    constexpr int32_t kFillers = 320;
    std::vector<std::string> fillers;
    fillers.reserve(kFillers);
    for (int32_t i = 0; i < kFillers; ++i) fillers.push_back(filler_word(i));

    // Entity words start with 'z' so they can never collide with fillers;
    // even entities are one word, odd are two.
    std::vector<std::vector<std::string>> entity_words;
    std::vector<std::string> surface_of_entity;
    for (int32_t e = 0; e < n_entities; ++e) {
        std::vector<std::string> words{"ze" + std::to_string(e) + "a"};
        if (e % 2 == 1) words.push_back("ze" + std::to_string(e) + "b");
        std::string surface = words[0];
        for (size_t i = 1; i < words.size(); ++i) surface += " " + words[i];
        entity_words.push_back(std::move(words));
        surface_of_entity.push_back(std::move(surface));
    }
    out.entity_surfaces = surface_of_entity;
    std::sort(out.entity_surfaces.begin(), out.entity_surfaces.end());

    std::string vocab = small_vocab_text();
    for (const auto& f : fillers) vocab += f + "\n";
    for (const auto& words : entity_words) {
        for (const auto& w : words) vocab += w + "\n";
    }
    out.vocab_text = vocab;
    const auto ids = id_map(vocab);

    KeyedRng rng{seed, 0x46495854555245ULL};
    constexpr int64_t kDocWords = 900;
    std::string corpus_jsonl, annotations_jsonl;
    int64_t produced = 0;
    int32_t doc_index = 0;
    while (produced < target_tokens) {
        const std::string doc_id = "doc" + std::to_string(doc_index);
        std::string text;
        std::vector<int32_t> tok_ids;
        std::vector<json> anns;

        auto push_word = [&](const std::string& w) {
            if (!text.empty()) text += ' ';
            tok_ids.push_back(ids.at(w));
            text += w;
        };
        auto plant_entity = [&](int32_t e) {
            const auto& words = entity_words[static_cast<size_t>(e)];
            const auto tok_begin = static_cast<int32_t>(tok_ids.size());
            const size_t char_start = text.empty() ? 0 : text.size() + 1;
            for (const auto& w : words) push_word(w);
            out.mentions.push_back({doc_index, tok_begin,
                                    static_cast<int32_t>(words.size()),
                                    surface_of_entity[static_cast<size_t>(e)]});
            json a;
            a["doc_id"] = doc_id;
            a["start"] = char_start;
            a["end"] = text.size();
            a["text"] = text.substr(char_start);
            a["label"] = (e % 3 == 0) ? "DISEASE" : "CHEMICAL";
            anns.push_back(std::move(a));
        };

        int64_t gap = 0;
        while (static_cast<int64_t>(tok_ids.size()) < kDocWords) {
            if (plant_entities && gap <= 0) {
                const auto e = static_cast<int32_t>(rng.next_below(static_cast<uint64_t>(n_entities)));
                plant_entity(e);
                // Every so often a second mention lands immediately after the
                // first: the adjacency rule must have material to act on.
                if (rng.next_below(6) == 0) {
                    plant_entity(static_cast<int32_t>(
                        rng.next_below(static_cast<uint64_t>(n_entities))));
                }
                gap = 8 + static_cast<int64_t>(rng.next_below(12));
            } else {
                push_word(fillers[rng.next_below(kFillers)]);
                --gap;
            }
        }

        ordered_json doc;
        doc["doc_id"] = doc_id;
        doc["text"] = text;
        corpus_jsonl += doc.dump() + "\n";
        for (const auto& a : anns) annotations_jsonl += a.dump() + "\n";
        produced += static_cast<int64_t>(tok_ids.size());
        out.doc_token_ids.push_back(std::move(tok_ids));
        ++doc_index;
    }

    out.corpus_jsonl = std::move(corpus_jsonl);
    out.annotations_jsonl = std::move(annotations_jsonl);
    out.total_tokens = produced;
    return out;
}

CovidQaFixture make_covidqa_official_fixture() {
    CovidQaFixture out;
    constexpr int32_t kQuestions = 27;
    constexpr int32_t kPairs = 127;
    constexpr int32_t kArticles = 85;

    // 19 questions contribute 5 pairs, 8 contribute 4: 19*5 + 8*4 = 127.
    std::vector<int32_t> pairs_per_question(kQuestions, 4);
    for (int32_t q = 0; q < 19; ++q) pairs_per_question[static_cast<size_t>(q)] = 5;

    struct Pair {
        int32_t question = 0;
        int32_t doc = 0;
        std::string answer;
    };
    std::vector<Pair> pairs;
    int32_t serial = 0;
    for (int32_t q = 0; q < kQuestions; ++q) {
        for (int32_t k = 0; k < pairs_per_question[static_cast<size_t>(q)]; ++k) {
            Pair p;
            p.question = q;
            // First 85 pairs hit distinct articles so every article is used.
            p.doc = serial < kArticles ? serial : (serial * 13) % kArticles;
            p.answer = "signal " + std::to_string(serial) + " marker";
            pairs.push_back(std::move(p));
            ++serial;
        }
    }

    std::vector<std::string> doc_texts(kArticles, "Background context on the cohort under study.");
    for (const auto& p : pairs) {
        doc_texts[static_cast<size_t>(p.doc)] +=
            " The analysis found " + p.answer + " in patients.";
    }
    for (auto& t : doc_texts) t += " Concluding remark.";

    std::string corpus_jsonl;
    for (int32_t d = 0; d < kArticles; ++d) {
        ordered_json doc;
        doc["doc_id"] = "article_" + std::to_string(d);
        doc["text"] = doc_texts[static_cast<size_t>(d)];
        corpus_jsonl += doc.dump() + "\n";
    }

    // Official layout: categories hold sub_categories; each sub_category is
    // one question with its list of answer records.
    ordered_json root;
    root["categories"] = json::array();
    int32_t q = 0;
    for (int32_t c = 0; c < 3; ++c) {
        ordered_json category;
        category["name"] = "category " + std::to_string(c);
        category["sub_categories"] = json::array();
        for (int32_t s = 0; s < 9; ++s, ++q) {
            ordered_json sub;
            sub["nq_name"] = "what does study area " + std::to_string(q) + " report?";
            sub["kq_name"] = "area " + std::to_string(q);
            sub["answers"] = json::array();
            for (const auto& p : pairs) {
                if (p.question != q) continue;
                ordered_json a;
                a["id"] = "article_" + std::to_string(p.doc);
                a["exact_answer"] = p.answer;
                sub["answers"].push_back(std::move(a));
            }
            category["sub_categories"].push_back(std::move(sub));
        }
        root["categories"].push_back(std::move(category));
    }

    out.covidqa_json = root.dump();
    out.corpus_jsonl = std::move(corpus_jsonl);
    out.question_count = kQuestions;
    out.pair_count = kPairs;
    out.article_count = kArticles;
    return out;
}

}  // namespace bemask::testing
