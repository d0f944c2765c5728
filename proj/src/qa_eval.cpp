#include "bemask/qa_eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "bemask/errors.hpp"
#include "bemask/log.hpp"

namespace bemask {

std::string normalize_answer(std::string_view text) {
    std::string collapsed;
    collapsed.reserve(text.size());
    bool in_space = true;
    for (char c : text) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                           c == '\f' || c == '\v';
        if (space) {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
            continue;
        }
        in_space = false;
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        collapsed.push_back(c);
    }
    size_t begin = 0;
    size_t end = collapsed.size();
    auto strippable = [&](char c) {
        return c == ' ' || std::ispunct(static_cast<unsigned char>(c)) != 0;
    };
    while (begin < end && strippable(collapsed[begin])) ++begin;
    while (end > begin && strippable(collapsed[end - 1])) --end;
    return collapsed.substr(begin, end - begin);
}

RankedPrediction canonicalize(const RankedPrediction& prediction) {
    struct Best {
        std::string raw;
        double score;
    };
    std::unordered_map<std::string, Best> best;
    for (const auto& c : prediction.candidates) {
        const std::string key = normalize_answer(c.text);
        auto it = best.find(key);
        if (it == best.end()) {
            best.emplace(key, Best{c.text, c.score});
            continue;
        }
        if (c.score > it->second.score ||
            (c.score == it->second.score && c.text < it->second.raw)) {
            it->second = Best{c.text, c.score};
        }
    }
    RankedPrediction out;
    out.key = prediction.key;
    out.candidates.reserve(best.size());
    for (const auto& [norm, b] : best) {
        (void)norm;
        out.candidates.push_back({b.raw, b.score});
    }
    std::sort(out.candidates.begin(), out.candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return normalize_answer(a.text) < normalize_answer(b.text);
              });
    return out;
}

std::vector<RankedPrediction> aggregate_passages(
    const std::vector<RankedPrediction>& pair_predictions) {
    std::map<std::string, RankedPrediction> pooled;  // key order = output order
    for (const auto& pair : pair_predictions) {
        RankedPrediction& slot = pooled[pair.key];
        slot.key = pair.key;
        slot.candidates.insert(slot.candidates.end(), pair.candidates.begin(),
                               pair.candidates.end());
    }
    std::vector<RankedPrediction> out;
    out.reserve(pooled.size());
    for (auto& [key, merged] : pooled) {
        (void)key;
        out.push_back(canonicalize(merged));
    }
    return out;
}

int64_t rank_of_first_gold(const RankedPrediction& prediction,
                           const std::set<std::string>& golds) {
    for (size_t i = 0; i < prediction.candidates.size(); ++i) {
        if (golds.count(normalize_answer(prediction.candidates[i].text))) {
            return static_cast<int64_t>(i) + 1;
        }
    }
    return 0;
}

namespace {

// rank of first gold per question (gold-map keys), 0 when absent.
std::map<std::string, int64_t> first_gold_ranks(
    const std::vector<RankedPrediction>& rankings, const GoldMap& golds) {
    if (golds.empty()) {
        throw ConfigError("metrics: empty question set is undefined");
    }
    std::map<std::string, int64_t> ranks;
    for (const auto& [key, gold] : golds) {
        (void)gold;
        ranks[key] = 0;
    }
    for (const auto& prediction : rankings) {
        auto it = golds.find(prediction.key);
        if (it == golds.end()) {
            throw ConsistencyError("metrics: prediction key \"" +
                                   prediction.key + "\" has no gold set");
        }
        ranks[prediction.key] = rank_of_first_gold(prediction, it->second);
    }
    return ranks;
}

}  // namespace

double mrr(const std::vector<RankedPrediction>& rankings, const GoldMap& golds,
           std::optional<int64_t> cutoff) {
    const auto ranks = first_gold_ranks(rankings, golds);
    double sum = 0.0;
    for (const auto& [key, rank] : ranks) {
        (void)key;
        if (rank <= 0) continue;
        if (cutoff && rank > *cutoff) continue;
        sum += 1.0 / static_cast<double>(rank);
    }
    return sum / static_cast<double>(ranks.size());
}

double precision_at_1(const std::vector<RankedPrediction>& rankings,
                      const GoldMap& golds) {
    const auto ranks = first_gold_ranks(rankings, golds);
    int64_t hit = 0;
    for (const auto& [key, rank] : ranks) {
        (void)key;
        if (rank == 1) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

double recall_at_3(const std::vector<RankedPrediction>& rankings,
                   const GoldMap& golds) {
    const auto ranks = first_gold_ranks(rankings, golds);
    int64_t hit = 0;
    for (const auto& [key, rank] : ranks) {
        (void)key;
        if (rank >= 1 && rank <= 3) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

std::pair<double, double> strict_lenient_acc(
    const std::vector<RankedPrediction>& rankings, const GoldMap& golds) {
    const auto ranks = first_gold_ranks(rankings, golds);
    int64_t strict = 0;
    int64_t lenient = 0;
    for (const auto& [key, rank] : ranks) {
        (void)key;
        if (rank == 1) ++strict;
        if (rank >= 1 && rank <= 5) ++lenient;
    }
    const auto n = static_cast<double>(ranks.size());
    return {static_cast<double>(strict) / n, static_cast<double>(lenient) / n};
}

QaDataset parse_dataset(const std::string& name) {
    if (name == "covidqa") return QaDataset::kCovidQa;
    if (name == "bioasq") return QaDataset::kBioasq;
    throw ConfigError("unknown dataset \"" + name +
                      "\" (expected covidqa|bioasq)");
}

MetricsReport evaluate(QaDataset dataset,
                       const std::vector<RankedPrediction>& rankings,
                       const GoldMap& golds,
                       std::optional<int64_t> mrr_cutoff_override) {
    std::vector<RankedPrediction> canonical;
    canonical.reserve(rankings.size());
    for (const auto& r : rankings) canonical.push_back(canonicalize(r));

    MetricsReport report;
    report.question_count = static_cast<int64_t>(golds.size());
    report.per_question = first_gold_ranks(canonical, golds);

    auto check_unit = [](const char* name, double v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvariantError(std::string("metrics: ") + name +
                                 " outside [0,1]");
        }
    };
    if (dataset == QaDataset::kCovidQa) {
        report.dataset = "covidqa";
        report.p_at_1 = precision_at_1(canonical, golds);
        report.r_at_3 = recall_at_3(canonical, golds);
        report.mrr_value = mrr(canonical, golds, mrr_cutoff_override);
        check_unit("p_at_1", *report.p_at_1);
        check_unit("r_at_3", *report.r_at_3);
        check_unit("mrr", *report.mrr_value);
        if (*report.p_at_1 > *report.r_at_3) {
            throw InvariantError("metrics: P@1 > R@3");
        }
    } else {
        report.dataset = "bioasq";
        const auto [sacc, lacc] = strict_lenient_acc(canonical, golds);
        report.strict_acc = sacc;
        report.lenient_acc = lacc;
        report.mrr_value = mrr(
            canonical, golds,
            mrr_cutoff_override ? mrr_cutoff_override : std::optional<int64_t>(5));
        check_unit("strict_acc", sacc);
        check_unit("lenient_acc", lacc);
        check_unit("mrr", *report.mrr_value);
        if (sacc > lacc) throw InvariantError("metrics: SAcc > LAcc");
    }
    return report;
}

std::string MetricsReport::to_json(const std::string& provenance_json) const {
    nlohmann::ordered_json root;
    root["format"] = "bemask-metrics";
    root["version"] = 1;
    root["dataset"] = dataset;
    root["normalization"] = kNormalizationVersion;
    if (!provenance_json.empty()) {
        root["provenance"] = nlohmann::ordered_json::parse(provenance_json);
    }
    auto metrics = nlohmann::ordered_json::object();
    if (p_at_1) metrics["p_at_1"] = *p_at_1;
    if (r_at_3) metrics["r_at_3"] = *r_at_3;
    if (mrr_value) metrics["mrr"] = *mrr_value;
    if (strict_acc) metrics["strict_acc"] = *strict_acc;
    if (lenient_acc) metrics["lenient_acc"] = *lenient_acc;
    root["metrics"] = metrics;
    root["question_count"] = question_count;
    auto per_q = nlohmann::ordered_json::object();
    for (const auto& [qid, rank] : per_question) {
        if (rank > 0) {
            per_q[qid] = rank;
        } else {
            per_q[qid] = nullptr;
        }
    }
    root["per_question"] = per_q;
    return root.dump(2);
}

std::vector<RankedPrediction> parse_predictions(const std::string& content) {
    std::vector<RankedPrediction> out;
    size_t pos = 0;
    int line_no = 0;
    while (pos < content.size()) {
        size_t nl = content.find('\n', pos);
        std::string line = (nl == std::string::npos)
                               ? content.substr(pos)
                               : content.substr(pos, nl - pos);
        pos = (nl == std::string::npos) ? content.size() : nl + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("predictions: line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        RankedPrediction pred;
        if (obj.contains("qid") && obj["qid"].is_string()) {
            pred.key = obj["qid"].get<std::string>();
        } else if (obj.contains("group_id") && obj["group_id"].is_string()) {
            pred.key = obj["group_id"].get<std::string>();
        } else {
            throw FormatError("predictions: line " + std::to_string(line_no) +
                              ": missing qid/group_id");
        }
        if (!obj.contains("candidates") || !obj["candidates"].is_array()) {
            throw FormatError("predictions: line " + std::to_string(line_no) +
                              ": missing candidates array");
        }
        for (const auto& c : obj["candidates"]) {
            Candidate cand;
            if (c.contains("text") && c["text"].is_string()) {
                cand.text = c["text"].get<std::string>();
            } else if (c.contains("sentence_index") &&
                       c["sentence_index"].is_number_integer()) {
                cand.text = std::to_string(c["sentence_index"].get<int64_t>());
            } else {
                throw FormatError("predictions: line " +
                                  std::to_string(line_no) +
                                  ": candidate needs text or sentence_index");
            }
            if (!c.contains("score") || !c["score"].is_number()) {
                throw FormatError("predictions: line " +
                                  std::to_string(line_no) +
                                  ": candidate needs a numeric score");
            }
            cand.score = c["score"].get<double>();
            pred.candidates.push_back(std::move(cand));
        }
        out.push_back(std::move(pred));
    }
    return out;
}

std::vector<RankedPrediction> load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("predictions: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_predictions(buf.str());
}

GoldMap parse_golds(const std::string& content) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("golds: not valid JSON: ") + e.what());
    }
    const nlohmann::json* table = nullptr;
    if (doc.is_object() && doc.contains("golds") && doc["golds"].is_object()) {
        table = &doc["golds"];
    } else if (doc.is_object() && doc.contains("gold_answers") &&
               doc["gold_answers"].is_object()) {
        table = &doc["gold_answers"];  // as embedded in converted SQuAD files
    } else if (doc.is_object()) {
        table = &doc;
    } else {
        throw FormatError("golds: expected an object of key -> variants");
    }
    GoldMap out;
    for (auto it = table->begin(); it != table->end(); ++it) {
        std::set<std::string>& golds = out[it.key()];
        if (!it.value().is_array()) {
            throw FormatError("golds: value for \"" + it.key() +
                              "\" must be an array");
        }
        for (const auto& v : it.value()) {
            if (v.is_string()) {
                golds.insert(normalize_answer(v.get<std::string>()));
            } else if (v.is_number_integer()) {
                golds.insert(std::to_string(v.get<int64_t>()));
            } else {
                throw FormatError("golds: variants must be strings or ints");
            }
        }
    }
    return out;
}

GoldMap load_golds(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("golds: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_golds(buf.str());
}

}  // namespace bemask
