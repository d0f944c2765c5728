#include "bemask/masking.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "bemask/errors.hpp"
#include "bemask/log.hpp"

namespace bemask {

namespace {

// Key-domain tags keep the per-batch subset stream and the per-example
// masking streams disjoint.
constexpr uint64_t kSubsetStreamTag = 0x5355425345540001ULL;
constexpr uint64_t kExampleStreamTag = 0x4d41534b00000001ULL;

}  // namespace

const char* strategy_name(Strategy s) {
    return s == Strategy::kStm ? "stm" : "bem";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "stm") return Strategy::kStm;
    if (name == "bem") return Strategy::kBem;
    throw ConfigError("unknown strategy \"" + name + "\" (expected stm|bem)");
}

void MaskingConfig::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!(select_prob > 0.0 && select_prob <= 1.0)) {
        throw ConfigError("masking: select_prob must be in (0,1]");
    }
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw ConfigError("masking: rho must be in (0,1]");
    }
    if (!in_unit(mask_frac) || !in_unit(swap_frac) || !in_unit(keep_frac)) {
        throw ConfigError("masking: mask/swap/keep fractions must be in [0,1]");
    }
    if (std::abs(mask_frac + swap_frac + keep_frac - 1.0) > 1e-9) {
        throw ConfigError(
            "masking: mask_frac + swap_frac + keep_frac must equal 1");
    }
    if (window_len < 4) {
        throw ConfigError("masking: window_len must be at least 4");
    }
    if (batch_size < 1) {
        throw ConfigError("masking: batch_size must be positive");
    }
}

bool EntitySubset::contains(std::string_view surface) const {
    return std::binary_search(surfaces.begin(), surfaces.end(), surface);
}

namespace {

MaskedExample blank_example(const std::vector<int32_t>& window_ids,
                            const std::vector<uint8_t>& attention_mask,
                            const MaskingConfig& config, const Vocab& vocab) {
    if (static_cast<int32_t>(window_ids.size()) > config.window_len) {
        throw ConfigError("masking: window of " +
                          std::to_string(window_ids.size()) +
                          " tokens exceeds window_len " +
                          std::to_string(config.window_len));
    }
    if (window_ids.size() != attention_mask.size()) {
        throw ConfigError("masking: attention mask length mismatch");
    }
    for (int32_t id : window_ids) {
        if (id == vocab.mask_id) {
            throw ConfigError(
                "masking: input window already contains the mask token");
        }
    }
    MaskedExample ex;
    ex.input_ids = window_ids;
    ex.label_ids.assign(window_ids.size(), kIgnoreLabel);
    ex.attention_mask = attention_mask;
    return ex;
}

// Selection + replacement for one position. Shared by STM and by the
// optional BEM non-entity pass.
void stm_visit_position(MaskedExample& ex, size_t pos,
                        const MaskingConfig& config, const Vocab& vocab,
                        KeyedRng& rng) {
    if (rng.next_unit() >= config.select_prob) return;
    const int32_t original = ex.input_ids[pos];
    ex.label_ids[pos] = original;
    ex.masked_positions.push_back(static_cast<int32_t>(pos));
    const double outcome = rng.next_unit();
    if (outcome < config.mask_frac) {
        ex.input_ids[pos] = vocab.mask_id;
    } else if (outcome < config.mask_frac + config.swap_frac) {
        const auto n = static_cast<uint64_t>(vocab.non_special_ids.size());
        if (n > 1) {
            // Uniform over non-special ids excluding the original.
            uint64_t r = rng.next_below(n - 1);
            const int32_t skip = vocab.non_special_index[original];
            if (skip >= 0 && r >= static_cast<uint64_t>(skip)) ++r;
            ex.input_ids[pos] = vocab.non_special_ids[r];
        }
    }
    // else: keep unchanged (still labeled).
}

}  // namespace

MaskedExample stm_mask(const std::vector<int32_t>& window_ids,
                       const std::vector<uint8_t>& attention_mask,
                       const MaskingConfig& config, const Vocab& vocab,
                       KeyedRng& rng) {
    MaskedExample ex = blank_example(window_ids, attention_mask, config, vocab);
    for (size_t pos = 0; pos < ex.input_ids.size(); ++pos) {
        if (vocab.is_special(ex.input_ids[pos])) continue;
        stm_visit_position(ex, pos, config, vocab, rng);
    }
    return ex;
}

EntitySubset sample_entity_subset(const EntityLexicon& lexicon, double rho,
                                  int64_t batch_index, uint64_t seed) {
    if (lexicon.entities.empty()) {
        throw ConfigError(
            "entity subset: lexicon is empty; use --strategy stm or supply "
            "NER annotations via build-lexicon");
    }
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw ConfigError("entity subset: rho must be in (0,1]");
    }
    const int64_t total = lexicon.size();
    const int64_t want = std::max<int64_t>(
        1, std::llround(rho * static_cast<double>(total)));
    const int64_t size = std::min(want, total);

    // Partial Fisher-Yates over the lexicon's canonical (sorted) order.
    std::vector<int32_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    KeyedRng rng{seed, kSubsetStreamTag, static_cast<uint64_t>(batch_index)};
    for (int64_t k = 0; k < size; ++k) {
        const auto j = k + static_cast<int64_t>(
                               rng.next_below(static_cast<uint64_t>(total - k)));
        std::swap(order[k], order[j]);
    }

    EntitySubset subset;
    subset.batch_index = batch_index;
    subset.seed_used = seed;
    subset.surfaces.reserve(size);
    for (int64_t k = 0; k < size; ++k) {
        subset.surfaces.push_back(lexicon.entities[order[k]].surface);
    }
    std::sort(subset.surfaces.begin(), subset.surfaces.end());
    return subset;
}

MaskedExample bem_mask(const std::vector<int32_t>& window_ids,
                       const std::vector<uint8_t>& attention_mask,
                       const std::vector<WindowMention>& mentions,
                       const EntitySubset& subset, const MaskingConfig& config,
                       const Vocab& vocab, KeyedRng& rng) {
    MaskedExample ex = blank_example(window_ids, attention_mask, config, vocab);
    const auto len = static_cast<int32_t>(ex.input_ids.size());

    std::vector<const WindowMention*> ordered;
    ordered.reserve(mentions.size());
    for (const auto& m : mentions) {
        if (m.range.begin < 0 || m.range.end > len ||
            m.range.begin >= m.range.end) {
            throw ConfigError("bem_mask: mention token range [" +
                              std::to_string(m.range.begin) + "," +
                              std::to_string(m.range.end) +
                              ") out of window bounds");
        }
        ordered.push_back(&m);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const WindowMention* a, const WindowMention* b) {
                  return a->range.begin < b->range.begin;
              });

    // Left-to-right scan; keep the first of any token-adjacent pair.
    int32_t last_masked_end = -1;
    for (const WindowMention* m : ordered) {
        if (!subset.contains(m->surface)) continue;
        if (m->range.begin == last_masked_end) continue;  // adjacent: skip
        for (int32_t pos = m->range.begin; pos < m->range.end; ++pos) {
            ex.label_ids[pos] = ex.input_ids[pos];
            ex.input_ids[pos] = vocab.mask_id;
            ex.masked_positions.push_back(pos);
        }
        last_masked_end = m->range.end;
    }

    if (config.bem_stm_on_nonentities) {
        // Optional STM pass over tokens outside every mention (selected or
        // not), drawn from the same per-example stream.
        std::vector<bool> in_mention(ex.input_ids.size(), false);
        for (const WindowMention* m : ordered) {
            for (int32_t pos = m->range.begin; pos < m->range.end; ++pos) {
                in_mention[pos] = true;
            }
        }
        for (size_t pos = 0; pos < ex.input_ids.size(); ++pos) {
            if (in_mention[pos]) continue;
            if (vocab.is_special(ex.input_ids[pos])) continue;
            stm_visit_position(ex, pos, config, vocab, rng);
        }
        std::sort(ex.masked_positions.begin(), ex.masked_positions.end());
    }
    return ex;
}

std::vector<TokenWindow> make_windows(const Document& doc, int64_t doc_index,
                                      const std::vector<TokenSpan>& tokens,
                                      const MaskingConfig& config,
                                      const Vocab& vocab) {
    std::vector<TokenWindow> windows;
    const int32_t capacity = config.window_len - 2;
    const size_t total = tokens.size();
    for (size_t begin = 0; begin < total; begin += capacity) {
        const size_t end = std::min(total, begin + capacity);
        TokenWindow w;
        w.doc_id = doc.doc_id;
        w.doc_index = doc_index;
        w.first_token = begin;
        w.content_len = static_cast<int32_t>(end - begin);
        w.input_ids.reserve(config.window_len);
        w.input_ids.push_back(vocab.cls_id);
        for (size_t k = begin; k < end; ++k) {
            w.input_ids.push_back(tokens[k].token_id);
        }
        w.input_ids.push_back(vocab.sep_id);
        w.attention_mask.assign(w.input_ids.size(), 1);
        w.input_ids.resize(config.window_len, vocab.pad_id);
        w.attention_mask.resize(config.window_len, 0);
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<WindowMention> project_mentions(
    const std::vector<EntityMention>& mentions, const TokenWindow& window) {
    std::vector<WindowMention> out;
    const auto begin = static_cast<int32_t>(window.first_token);
    const int32_t end = begin + window.content_len;
    for (const auto& m : mentions) {
        if (m.token_range.begin < begin || m.token_range.end > end) continue;
        // +1 shifts past [CLS].
        out.push_back({m.entity_surface,
                       {m.token_range.begin - begin + 1,
                        m.token_range.end - begin + 1}});
    }
    return out;
}

std::vector<MaskedBatch> make_batches(const Corpus& corpus,
                                      const EntityLexicon* lexicon,
                                      const Vocab& vocab,
                                      const MaskingConfig& config, int workers,
                                      BatchRunStats* stats) {
    config.validate();
    const bool bem = config.strategy == Strategy::kBem;
    if (bem && (lexicon == nullptr || lexicon->entities.empty())) {
        throw ConfigError(
            "make_batches: BEM requires a nonempty entity lexicon; use "
            "--strategy stm or supply NER annotations");
    }

    // Tokenize and window every document, in corpus order. Mentions are
    // located once per document and projected into each window.
    std::vector<TokenWindow> windows;
    std::vector<std::vector<WindowMention>> window_mentions;
    for (size_t d = 0; d < corpus.docs.size(); ++d) {
        const Document& doc = corpus.docs[d];
        const auto tokens = tokenize(doc.text, vocab);
        auto doc_windows =
            make_windows(doc, static_cast<int64_t>(d), tokens, config, vocab);
        std::vector<EntityMention> mentions;
        if (bem) mentions = find_mentions(doc, *lexicon, tokens);
        for (auto& w : doc_windows) {
            if (bem) window_mentions.push_back(project_mentions(mentions, w));
            windows.push_back(std::move(w));
        }
    }

    const int64_t n_windows = static_cast<int64_t>(windows.size());
    const int64_t n_batches =
        (n_windows + config.batch_size - 1) / config.batch_size;
    std::vector<MaskedBatch> batches(n_batches);

    auto run_batch = [&](int64_t b) {
        MaskedBatch& batch = batches[b];
        batch.batch_index = b;
        if (bem) {
            batch.subset =
                sample_entity_subset(*lexicon, config.rho, b, config.seed);
        }
        const int64_t first = b * config.batch_size;
        const int64_t last = std::min(n_windows, first + config.batch_size);
        for (int64_t w = first; w < last; ++w) {
            KeyedRng rng{config.seed, kExampleStreamTag,
                         static_cast<uint64_t>(b),
                         static_cast<uint64_t>(w - first)};
            MaskedExample ex =
                bem ? bem_mask(windows[w].input_ids, windows[w].attention_mask,
                               window_mentions[w], batch.subset, config, vocab,
                               rng)
                    : stm_mask(windows[w].input_ids, windows[w].attention_mask,
                               config, vocab, rng);
            ex.batch_index = b;
            ex.example_index = w - first;
            batch.examples.push_back(std::move(ex));
        }
    };

    const int n_threads = std::max(1, workers);
    if (n_threads == 1 || n_batches <= 1) {
        for (int64_t b = 0; b < n_batches; ++b) run_batch(b);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int64_t> next{0};
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (int64_t b = next.fetch_add(1); b < n_batches;
                     b = next.fetch_add(1)) {
                    run_batch(b);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    if (stats != nullptr) {
        stats->documents = static_cast<int64_t>(corpus.docs.size());
        stats->windows = n_windows;
        stats->batches = n_batches;
        for (const auto& batch : batches) {
            int64_t in_batch = 0;
            for (const auto& ex : batch.examples) {
                in_batch += static_cast<int64_t>(ex.masked_positions.size());
            }
            stats->masked_positions += in_batch;
            if (in_batch == 0) ++stats->empty_batches;
        }
        if (stats->empty_batches > 0) {
            log::warn("make_batches: " + std::to_string(stats->empty_batches) +
                      " of " + std::to_string(stats->batches) +
                      " batches contain no masked positions");
        }
    }
    return batches;
}

}  // namespace bemask
