#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bemask/corpus.hpp"
#include "bemask/entity_lexicon.hpp"
#include "bemask/rng.hpp"
#include "bemask/tokenizer.hpp"

namespace bemask {

enum class Strategy { kStm, kBem };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

/// Label value marking positions that carry no prediction target. Outside
/// every legal vocab id range and recorded in batch file headers.
constexpr int32_t kIgnoreLabel = -100;

/// Hyperparameters for batch production. validate() enforces the documented
/// invariants (mask/swap/keep summing to one, fractions in range).
struct MaskingConfig {
    Strategy strategy = Strategy::kStm;
    double select_prob = 0.15;  // STM: per-token selection probability
    double mask_frac = 0.80;    // of selected: replaced with [MASK]
    double swap_frac = 0.10;    // of selected: swapped to a random token
    double keep_frac = 0.10;    // of selected: left unchanged
    double rho = 0.30;          // BEM: fraction of lexicon sampled per batch
    int32_t window_len = 128;   // tokens per example, [CLS]/[SEP] included
    int32_t batch_size = 16;    // examples per batch
    uint64_t seed = 0;
    /// BEM only: additionally apply STM-style masking to tokens outside
    /// every entity mention. Off by default (entity-only masking).
    bool bem_stm_on_nonentities = false;

    void validate() const;  // throws ConfigError
};

/// The entity subset E_s drawn for one batch.
struct EntitySubset {
    std::vector<std::string> surfaces;  // sorted
    int64_t batch_index = 0;
    uint64_t seed_used = 0;

    bool contains(std::string_view surface) const;
};

/// One masked training example. input_ids/label_ids/attention_mask all have
/// length window_len; label_ids is kIgnoreLabel except at prediction
/// positions, which are also listed in masked_positions (ascending).
struct MaskedExample {
    std::vector<int32_t> input_ids;
    std::vector<int32_t> label_ids;
    std::vector<uint8_t> attention_mask;
    std::vector<int32_t> masked_positions;
    int64_t batch_index = 0;
    int64_t example_index = 0;  // position within the batch
};

struct MaskedBatch {
    int64_t batch_index = 0;
    std::vector<MaskedExample> examples;
    /// BEM: the subset applied to this batch (empty surfaces under STM).
    EntitySubset subset;
};

/// An unmasked model window: [CLS] content [SEP] [PAD]... plus the mapping
/// back to its source document needed to place entity mentions.
struct TokenWindow {
    std::vector<int32_t> input_ids;
    std::vector<uint8_t> attention_mask;
    std::string doc_id;
    int64_t doc_index = 0;
    size_t first_token = 0;    // index into the document token sequence
    int32_t content_len = 0;   // real tokens between [CLS] and [SEP]
};

/// Mention projected into window coordinates (token indices into input_ids).
struct WindowMention {
    std::string surface;
    TokenRange range;
};

/// Standard masking over one window. Every non-special token is selected
/// independently with probability select_prob; a selected token is replaced
/// with [MASK] (mask_frac), swapped to a uniformly random non-special token
/// that differs from the original (swap_frac), or kept (keep_frac). Labels
/// carry the original id at every selected position.
///
/// Draw discipline: one selection draw per non-special token in order, then
/// per selected token one outcome draw and, for swaps, one target draw.
MaskedExample stm_mask(const std::vector<int32_t>& window_ids,
                       const std::vector<uint8_t>& attention_mask,
                       const MaskingConfig& config, const Vocab& vocab,
                       KeyedRng& rng);

/// Uniform sample without replacement of max(1, round(rho * |E|)) surfaces.
/// The draw is a pure function of (seed, batch_index): replaying a run gives
/// identical subsets while distinct batches draw (almost surely) different
/// ones. Throws ConfigError on an empty lexicon.
EntitySubset sample_entity_subset(const EntityLexicon& lexicon, double rho,
                                  int64_t batch_index, uint64_t seed);

/// Entity-aware masking over one window. Mentions whose surface is in the
/// subset are fully replaced with [MASK] and labeled, scanning left to
/// right; a selected mention token-adjacent to the previously masked one is
/// skipped and left intact. Tokens outside selected mentions are never
/// altered (unless config.bem_stm_on_nonentities adds an STM pass over
/// tokens outside every mention).
MaskedExample bem_mask(const std::vector<int32_t>& window_ids,
                       const std::vector<uint8_t>& attention_mask,
                       const std::vector<WindowMention>& mentions,
                       const EntitySubset& subset, const MaskingConfig& config,
                       const Vocab& vocab, KeyedRng& rng);

/// Windowing of one document's token sequence: consecutive chunks of
/// (window_len - 2) content tokens wrapped in [CLS]/[SEP], last chunk
/// padded. Returns .first_token so mentions can be projected per window.
std::vector<TokenWindow> make_windows(const Document& doc, int64_t doc_index,
                                      const std::vector<TokenSpan>& tokens,
                                      const MaskingConfig& config,
                                      const Vocab& vocab);

/// Intersect document-level mentions with one window, shifting token indices
/// into window coordinates (+1 for [CLS]). Mentions straddling the window
/// boundary are dropped: a partial substitution would break the contract
/// that selected mentions are masked whole.
std::vector<WindowMention> project_mentions(
    const std::vector<EntityMention>& mentions, const TokenWindow& window);

struct BatchRunStats {
    int64_t documents = 0;
    int64_t windows = 0;
    int64_t batches = 0;
    int64_t masked_positions = 0;
    int64_t empty_batches = 0;  // batches with zero masked positions
};

/// Produce the full deterministic batch stream for a corpus. Worker count
/// only parallelizes the work: all randomness is keyed by
/// (seed, batch_index, example_index), and batches are returned in order,
/// so the result is identical for any workers value. For BEM a fresh
/// subset is drawn per batch and applied to every example in it.
std::vector<MaskedBatch> make_batches(const Corpus& corpus,
                                      const EntityLexicon* lexicon,
                                      const Vocab& vocab,
                                      const MaskingConfig& config,
                                      int workers = 1,
                                      BatchRunStats* stats = nullptr);

}  // namespace bemask
