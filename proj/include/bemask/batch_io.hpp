#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bemask/masking.hpp"

namespace bemask {

enum class BatchFileFormat { kJsonl, kBinary };

BatchFileFormat parse_batch_format(const std::string& name);

/// Everything a batch file header records. Serialization is timestamp-free
/// so reruns with identical inputs are bit-identical.
struct BatchFileHeader {
    MaskingConfig config;
    uint64_t vocab_hash = 0;
    uint64_t lexicon_hash = 0;  // 0 under STM
    int32_t ignore_sentinel = kIgnoreLabel;
    std::string provenance_json;  // optional, embedded verbatim

    std::string to_json() const;
    static BatchFileHeader from_json(const std::string& json);
};

/// JSONL layout: line 1 is the header object, every further line one
/// example record. Binary layout: magic "BMB1", u32 header length, header
/// JSON bytes, then length-prefixed little-endian records.
void write_batches(const std::string& path, BatchFileFormat format,
                   const BatchFileHeader& header,
                   const std::vector<MaskedBatch>& batches);

struct BatchFile {
    BatchFileHeader header;
    std::vector<MaskedExample> examples;
};

/// Reads either format (sniffed from the leading bytes).
BatchFile read_batches(const std::string& path);

}  // namespace bemask
