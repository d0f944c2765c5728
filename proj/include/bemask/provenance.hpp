#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace bemask {

/// What produced an artifact: the subcommand, its effective flag values,
/// the seed, and a content hash per input file. Deliberately excludes
/// timestamps and host details so identical runs write identical bytes.
struct RunConfig {
    std::string tool_version = "0.1.0";
    std::string subcommand;
    uint64_t seed = 0;
    std::map<std::string, std::string> flags;         // flag name -> rendered value
    std::map<std::string, std::string> input_hashes;  // path -> fnv1a64 hex of contents

    void add_input(const std::string& path);
    std::string to_json_string() const;
};

/// FNV-1a over the raw bytes of a file, rendered as 16 hex digits.
std::string hash_file_hex(const std::string& path);
std::string hash_bytes_hex(const std::string& bytes);

}  // namespace bemask
