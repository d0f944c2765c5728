#include "bemask/provenance.hpp"

#include <fstream>
#include <iterator>

#include "bemask/errors.hpp"
#include "bemask/rng.hpp"
#include <json.hpp>

namespace bemask {

namespace {

std::string to_hex16(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace

std::string hash_bytes_hex(const std::string& bytes) {
    return to_hex16(fnv1a(bytes));
}

std::string hash_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path + " for hashing");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hash_bytes_hex(bytes);
}

void RunConfig::add_input(const std::string& path) {
    input_hashes[path] = hash_file_hex(path);
}

std::string RunConfig::to_json_string() const {
    nlohmann::ordered_json j;
    j["tool"] = "bemask";
    j["tool_version"] = tool_version;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["flags"] = flags;          // std::map keeps flag order stable
    j["inputs"] = input_hashes;  // path -> content hash
    return j.dump();
}

}  // namespace bemask
