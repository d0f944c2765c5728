#include "bemask/batch_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bemask/errors.hpp"

namespace bemask {

namespace {

constexpr char kMagic[4] = {'B', 'M', 'B', '1'};

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_i32(std::string& out, int32_t v) {
    put_u32(out, static_cast<uint32_t>(v));
}

uint32_t get_u32(const std::string& in, size_t& pos) {
    if (pos + 4 > in.size()) throw FormatError("batch file: truncated record");
    uint32_t v = static_cast<uint8_t>(in[pos]) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(in[pos + 1])) << 8) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(in[pos + 2])) << 16) |
                 (static_cast<uint32_t>(static_cast<uint8_t>(in[pos + 3])) << 24);
    pos += 4;
    return v;
}

int32_t get_i32(const std::string& in, size_t& pos) {
    return static_cast<int32_t>(get_u32(in, pos));
}

nlohmann::ordered_json example_to_json(const MaskedExample& ex) {
    return {{"batch_index", ex.batch_index},
            {"example_index", ex.example_index},
            {"input_ids", ex.input_ids},
            {"label_ids", ex.label_ids},
            {"attention_mask", ex.attention_mask},
            {"masked_positions", ex.masked_positions}};
}

MaskedExample example_from_json(const nlohmann::json& obj) {
    MaskedExample ex;
    ex.batch_index = obj.at("batch_index").get<int64_t>();
    ex.example_index = obj.at("example_index").get<int64_t>();
    ex.input_ids = obj.at("input_ids").get<std::vector<int32_t>>();
    ex.label_ids = obj.at("label_ids").get<std::vector<int32_t>>();
    ex.attention_mask = obj.at("attention_mask").get<std::vector<uint8_t>>();
    ex.masked_positions =
        obj.at("masked_positions").get<std::vector<int32_t>>();
    return ex;
}

std::string example_to_binary(const MaskedExample& ex) {
    std::string body;
    put_u32(body, static_cast<uint32_t>(ex.batch_index));
    put_u32(body, static_cast<uint32_t>(ex.example_index));
    put_u32(body, static_cast<uint32_t>(ex.input_ids.size()));
    put_u32(body, static_cast<uint32_t>(ex.masked_positions.size()));
    for (int32_t v : ex.input_ids) put_i32(body, v);
    for (int32_t v : ex.label_ids) put_i32(body, v);
    for (uint8_t v : ex.attention_mask) body.push_back(static_cast<char>(v));
    for (int32_t v : ex.masked_positions) put_i32(body, v);
    std::string rec;
    put_u32(rec, static_cast<uint32_t>(body.size()));
    rec += body;
    return rec;
}

MaskedExample example_from_binary(const std::string& body) {
    size_t pos = 0;
    MaskedExample ex;
    ex.batch_index = get_u32(body, pos);
    ex.example_index = get_u32(body, pos);
    const uint32_t len = get_u32(body, pos);
    const uint32_t n_masked = get_u32(body, pos);
    ex.input_ids.resize(len);
    for (auto& v : ex.input_ids) v = get_i32(body, pos);
    ex.label_ids.resize(len);
    for (auto& v : ex.label_ids) v = get_i32(body, pos);
    ex.attention_mask.resize(len);
    for (auto& v : ex.attention_mask) {
        if (pos >= body.size()) throw FormatError("batch file: truncated record");
        v = static_cast<uint8_t>(body[pos++]);
    }
    ex.masked_positions.resize(n_masked);
    for (auto& v : ex.masked_positions) v = get_i32(body, pos);
    if (pos != body.size()) {
        throw FormatError("batch file: record has trailing bytes");
    }
    return ex;
}

}  // namespace

BatchFileFormat parse_batch_format(const std::string& name) {
    if (name == "jsonl") return BatchFileFormat::kJsonl;
    if (name == "binary") return BatchFileFormat::kBinary;
    throw ConfigError("unknown batch format \"" + name +
                      "\" (expected jsonl|binary)");
}

std::string BatchFileHeader::to_json() const {
    nlohmann::ordered_json h;
    h["format"] = "bemask-batches";
    h["version"] = 1;
    h["strategy"] = strategy_name(config.strategy);
    h["config"] = {{"select_prob", config.select_prob},
                   {"mask_frac", config.mask_frac},
                   {"swap_frac", config.swap_frac},
                   {"keep_frac", config.keep_frac},
                   {"rho", config.rho},
                   {"window_len", config.window_len},
                   {"batch_size", config.batch_size},
                   {"bem_stm_on_nonentities", config.bem_stm_on_nonentities}};
    h["seed"] = config.seed;
    h["ignore_sentinel"] = ignore_sentinel;
    h["vocab_hash"] = vocab_hash;
    h["lexicon_hash"] = lexicon_hash;
    if (!provenance_json.empty()) {
        h["provenance"] = nlohmann::ordered_json::parse(provenance_json);
    }
    return h.dump();
}

BatchFileHeader BatchFileHeader::from_json(const std::string& json) {
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("batch file: bad header: ") + e.what());
    }
    if (h.value("format", "") != "bemask-batches") {
        throw FormatError("batch file: not a bemask batch file");
    }
    BatchFileHeader out;
    out.config.strategy = parse_strategy(h.at("strategy").get<std::string>());
    const auto& c = h.at("config");
    out.config.select_prob = c.at("select_prob").get<double>();
    out.config.mask_frac = c.at("mask_frac").get<double>();
    out.config.swap_frac = c.at("swap_frac").get<double>();
    out.config.keep_frac = c.at("keep_frac").get<double>();
    out.config.rho = c.at("rho").get<double>();
    out.config.window_len = c.at("window_len").get<int32_t>();
    out.config.batch_size = c.at("batch_size").get<int32_t>();
    out.config.bem_stm_on_nonentities =
        c.at("bem_stm_on_nonentities").get<bool>();
    out.config.seed = h.at("seed").get<uint64_t>();
    out.ignore_sentinel = h.at("ignore_sentinel").get<int32_t>();
    out.vocab_hash = h.at("vocab_hash").get<uint64_t>();
    out.lexicon_hash = h.at("lexicon_hash").get<uint64_t>();
    if (h.contains("provenance")) {
        out.provenance_json = h["provenance"].dump();
    }
    return out;
}

void write_batches(const std::string& path, BatchFileFormat format,
                   const BatchFileHeader& header,
                   const std::vector<MaskedBatch>& batches) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("batch file: cannot write " + path);
    const std::string header_json = header.to_json();
    if (format == BatchFileFormat::kJsonl) {
        out << header_json << "\n";
        for (const auto& batch : batches) {
            for (const auto& ex : batch.examples) {
                out << example_to_json(ex).dump() << "\n";
            }
        }
    } else {
        out.write(kMagic, 4);
        std::string prefix;
        put_u32(prefix, static_cast<uint32_t>(header_json.size()));
        out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
        out.write(header_json.data(),
                  static_cast<std::streamsize>(header_json.size()));
        for (const auto& batch : batches) {
            for (const auto& ex : batch.examples) {
                const std::string rec = example_to_binary(ex);
                out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
            }
        }
    }
    if (!out) throw Error("batch file: write failed for " + path);
}

BatchFile read_batches(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("batch file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    BatchFile file;
    if (content.size() >= 4 && std::memcmp(content.data(), kMagic, 4) == 0) {
        size_t pos = 4;
        const uint32_t header_len = get_u32(content, pos);
        if (pos + header_len > content.size()) {
            throw FormatError("batch file: truncated header");
        }
        file.header =
            BatchFileHeader::from_json(content.substr(pos, header_len));
        pos += header_len;
        while (pos < content.size()) {
            const uint32_t rec_len = get_u32(content, pos);
            if (pos + rec_len > content.size()) {
                throw FormatError("batch file: truncated record");
            }
            file.examples.push_back(
                example_from_binary(content.substr(pos, rec_len)));
            pos += rec_len;
        }
    } else {
        size_t pos = 0;
        bool first = true;
        while (pos < content.size()) {
            size_t nl = content.find('\n', pos);
            std::string line = (nl == std::string::npos)
                                   ? content.substr(pos)
                                   : content.substr(pos, nl - pos);
            pos = (nl == std::string::npos) ? content.size() : nl + 1;
            if (line.empty()) continue;
            if (first) {
                file.header = BatchFileHeader::from_json(line);
                first = false;
                continue;
            }
            try {
                file.examples.push_back(
                    example_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(std::string("batch file: bad record: ") +
                                  e.what());
            }
        }
        if (first) throw FormatError("batch file: empty file " + path);
    }
    return file;
}

}  // namespace bemask
