#include "bemask/toy_mlm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "bemask/errors.hpp"
#include "bemask/log.hpp"
#include "bemask/rng.hpp"
#include <json.hpp>

namespace bemask {

namespace {

using nlohmann::json;

constexpr uint64_t kInitStreamTag = 0x544f594d4c4d0001ULL;

void check_dims(int32_t vocab_size, int32_t dim, int32_t hidden) {
    if (vocab_size < 2 || dim < 1 || hidden < 1) {
        throw ConfigError("toy-mlm dimensions must satisfy vocab_size >= 2, dim >= 1, hidden >= 1");
    }
}

// Forward state for one prediction position, kept around for backprop.
struct PosCache {
    int32_t pos = 0;
    int32_t gold = 0;
    std::vector<double> u;      // concat(context, embedding at pos), 2d
    std::vector<double> h;      // tanh activations, hidden
    std::vector<double> probs;  // softmax over vocab
    double nll = 0.0;
};

struct ContextCache {
    std::vector<double> mean;        // d, zero vector when empty
    std::vector<int32_t> token_ids;  // contributors, one entry per position
};

ContextCache build_context(const ToyModel& model, const std::vector<int32_t>& input_ids,
                           const std::vector<uint8_t>& attention_mask, int32_t mask_token_id) {
    ContextCache ctx;
    ctx.mean.assign(static_cast<size_t>(model.dim), 0.0);
    const size_t n = input_ids.size();
    if (attention_mask.size() != n) {
        throw ConsistencyError("attention_mask length does not match input_ids length");
    }
    for (size_t i = 0; i < n; ++i) {
        if (attention_mask[i] == 0 || input_ids[i] == mask_token_id) continue;
        const int32_t id = input_ids[i];
        if (id < 0 || id >= model.vocab_size) {
            throw ConsistencyError("token id " + std::to_string(id) + " outside model vocabulary");
        }
        ctx.token_ids.push_back(id);
        const double* row = model.embedding.data() + static_cast<size_t>(id) * model.dim;
        for (int32_t k = 0; k < model.dim; ++k) ctx.mean[static_cast<size_t>(k)] += row[k];
    }
    if (!ctx.token_ids.empty()) {
        const double inv = 1.0 / static_cast<double>(ctx.token_ids.size());
        for (double& v : ctx.mean) v *= inv;
    }
    return ctx;
}

PosCache position_forward(const ToyModel& model, const ContextCache& ctx,
                          const std::vector<int32_t>& input_ids, int32_t pos, int32_t gold) {
    const int32_t d = model.dim;
    const int32_t h = model.hidden;
    const int32_t v = model.vocab_size;
    PosCache out;
    out.pos = pos;
    out.gold = gold;

    out.u.resize(static_cast<size_t>(2 * d));
    std::copy(ctx.mean.begin(), ctx.mean.end(), out.u.begin());
    const int32_t own = input_ids[static_cast<size_t>(pos)];
    if (own < 0 || own >= v) {
        throw ConsistencyError("token id " + std::to_string(own) + " outside model vocabulary");
    }
    const double* own_row = model.embedding.data() + static_cast<size_t>(own) * d;
    std::copy(own_row, own_row + d, out.u.begin() + d);

    out.h.resize(static_cast<size_t>(h));
    for (int32_t j = 0; j < h; ++j) {
        double a = model.b1[static_cast<size_t>(j)];
        for (int32_t i = 0; i < 2 * d; ++i) {
            a += out.u[static_cast<size_t>(i)] * model.w1[static_cast<size_t>(i) * h + j];
        }
        out.h[static_cast<size_t>(j)] = std::tanh(a);
    }

    std::vector<double> z(static_cast<size_t>(v));
    for (int32_t t = 0; t < v; ++t) {
        double acc = model.b2[static_cast<size_t>(t)];
        for (int32_t j = 0; j < h; ++j) {
            acc += out.h[static_cast<size_t>(j)] * model.w2[static_cast<size_t>(j) * v + t];
        }
        z[static_cast<size_t>(t)] = acc;
    }

    // Log-sum-exp for a stable NLL; probs kept for the backward pass.
    double zmax = z[0];
    for (double zv : z) zmax = std::max(zmax, zv);
    double sum = 0.0;
    for (double zv : z) sum += std::exp(zv - zmax);
    const double lse = zmax + std::log(sum);

    out.probs.resize(static_cast<size_t>(v));
    for (int32_t t = 0; t < v; ++t) {
        out.probs[static_cast<size_t>(t)] = std::exp(z[static_cast<size_t>(t)] - lse);
    }
    out.nll = lse - z[static_cast<size_t>(out.gold)];
    return out;
}

std::vector<int32_t> labeled_positions(const MaskedExample& ex) {
    std::vector<int32_t> out;
    for (size_t i = 0; i < ex.label_ids.size(); ++i) {
        if (ex.label_ids[i] != kIgnoreLabel) out.push_back(static_cast<int32_t>(i));
    }
    return out;
}

struct Gradients {
    std::vector<double> embedding, w1, b1, w2, b2;

    explicit Gradients(const ToyModel& m)
        : embedding(m.embedding.size(), 0.0),
          w1(m.w1.size(), 0.0),
          b1(m.b1.size(), 0.0),
          w2(m.w2.size(), 0.0),
          b2(m.b2.size(), 0.0) {}

    double& flat(const ToyModel& m, int64_t idx);
};

double& Gradients::flat(const ToyModel& m, int64_t idx) {
    int64_t n = static_cast<int64_t>(m.embedding.size());
    if (idx < n) return embedding[static_cast<size_t>(idx)];
    idx -= n;
    n = static_cast<int64_t>(m.w1.size());
    if (idx < n) return w1[static_cast<size_t>(idx)];
    idx -= n;
    n = static_cast<int64_t>(m.b1.size());
    if (idx < n) return b1[static_cast<size_t>(idx)];
    idx -= n;
    n = static_cast<int64_t>(m.w2.size());
    if (idx < n) return w2[static_cast<size_t>(idx)];
    idx -= n;
    return b2[static_cast<size_t>(idx)];
}

// Accumulates d(loss_scale * nll) into grads for one position.
void position_backward(const ToyModel& model, const ContextCache& ctx,
                       const std::vector<int32_t>& input_ids, const PosCache& cache,
                       double loss_scale, Gradients& grads) {
    const int32_t d = model.dim;
    const int32_t h = model.hidden;
    const int32_t v = model.vocab_size;

    // dz = scale * (softmax - onehot(gold))
    std::vector<double> dz(static_cast<size_t>(v));
    for (int32_t t = 0; t < v; ++t) dz[static_cast<size_t>(t)] = loss_scale * cache.probs[static_cast<size_t>(t)];
    dz[static_cast<size_t>(cache.gold)] -= loss_scale;

    std::vector<double> dh(static_cast<size_t>(h), 0.0);
    for (int32_t j = 0; j < h; ++j) {
        const double hj = cache.h[static_cast<size_t>(j)];
        double acc = 0.0;
        for (int32_t t = 0; t < v; ++t) {
            const double g = dz[static_cast<size_t>(t)];
            grads.w2[static_cast<size_t>(j) * v + t] += hj * g;
            acc += model.w2[static_cast<size_t>(j) * v + t] * g;
        }
        dh[static_cast<size_t>(j)] = acc;
    }
    for (int32_t t = 0; t < v; ++t) grads.b2[static_cast<size_t>(t)] += dz[static_cast<size_t>(t)];

    // Through tanh.
    std::vector<double> da(static_cast<size_t>(h));
    for (int32_t j = 0; j < h; ++j) {
        const double hj = cache.h[static_cast<size_t>(j)];
        da[static_cast<size_t>(j)] = dh[static_cast<size_t>(j)] * (1.0 - hj * hj);
    }

    std::vector<double> du(static_cast<size_t>(2 * d), 0.0);
    for (int32_t i = 0; i < 2 * d; ++i) {
        const double ui = cache.u[static_cast<size_t>(i)];
        double acc = 0.0;
        for (int32_t j = 0; j < h; ++j) {
            const double g = da[static_cast<size_t>(j)];
            grads.w1[static_cast<size_t>(i) * h + j] += ui * g;
            acc += model.w1[static_cast<size_t>(i) * h + j] * g;
        }
        du[static_cast<size_t>(i)] = acc;
    }
    for (int32_t j = 0; j < h; ++j) grads.b1[static_cast<size_t>(j)] += da[static_cast<size_t>(j)];

    // Embedding at the position itself (second half of u).
    const int32_t own = input_ids[static_cast<size_t>(cache.pos)];
    double* own_grad = grads.embedding.data() + static_cast<size_t>(own) * d;
    for (int32_t k = 0; k < d; ++k) own_grad[k] += du[static_cast<size_t>(d + k)];

    // Context mean distributes evenly over contributors; a token appearing
    // twice in the context gets two shares.
    if (!ctx.token_ids.empty()) {
        const double inv = 1.0 / static_cast<double>(ctx.token_ids.size());
        for (int32_t id : ctx.token_ids) {
            double* row = grads.embedding.data() + static_cast<size_t>(id) * d;
            for (int32_t k = 0; k < d; ++k) row[k] += du[static_cast<size_t>(k)] * inv;
        }
    }
}

// Sum of NLLs over the example's labeled positions; optionally fills caches.
double example_forward(const ToyModel& model, const MaskedExample& ex, int32_t mask_token_id,
                       const std::vector<int32_t>& positions, std::vector<PosCache>* caches,
                       ContextCache* ctx_out) {
    ContextCache ctx = build_context(model, ex.input_ids, ex.attention_mask, mask_token_id);
    double sum = 0.0;
    for (int32_t pos : positions) {
        if (pos < 0 || static_cast<size_t>(pos) >= ex.input_ids.size()) {
            throw ConsistencyError("labeled position out of range");
        }
        const int32_t gold = ex.label_ids[static_cast<size_t>(pos)];
        if (gold < 0 || gold >= model.vocab_size) {
            throw ConsistencyError("label id " + std::to_string(gold) + " outside model vocabulary");
        }
        PosCache pc = position_forward(model, ctx, ex.input_ids, pos, gold);
        sum += pc.nll;
        if (caches != nullptr) caches->push_back(std::move(pc));
    }
    if (ctx_out != nullptr) *ctx_out = std::move(ctx);
    return sum;
}

void sgd_step(ToyModel& model, const Gradients& grads, double lr) {
    auto apply = [lr](std::vector<double>& p, const std::vector<double>& g) {
        for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    };
    apply(model.embedding, grads.embedding);
    apply(model.w1, grads.w1);
    apply(model.b1, grads.b1);
    apply(model.w2, grads.w2);
    apply(model.b2, grads.b2);
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

uint32_t get_u32(const std::string& buf, size_t& off) {
    if (off + 4 > buf.size()) throw FormatError("truncated model file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[off + i])) << (8 * i);
    off += 4;
    return v;
}

double get_f64(const std::string& buf, size_t& off) {
    if (off + 8 > buf.size()) throw FormatError("truncated model file");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<uint8_t>(buf[off + i])) << (8 * i);
    off += 8;
    return std::bit_cast<double>(bits);
}

constexpr char kModelMagic[4] = {'B', 'M', 'T', 'M'};

}  // namespace

int64_t ToyModel::parameter_count() const {
    return static_cast<int64_t>(embedding.size()) + static_cast<int64_t>(w1.size()) +
           static_cast<int64_t>(b1.size()) + static_cast<int64_t>(w2.size()) +
           static_cast<int64_t>(b2.size());
}

double& ToyModel::parameter(int64_t flat_index) {
    if (flat_index < 0 || flat_index >= parameter_count()) {
        throw ConfigError("parameter index out of range");
    }
    int64_t idx = flat_index;
    int64_t n = static_cast<int64_t>(embedding.size());
    if (idx < n) return embedding[static_cast<size_t>(idx)];
    idx -= n;
    n = static_cast<int64_t>(w1.size());
    if (idx < n) return w1[static_cast<size_t>(idx)];
    idx -= n;
    n = static_cast<int64_t>(b1.size());
    if (idx < n) return b1[static_cast<size_t>(idx)];
    idx -= n;
    n = static_cast<int64_t>(w2.size());
    if (idx < n) return w2[static_cast<size_t>(idx)];
    idx -= n;
    return b2[static_cast<size_t>(idx)];
}

ToyModel make_toy_model(int32_t vocab_size, int32_t dim, int32_t hidden, double learning_rate,
                        int32_t epochs, double init_scale, uint64_t seed) {
    check_dims(vocab_size, dim, hidden);
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
        throw ConfigError("init scale must be finite and positive");
    }

    ToyModel m;
    m.vocab_size = vocab_size;
    m.dim = dim;
    m.hidden = hidden;
    m.learning_rate = learning_rate;
    m.epochs = epochs;
    m.init_scale = init_scale;
    m.seed = seed;

    m.embedding.resize(static_cast<size_t>(vocab_size) * dim);
    m.w1.resize(static_cast<size_t>(2 * dim) * hidden);
    m.b1.resize(static_cast<size_t>(hidden));
    m.w2.resize(static_cast<size_t>(hidden) * vocab_size);
    m.b2.resize(static_cast<size_t>(vocab_size));

    KeyedRng rng{seed, kInitStreamTag};
    auto fill = [&rng, init_scale](std::vector<double>& p) {
        for (double& v : p) v = (rng.next_unit() * 2.0 - 1.0) * init_scale;
    };
    fill(m.embedding);
    fill(m.w1);
    fill(m.b1);
    fill(m.w2);
    fill(m.b2);
    return m;
}

std::vector<std::vector<double>> forward(const ToyModel& model,
                                         const std::vector<int32_t>& input_ids,
                                         const std::vector<uint8_t>& attention_mask,
                                         const std::vector<int32_t>& positions,
                                         int32_t mask_token_id) {
    check_dims(model.vocab_size, model.dim, model.hidden);
    const ContextCache ctx = build_context(model, input_ids, attention_mask, mask_token_id);
    std::vector<std::vector<double>> out;
    out.reserve(positions.size());
    for (int32_t pos : positions) {
        if (pos < 0 || static_cast<size_t>(pos) >= input_ids.size()) {
            throw ConfigError("forward position out of range");
        }
        // Gold id 0 is a placeholder; only the distribution is returned.
        PosCache pc = position_forward(model, ctx, input_ids, pos, 0);
        out.push_back(std::move(pc.probs));
    }
    return out;
}

TrainResult train(ToyModel& model, const std::vector<MaskedExample>& examples,
                  int32_t mask_token_id) {
    check_dims(model.vocab_size, model.dim, model.hidden);
    if (examples.empty()) throw ConfigError("training set is empty");

    // Examples arrive ordered by batch; consecutive runs of the same
    // batch_index form one gradient step.
    std::vector<std::pair<size_t, size_t>> batches;
    size_t start = 0;
    for (size_t i = 1; i <= examples.size(); ++i) {
        if (i == examples.size() || examples[i].batch_index != examples[start].batch_index) {
            batches.emplace_back(start, i);
            start = i;
        }
    }

    TrainResult result;
    for (int32_t epoch = 0; epoch < model.epochs; ++epoch) {
        double epoch_nll = 0.0;
        int64_t epoch_positions = 0;
        for (const auto& [lo, hi] : batches) {
            Gradients grads(model);
            double batch_nll = 0.0;
            int64_t batch_positions = 0;
            std::vector<std::vector<PosCache>> caches(hi - lo);
            std::vector<ContextCache> ctxs(hi - lo);
            for (size_t e = lo; e < hi; ++e) {
                const auto positions = labeled_positions(examples[e]);
                batch_positions += static_cast<int64_t>(positions.size());
                batch_nll += example_forward(model, examples[e], mask_token_id, positions,
                                             &caches[e - lo], &ctxs[e - lo]);
            }
            if (batch_positions == 0) continue;

            const double loss = batch_nll / static_cast<double>(batch_positions);
            if (!std::isfinite(loss)) {
                throw Error("training diverged: non-finite loss in epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(examples[lo].batch_index) +
                            " (learning_rate=" + std::to_string(model.learning_rate) +
                            "); lower the learning rate");
            }
            const double scale = 1.0 / static_cast<double>(batch_positions);
            for (size_t e = lo; e < hi; ++e) {
                for (const PosCache& pc : caches[e - lo]) {
                    position_backward(model, ctxs[e - lo], examples[e].input_ids, pc, scale, grads);
                }
            }
            sgd_step(model, grads, model.learning_rate);
            epoch_nll += batch_nll;
            epoch_positions += batch_positions;
        }
        if (epoch_positions == 0) {
            throw ConfigError("training set has no labeled positions");
        }
        result.epoch_loss.push_back(epoch_nll / static_cast<double>(epoch_positions));
        result.total_positions = epoch_positions;
        log::debug("epoch " + std::to_string(epoch) + " loss " +
                   std::to_string(result.epoch_loss.back()));
    }
    return result;
}

double grad_check(const ToyModel& model, const MaskedExample& example, int32_t mask_token_id) {
    check_dims(model.vocab_size, model.dim, model.hidden);
    const auto positions = labeled_positions(example);
    if (positions.empty()) return 0.0;  // loss is identically zero, so is the gradient
    const double scale = 1.0 / static_cast<double>(positions.size());

    Gradients grads(model);
    {
        std::vector<PosCache> caches;
        ContextCache ctx;
        example_forward(model, example, mask_token_id, positions, &caches, &ctx);
        for (const PosCache& pc : caches) {
            position_backward(model, ctx, example.input_ids, pc, scale, grads);
        }
    }

    ToyModel probe = model;
    const double step = 1e-5;
    double worst = 0.0;
    const int64_t n = probe.parameter_count();
    for (int64_t i = 0; i < n; ++i) {
        double& p = probe.parameter(i);
        const double saved = p;
        p = saved + step;
        const double up = example_forward(probe, example, mask_token_id, positions, nullptr, nullptr) * scale;
        p = saved - step;
        const double down = example_forward(probe, example, mask_token_id, positions, nullptr, nullptr) * scale;
        p = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double analytic = const_cast<Gradients&>(grads).flat(model, i);
        const double denom = std::max(1e-8, std::abs(numeric) + std::abs(analytic));
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
    return worst;
}

EvalResult perplexity(const ToyModel& model, const std::vector<MaskedExample>& examples,
                      int32_t mask_token_id) {
    check_dims(model.vocab_size, model.dim, model.hidden);
    double total = 0.0;
    int64_t count = 0;
    for (const MaskedExample& ex : examples) {
        const auto positions = labeled_positions(ex);
        if (positions.empty()) continue;
        total += example_forward(model, ex, mask_token_id, positions, nullptr, nullptr);
        count += static_cast<int64_t>(positions.size());
    }
    if (count == 0) {
        throw ConfigError("perplexity undefined: no labeled positions in the eval set");
    }
    EvalResult out;
    out.cross_entropy = total / static_cast<double>(count);
    out.perplexity = std::exp(out.cross_entropy);
    out.masked_position_count = count;
    return out;
}

void save_model(const ToyModel& model, const std::string& path, const std::string& provenance_json) {
    check_dims(model.vocab_size, model.dim, model.hidden);
    json header = {
        {"format", "bemask-toy-model"},
        {"version", 1},
        {"vocab_size", model.vocab_size},
        {"dim", model.dim},
        {"hidden", model.hidden},
        {"learning_rate", model.learning_rate},
        {"epochs", model.epochs},
        {"init_scale", model.init_scale},
        {"seed", model.seed},
    };
    if (!provenance_json.empty()) header["provenance"] = json::parse(provenance_json);
    const std::string header_str = header.dump();

    std::string buf;
    buf.append(kModelMagic, 4);
    put_u32(buf, static_cast<uint32_t>(header_str.size()));
    buf.append(header_str);
    auto dump = [&buf](const std::vector<double>& p) {
        for (double v : p) put_f64(buf, v);
    };
    dump(model.embedding);
    dump(model.w1);
    dump(model.b1);
    dump(model.w2);
    dump(model.b2);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("short write to " + path);
}

ToyModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 8 || std::memcmp(buf.data(), kModelMagic, 4) != 0) {
        throw FormatError(path + ": not a toy-mlm model file");
    }
    size_t off = 4;
    const uint32_t header_len = get_u32(buf, off);
    if (off + header_len > buf.size()) throw FormatError("truncated model header");
    json header;
    try {
        header = json::parse(buf.substr(off, header_len));
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad model header: ") + e.what());
    }
    off += header_len;
    if (header.value("format", "") != "bemask-toy-model" || header.value("version", 0) != 1) {
        throw FormatError(path + ": unsupported model format or version");
    }

    ToyModel m;
    m.vocab_size = header.at("vocab_size").get<int32_t>();
    m.dim = header.at("dim").get<int32_t>();
    m.hidden = header.at("hidden").get<int32_t>();
    m.learning_rate = header.at("learning_rate").get<double>();
    m.epochs = header.at("epochs").get<int32_t>();
    m.init_scale = header.at("init_scale").get<double>();
    m.seed = header.at("seed").get<uint64_t>();
    check_dims(m.vocab_size, m.dim, m.hidden);

    auto slurp = [&buf, &off](std::vector<double>& p, size_t count) {
        p.resize(count);
        for (size_t i = 0; i < count; ++i) p[i] = get_f64(buf, off);
    };
    slurp(m.embedding, static_cast<size_t>(m.vocab_size) * m.dim);
    slurp(m.w1, static_cast<size_t>(2 * m.dim) * m.hidden);
    slurp(m.b1, static_cast<size_t>(m.hidden));
    slurp(m.w2, static_cast<size_t>(m.hidden) * m.vocab_size);
    slurp(m.b2, static_cast<size_t>(m.vocab_size));
    if (off != buf.size()) throw FormatError(path + ": trailing bytes after parameter dump");
    return m;
}

}  // namespace bemask
