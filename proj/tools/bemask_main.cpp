// bemask: command-line front end for the masking/QA toolkit.
//
// Subcommands: build-lexicon, mask, convert-bioasq, eval, train-toy,
// perplexity. Every output artifact embeds the run configuration and input
// content hashes; nothing embeds a timestamp, so identical runs write
// identical bytes. Exit codes: 0 success, 2 usage or input error, 3 internal
// invariant violation.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bemask/batch_io.hpp"
#include "bemask/corpus.hpp"
#include "bemask/entity_lexicon.hpp"
#include "bemask/errors.hpp"
#include "bemask/log.hpp"
#include "bemask/masking.hpp"
#include "bemask/provenance.hpp"
#include "bemask/qa_datasets.hpp"
#include "bemask/qa_eval.hpp"
#include "bemask/tokenizer.hpp"
#include "bemask/toy_mlm.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string num(double v) { return json(v).dump(); }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bemask::Error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw bemask::Error("short write to " + path);
}

// ---------------------------------------------------------------- lexicon

struct BuildLexiconOpts {
    std::string annotations, vocab, output, corpus;
    int64_t min_count = 1;
    std::vector<std::string> labels;
};

int cmd_build_lexicon(const BuildLexiconOpts& o) {
    const bemask::Vocab vocab = bemask::load_vocab(o.vocab);

    bemask::Corpus corpus;
    bemask::LexiconOptions opts;
    opts.min_count = o.min_count;
    opts.label_allowlist = o.labels;
    if (!o.corpus.empty()) {
        corpus = bemask::load_corpus(o.corpus);
        opts.corpus = &corpus;
    }

    const auto records = bemask::load_annotations(o.annotations);
    const bemask::EntityLexicon lexicon = bemask::build_lexicon(records, vocab, opts);

    bemask::RunConfig run;
    run.subcommand = "build-lexicon";
    run.flags["annotations"] = o.annotations;
    run.flags["vocab"] = o.vocab;
    run.flags["min_count"] = std::to_string(o.min_count);
    if (!o.corpus.empty()) run.flags["corpus"] = o.corpus;
    for (const auto& l : o.labels) {
        auto& v = run.flags["labels"];
        if (!v.empty()) v += ",";
        v += l;
    }
    run.add_input(o.annotations);
    run.add_input(o.vocab);
    if (!o.corpus.empty()) run.add_input(o.corpus);

    bemask::save_lexicon(lexicon, o.output, run.to_json_string());

    std::map<std::string, int64_t> histogram;
    for (const auto& e : lexicon.entities) ++histogram[e.label];
    ordered_json summary;
    summary["entities"] = lexicon.entities.size();
    summary["annotations"] = records.size();
    summary["labels"] = histogram;
    std::cout << summary.dump() << "\n";
    bemask::log::info("lexicon with " + std::to_string(lexicon.entities.size()) +
                      " entities -> " + o.output);
    return 0;
}

// ------------------------------------------------------------------- mask

struct MaskOpts {
    std::string corpus, vocab, lexicon, output;
    std::string strategy = "stm";
    std::string format = "jsonl";
    bemask::MaskingConfig config;
    int workers = 1;
};

int cmd_mask(const MaskOpts& o) {
    bemask::MaskingConfig config = o.config;
    config.strategy = bemask::parse_strategy(o.strategy);
    config.validate();
    if (config.strategy == bemask::Strategy::kBem && o.lexicon.empty()) {
        throw bemask::ConfigError("--strategy bem requires --lexicon");
    }

    const bemask::Vocab vocab = bemask::load_vocab(o.vocab);
    const bemask::Corpus corpus = bemask::load_corpus(o.corpus);

    bemask::EntityLexicon lexicon;
    const bemask::EntityLexicon* lexicon_ptr = nullptr;
    if (!o.lexicon.empty()) {
        lexicon = bemask::load_lexicon(o.lexicon);
        lexicon_ptr = &lexicon;
    }

    bemask::BatchRunStats stats;
    const auto batches =
        bemask::make_batches(corpus, lexicon_ptr, vocab, config, o.workers, &stats);

    bemask::RunConfig run;
    run.subcommand = "mask";
    run.seed = config.seed;
    run.flags["corpus"] = o.corpus;
    run.flags["vocab"] = o.vocab;
    if (!o.lexicon.empty()) run.flags["lexicon"] = o.lexicon;
    run.flags["strategy"] = o.strategy;
    run.flags["format"] = o.format;
    run.flags["select_prob"] = num(config.select_prob);
    run.flags["rho"] = num(config.rho);
    run.flags["window_len"] = std::to_string(config.window_len);
    run.flags["batch_size"] = std::to_string(config.batch_size);
    // workers is deliberately absent: outputs are worker-invariant, and
    // recording it would break byte-identity across equivalent runs.
    if (config.bem_stm_on_nonentities) run.flags["stm_on_nonentities"] = "true";
    run.add_input(o.corpus);
    run.add_input(o.vocab);
    if (!o.lexicon.empty()) run.add_input(o.lexicon);

    bemask::BatchFileHeader header;
    header.config = config;
    header.vocab_hash = vocab.content_hash;
    header.lexicon_hash = lexicon_ptr ? lexicon.content_hash() : 0;
    header.provenance_json = run.to_json_string();
    bemask::write_batches(o.output, bemask::parse_batch_format(o.format), header, batches);

    ordered_json summary;
    summary["documents"] = stats.documents;
    summary["windows"] = stats.windows;
    summary["batches"] = stats.batches;
    summary["masked_positions"] = stats.masked_positions;
    summary["empty_batches"] = stats.empty_batches;
    std::cout << summary.dump() << "\n";
    bemask::log::info(std::to_string(stats.batches) + " batches (" +
                      std::to_string(stats.masked_positions) + " masked positions) -> " + o.output);
    return 0;
}

// --------------------------------------------------------- convert-bioasq

struct ConvertOpts {
    std::string input, output, sidecar;
    bool keep_unanswerable = false;
    int32_t max_context_chars = 4096;
};

int cmd_convert_bioasq(const ConvertOpts& o) {
    bemask::BioasqOptions opts;
    opts.keep_unanswerable = o.keep_unanswerable;
    opts.max_context_chars = o.max_context_chars;
    const auto conversion = bemask::convert_bioasq(o.input, opts);

    bemask::RunConfig run;
    run.subcommand = "convert-bioasq";
    run.flags["input"] = o.input;
    run.flags["keep_unanswerable"] = o.keep_unanswerable ? "true" : "false";
    run.flags["max_context_chars"] = std::to_string(o.max_context_chars);
    run.add_input(o.input);

    const std::string sidecar = o.sidecar.empty() ? o.output + ".groups.jsonl" : o.sidecar;
    bemask::write_squad_json(conversion, o.output, sidecar, o.keep_unanswerable,
                             run.to_json_string());

    ordered_json summary;
    summary["factoid_questions"] = conversion.factoid_questions;
    summary["examples"] = conversion.examples.size();
    summary["skipped_no_passage"] = conversion.skipped_no_passage;
    summary["skipped_non_factoid"] = conversion.skipped_non_factoid;
    summary["flagged_pairs"] = conversion.flagged_pairs;
    std::cout << summary.dump() << "\n";
    bemask::log::info(std::to_string(conversion.examples.size()) + " pairs -> " + o.output);
    return 0;
}

// ------------------------------------------------------------------- eval

struct EvalOpts {
    std::string dataset, predictions, golds, sidecar, output;
    int64_t mrr_cutoff = -1;  // -1: dataset default
};

std::map<std::string, std::string> load_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bemask::Error("cannot open " + path);
    std::map<std::string, std::string> qid_to_group;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw bemask::FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        qid_to_group[j.at("qid").get<std::string>()] = j.at("group_id").get<std::string>();
    }
    return qid_to_group;
}

int cmd_eval(const EvalOpts& o) {
    const bemask::QaDataset dataset = bemask::parse_dataset(o.dataset);
    std::vector<bemask::RankedPrediction> predictions = bemask::load_predictions(o.predictions);
    const bemask::GoldMap golds = bemask::load_golds(o.golds);

    if (!o.sidecar.empty()) {
        const auto qid_to_group = load_sidecar(o.sidecar);
        for (auto& p : predictions) {
            const auto it = qid_to_group.find(p.key);
            if (it == qid_to_group.end()) {
                throw bemask::ConsistencyError("prediction key '" + p.key +
                                               "' missing from sidecar " + o.sidecar);
            }
            p.key = it->second;
        }
    }
    const auto rankings = bemask::aggregate_passages(predictions);

    std::optional<int64_t> cutoff;
    if (o.mrr_cutoff >= 1) cutoff = o.mrr_cutoff;
    const bemask::MetricsReport report = bemask::evaluate(dataset, rankings, golds, cutoff);

    bemask::RunConfig run;
    run.subcommand = "eval";
    run.flags["dataset"] = o.dataset;
    run.flags["predictions"] = o.predictions;
    run.flags["golds"] = o.golds;
    if (!o.sidecar.empty()) run.flags["sidecar"] = o.sidecar;
    if (o.mrr_cutoff >= 1) run.flags["mrr_cutoff"] = std::to_string(o.mrr_cutoff);
    run.add_input(o.predictions);
    run.add_input(o.golds);
    if (!o.sidecar.empty()) run.add_input(o.sidecar);

    const std::string rendered = report.to_json(run.to_json_string());
    std::cout << rendered << "\n";
    if (!o.output.empty()) write_text_file(o.output, rendered + "\n");
    return 0;
}

// -------------------------------------------------------------- train-toy

struct TrainToyOpts {
    std::string batches, vocab, output;
    int32_t dim = 16;
    int32_t hidden = 32;
    double lr = 0.1;
    int32_t epochs = 5;
    double init_scale = 0.05;
    uint64_t seed = 0;
};

void check_vocab_hash(const bemask::BatchFileHeader& header, const bemask::Vocab& vocab,
                      const std::string& batches_path, const std::string& vocab_path) {
    if (header.vocab_hash != vocab.content_hash) {
        throw bemask::ConsistencyError(batches_path + " was produced with a different vocabulary than " +
                                       vocab_path);
    }
}

int cmd_train_toy(const TrainToyOpts& o) {
    const bemask::Vocab vocab = bemask::load_vocab(o.vocab);
    const bemask::BatchFile file = bemask::read_batches(o.batches);
    check_vocab_hash(file.header, vocab, o.batches, o.vocab);

    bemask::ToyModel model = bemask::make_toy_model(vocab.size(), o.dim, o.hidden, o.lr,
                                                    o.epochs, o.init_scale, o.seed);
    const bemask::TrainResult result = bemask::train(model, file.examples, vocab.mask_id);

    bemask::RunConfig run;
    run.subcommand = "train-toy";
    run.seed = o.seed;
    run.flags["batches"] = o.batches;
    run.flags["vocab"] = o.vocab;
    run.flags["dim"] = std::to_string(o.dim);
    run.flags["hidden"] = std::to_string(o.hidden);
    run.flags["lr"] = num(o.lr);
    run.flags["epochs"] = std::to_string(o.epochs);
    run.flags["init_scale"] = num(o.init_scale);
    run.add_input(o.batches);
    run.add_input(o.vocab);
    bemask::save_model(model, o.output, run.to_json_string());

    ordered_json summary;
    summary["epoch_loss"] = result.epoch_loss;
    summary["masked_positions"] = result.total_positions;
    std::cout << summary.dump() << "\n";
    bemask::log::info("final training loss " + std::to_string(result.epoch_loss.back()) +
                      " -> " + o.output);
    return 0;
}

// ------------------------------------------------------------- perplexity

struct PerplexityOpts {
    std::string model, batches, vocab, output;
    // Sweep mode: regenerate BEM batches per rho, train a fresh model on
    // them, and report its perplexity. Keyed only by (seed, rho), so any
    // sweep containing a given rho emits the identical row for it.
    std::string rho_sweep, corpus, lexicon;
    int32_t window_len = 128;
    int32_t batch_size = 16;
    int32_t dim = 16;
    int32_t hidden = 32;
    double lr = 0.1;
    int32_t epochs = 5;
    double init_scale = 0.05;
    uint64_t seed = 0;
    int workers = 1;
};

std::vector<double> parse_sweep(const std::string& text) {
    double start = 0, stop = 0, step = 0;
    char colon1 = 0, colon2 = 0, tail = 0;
    std::istringstream in(text);
    if (!(in >> start >> colon1 >> stop >> colon2 >> step) || colon1 != ':' || colon2 != ':' ||
        (in >> tail)) {
        throw bemask::ConfigError("--rho-sweep expects start:stop:step, got '" + text + "'");
    }
    if (!(step > 0) || !(start > 0) || start > stop || stop > 1.0) {
        throw bemask::ConfigError("--rho-sweep requires 0 < start <= stop <= 1 and step > 0");
    }
    std::vector<double> rhos;
    for (int i = 0;; ++i) {
        const double raw = start + step * i;
        if (raw > stop + 1e-12) break;
        // Snap to 9 decimals so 0.1+0.2 style drift cannot leak into output.
        rhos.push_back(std::llround(raw * 1e9) / 1e9);
    }
    return rhos;
}

int cmd_perplexity(const PerplexityOpts& o) {
    const bemask::Vocab vocab = bemask::load_vocab(o.vocab);

    if (o.rho_sweep.empty()) {
        if (o.model.empty() || o.batches.empty()) {
            throw bemask::ConfigError("perplexity needs --model and --batches (or --rho-sweep)");
        }
        const bemask::ToyModel model = bemask::load_model(o.model);
        const bemask::BatchFile file = bemask::read_batches(o.batches);
        check_vocab_hash(file.header, vocab, o.batches, o.vocab);
        if (model.vocab_size != vocab.size()) {
            throw bemask::ConsistencyError("model vocab_size " + std::to_string(model.vocab_size) +
                                           " does not match vocabulary size " +
                                           std::to_string(vocab.size()));
        }
        const bemask::EvalResult result = bemask::perplexity(model, file.examples, vocab.mask_id);

        bemask::RunConfig run;
        run.subcommand = "perplexity";
        run.flags["model"] = o.model;
        run.flags["batches"] = o.batches;
        run.flags["vocab"] = o.vocab;
        run.add_input(o.model);
        run.add_input(o.batches);
        run.add_input(o.vocab);

        ordered_json report;
        report["format"] = "bemask-perplexity";
        report["version"] = 1;
        report["cross_entropy"] = result.cross_entropy;
        report["perplexity"] = result.perplexity;
        report["masked_positions"] = result.masked_position_count;
        report["provenance"] = json::parse(run.to_json_string());
        const std::string rendered = report.dump();
        std::cout << rendered << "\n";
        if (!o.output.empty()) write_text_file(o.output, rendered + "\n");
        return 0;
    }

    // Sweep mode.
    if (!o.model.empty() || !o.batches.empty()) {
        throw bemask::ConfigError("--rho-sweep trains per-rho models; drop --model/--batches");
    }
    if (o.corpus.empty() || o.lexicon.empty()) {
        throw bemask::ConfigError("--rho-sweep requires --corpus and --lexicon");
    }
    const std::vector<double> rhos = parse_sweep(o.rho_sweep);
    const bemask::Corpus corpus = bemask::load_corpus(o.corpus);
    const bemask::EntityLexicon lexicon = bemask::load_lexicon(o.lexicon);

    std::string csv = "rho,perplexity,masked_positions\n";
    for (const double rho : rhos) {
        bemask::MaskingConfig config;
        config.strategy = bemask::Strategy::kBem;
        config.rho = rho;
        config.window_len = o.window_len;
        config.batch_size = o.batch_size;
        config.seed = o.seed;
        config.validate();

        const auto batches =
            bemask::make_batches(corpus, &lexicon, vocab, config, o.workers, nullptr);
        std::vector<bemask::MaskedExample> examples;
        for (const auto& b : batches) {
            examples.insert(examples.end(), b.examples.begin(), b.examples.end());
        }

        bemask::ToyModel model = bemask::make_toy_model(vocab.size(), o.dim, o.hidden, o.lr,
                                                        o.epochs, o.init_scale, o.seed);
        bemask::train(model, examples, vocab.mask_id);
        const bemask::EvalResult result = bemask::perplexity(model, examples, vocab.mask_id);
        csv += num(rho) + "," + num(result.perplexity) + "," +
               std::to_string(result.masked_position_count) + "\n";
        bemask::log::info("rho " + num(rho) + ": perplexity " + num(result.perplexity) +
                          " over " + std::to_string(result.masked_position_count) + " positions");
    }

    if (o.output.empty()) {
        std::cout << csv;
    } else {
        write_text_file(o.output, csv);
        // CSV cannot carry the provenance object; it goes to a sidecar.
        bemask::RunConfig run;
        run.subcommand = "perplexity";
        run.seed = o.seed;
        run.flags["rho_sweep"] = o.rho_sweep;
        run.flags["corpus"] = o.corpus;
        run.flags["lexicon"] = o.lexicon;
        run.flags["vocab"] = o.vocab;
        run.flags["window_len"] = std::to_string(o.window_len);
        run.flags["batch_size"] = std::to_string(o.batch_size);
        run.flags["dim"] = std::to_string(o.dim);
        run.flags["hidden"] = std::to_string(o.hidden);
        run.flags["lr"] = num(o.lr);
        run.flags["epochs"] = std::to_string(o.epochs);
        run.flags["init_scale"] = num(o.init_scale);
        run.add_input(o.corpus);
        run.add_input(o.lexicon);
        run.add_input(o.vocab);
        write_text_file(o.output + ".provenance.json", run.to_json_string() + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bemask: entity-aware masking, QA dataset conversion, and evaluation toolkit"};
    app.require_subcommand(1);

    std::string log_level;
    app.add_option("--log-level", log_level, "debug|info|warn|error (also: BEMASK_LOG)");

    BuildLexiconOpts lex;
    auto* lex_cmd = app.add_subcommand("build-lexicon", "Build an entity lexicon from annotations");
    lex_cmd->add_option("--annotations", lex.annotations, "Annotation JSONL")->required();
    lex_cmd->add_option("--vocab", lex.vocab, "Vocabulary file")->required();
    lex_cmd->add_option("--output", lex.output, "Lexicon JSON to write")->required();
    lex_cmd->add_option("--corpus", lex.corpus, "Corpus JSONL for span cross-checking");
    lex_cmd->add_option("--min-count", lex.min_count, "Minimum mention count");
    lex_cmd->add_option("--labels", lex.labels, "Label allow-list (repeatable or comma-separated)")
        ->delimiter(',');

    MaskOpts mask;
    auto* mask_cmd = app.add_subcommand("mask", "Produce deterministic masked batches");
    mask_cmd->add_option("--corpus", mask.corpus, "Corpus JSONL")->required();
    mask_cmd->add_option("--vocab", mask.vocab, "Vocabulary file")->required();
    mask_cmd->add_option("--strategy", mask.strategy, "stm|bem")->required();
    mask_cmd->add_option("--lexicon", mask.lexicon, "Entity lexicon (required for bem)");
    mask_cmd->add_option("--output", mask.output, "Batch file to write")->required();
    mask_cmd->add_option("--format", mask.format, "jsonl|binary");
    mask_cmd->add_option("--select-prob", mask.config.select_prob, "STM selection probability");
    mask_cmd->add_option("--rho", mask.config.rho, "BEM entity subset proportion");
    mask_cmd->add_option("--window-len", mask.config.window_len, "Tokens per example");
    mask_cmd->add_option("--batch-size", mask.config.batch_size, "Examples per batch");
    mask_cmd->add_option("--seed", mask.config.seed, "Random seed");
    mask_cmd->add_option("--workers", mask.workers, "Worker threads (output-invariant)");
    mask_cmd->add_flag("--stm-on-nonentities", mask.config.bem_stm_on_nonentities,
                       "BEM: also apply standard masking outside entity mentions");

    ConvertOpts convert;
    auto* conv_cmd = app.add_subcommand("convert-bioasq", "Convert BioASQ factoid questions to SQuAD format");
    conv_cmd->add_option("--input", convert.input, "BioASQ JSON")->required();
    conv_cmd->add_option("--output", convert.output, "SQuAD JSON to write")->required();
    conv_cmd->add_option("--sidecar", convert.sidecar, "qid->group_id JSONL (default: <output>.groups.jsonl)");
    conv_cmd->add_flag("--keep-unanswerable", convert.keep_unanswerable,
                       "Keep pairs whose context lacks the answer");
    conv_cmd->add_option("--max-context-chars", convert.max_context_chars,
                         "Split contexts longer than this");

    EvalOpts eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against golds");
    eval_cmd->add_option("--dataset", eval.dataset, "covidqa|bioasq")->required();
    eval_cmd->add_option("--predictions", eval.predictions, "Predictions JSONL")->required();
    eval_cmd->add_option("--golds", eval.golds, "Gold answers JSON")->required();
    eval_cmd->add_option("--sidecar", eval.sidecar, "qid->group_id map; aggregates passages");
    eval_cmd->add_option("--mrr-cutoff", eval.mrr_cutoff, "Rank cutoff for MRR (>= 1)");
    eval_cmd->add_option("--output", eval.output, "Report JSON to write");

    TrainToyOpts train;
    auto* train_cmd = app.add_subcommand("train-toy", "Train the toy masked-token predictor");
    train_cmd->add_option("--batches", train.batches, "Batch file")->required();
    train_cmd->add_option("--vocab", train.vocab, "Vocabulary file")->required();
    train_cmd->add_option("--output", train.output, "Model checkpoint to write")->required();
    train_cmd->add_option("--dim", train.dim, "Embedding width");
    train_cmd->add_option("--hidden", train.hidden, "Hidden width");
    train_cmd->add_option("--lr", train.lr, "Learning rate");
    train_cmd->add_option("--epochs", train.epochs, "Training epochs");
    train_cmd->add_option("--init-scale", train.init_scale, "Uniform init half-width");
    train_cmd->add_option("--seed", train.seed, "Random seed");

    PerplexityOpts ppl;
    auto* ppl_cmd = app.add_subcommand("perplexity", "Perplexity of a model, or a rho sweep");
    ppl_cmd->add_option("--model", ppl.model, "Model checkpoint");
    ppl_cmd->add_option("--batches", ppl.batches, "Eval batch file");
    ppl_cmd->add_option("--vocab", ppl.vocab, "Vocabulary file")->required();
    ppl_cmd->add_option("--output", ppl.output, "Report JSON (plain) or CSV (sweep)");
    ppl_cmd->add_option("--rho-sweep", ppl.rho_sweep, "start:stop:step, e.g. 0.1:1.0:0.1");
    ppl_cmd->add_option("--corpus", ppl.corpus, "Corpus JSONL (sweep)");
    ppl_cmd->add_option("--lexicon", ppl.lexicon, "Entity lexicon (sweep)");
    ppl_cmd->add_option("--window-len", ppl.window_len, "Tokens per example (sweep)");
    ppl_cmd->add_option("--batch-size", ppl.batch_size, "Examples per batch (sweep)");
    ppl_cmd->add_option("--dim", ppl.dim, "Embedding width (sweep)");
    ppl_cmd->add_option("--hidden", ppl.hidden, "Hidden width (sweep)");
    ppl_cmd->add_option("--lr", ppl.lr, "Learning rate (sweep)");
    ppl_cmd->add_option("--epochs", ppl.epochs, "Training epochs (sweep)");
    ppl_cmd->add_option("--init-scale", ppl.init_scale, "Uniform init half-width (sweep)");
    ppl_cmd->add_option("--seed", ppl.seed, "Random seed (sweep)");
    ppl_cmd->add_option("--workers", ppl.workers, "Worker threads (sweep)");

    try {
        app.parse(argc, argv);
        if (!log_level.empty() && !bemask::log::set_threshold(log_level)) {
            throw bemask::ConfigError("unknown log level '" + log_level + "'");
        }

        if (app.got_subcommand(lex_cmd)) return cmd_build_lexicon(lex);
        if (app.got_subcommand(mask_cmd)) return cmd_mask(mask);
        if (app.got_subcommand(conv_cmd)) return cmd_convert_bioasq(convert);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(eval);
        if (app.got_subcommand(train_cmd)) return cmd_train_toy(train);
        if (app.got_subcommand(ppl_cmd)) return cmd_perplexity(ppl);
        return 2;  // unreachable: require_subcommand(1)
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const bemask::InvariantError& e) {
        std::cerr << "bemask: invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "bemask: error: " << e.what() << "\n";
        return 2;
    }
}
