#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tokendrop/encoder.hpp"
#include "tokendrop/errors.hpp"
#include "tokendrop/flops.hpp"
#include "tokendrop/io.hpp"
#include "tokendrop/importance.hpp"
#include "tokendrop/packing.hpp"
#include "tokendrop/probe.hpp"
#include "tokendrop/run_config.hpp"
#include "tokendrop/textgen.hpp"
#include "tokendrop/trainer.hpp"
#include "tokendrop/vocab.hpp"

namespace td = tokendrop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::ostream& output_stream(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw td::IoError("cannot open for writing: " + path);
    return file;
}

int cmd_gen_corpus(const std::string& out, uint64_t tokens, uint64_t seed) {
    auto os = td::open_out(out, /*binary=*/false);
    td::generate_corpus(os, tokens, seed);
    std::cerr << "wrote ~" << tokens << " tokens to " << out << " (seed " << seed << ")\n";
    return kExitOk;
}

int cmd_build_vocab(const std::vector<std::string>& corpus, const std::string& out, int max_size) {
    td::Vocabulary vocab = td::build_vocab_from_files(corpus, max_size);
    vocab.save(out);
    std::cerr << "vocabulary: " << vocab.size() << " entries -> " << out << "\n";
    return kExitOk;
}

int cmd_pack(const std::vector<std::string>& corpus, const std::string& vocab_path, const std::string& out,
             int seq_len, bool packed) {
    td::Vocabulary vocab = td::Vocabulary::load(vocab_path);
    td::SequencePacker packer(seq_len, packed);
    std::vector<td::PackedSequence> seqs;
    for (const auto& path : corpus) {
        std::ifstream is(path);
        if (!is) throw td::IngestError("cannot read corpus file: " + path);
        std::string line;
        while (std::getline(is, line)) {
            packer.push(td::encode(line, vocab));
            auto done = packer.drain();
            seqs.insert(seqs.end(), std::make_move_iterator(done.begin()),
                        std::make_move_iterator(done.end()));
        }
    }
    if (auto tail = packer.finish()) seqs.push_back(std::move(*tail));
    td::write_packed_file(out, seq_len, seqs);
    const auto& st = packer.stats();
    std::cout << "sequences=" << seqs.size() << " pad_tokens=" << st.pad_tokens
              << " tokens_ingested=" << st.tokens_ingested << " tokens_emitted=" << st.tokens_emitted
              << " truncated_sentences=" << st.truncated_sentences
              << " tail_tokens_dropped=" << st.tokens_in_dropped_tail << "\n";
    return kExitOk;
}

int cmd_pretrain(const td::RunConfig& rc, bool resume, int64_t stop_after) {
    rc.validate();
    if (rc.data_path.empty() || rc.vocab_path.empty())
        throw td::ConfigError("pretrain requires data= and vocab= (or --data/--vocab)");
    td::Vocabulary vocab = td::Vocabulary::load(rc.vocab_path);
    auto [seq_len, data] = td::read_packed_file(rc.data_path);
    if (seq_len != rc.seq_len)
        throw td::ConfigError("packed data was built with seq_len=" + std::to_string(seq_len) +
                              ", config says " + std::to_string(rc.seq_len));

    td::Trainer trainer(rc.encoder_config(vocab.size()), rc.train_config(), rc.strategy(), vocab,
                        std::move(data));
    std::filesystem::create_directories(rc.out_dir);
    std::ofstream metrics;
    if (resume) {
        trainer.load_run_state(rc.out_dir);
        metrics.open(rc.out_dir + "/metrics.jsonl", std::ios::app);
    } else {
        metrics.open(rc.out_dir + "/metrics.jsonl");
    }
    if (!metrics) throw td::IoError("cannot open metrics log in " + rc.out_dir);

    auto val = trainer.run(&metrics, rc.out_dir, stop_after);
    std::cout << "steps=" << trainer.step() << " flops=" << trainer.flops_cumulative()
              << " checksum=" << trainer.parameter_checksum();
    if (val) std::cout << " val_mlm_loss=" << fmt_double(*val);
    std::cout << "\n";
    return kExitOk;
}

int cmd_report_scores(const std::string& table_path, const std::string& vocab_path, const std::string& out,
                      uint64_t seed) {
    td::Vocabulary vocab = td::Vocabulary::load(vocab_path);
    td::ImportanceTable table = td::ImportanceTable::load(table_path);
    auto report = td::dump_scores(table, vocab);
    std::ofstream file;
    auto& os = output_stream(out, file);
    os << "# kind=scores seed=" << seed << "\n";
    for (const auto& e : report.ranked) os << e.token << '\t' << fmt_double(e.score) << "\n";
    return kExitOk;
}

int cmd_report_histogram(const std::string& table_path, const std::string& vocab_path, const std::string& out,
                         int buckets, uint64_t seed) {
    td::Vocabulary vocab = td::Vocabulary::load(vocab_path);
    td::ImportanceTable table = td::ImportanceTable::load(table_path);
    auto report = td::dump_scores(table, vocab, buckets);
    std::ofstream file;
    auto& os = output_stream(out, file);
    os << "# kind=histogram seed=" << seed << "\n";
    for (const auto& b : report.histogram)
        os << fmt_double(b.low) << ',' << fmt_double(b.high) << ',' << b.count << "\n";
    return kExitOk;
}

int cmd_report_flops(const td::RunConfig& rc, const std::string& out) {
    td::EncoderConfig cfg = rc.encoder_config(td::special::kFirstRegular + 1);
    td::FlopReport r = td::account_flops(cfg, rc.drop_rate);
    std::ofstream file;
    auto& os = output_stream(out, file);
    os << "{\"method\":\"" << rc.method << "\",\"drop_rate\":" << fmt_double(rc.drop_rate)
       << ",\"seq_len\":" << cfg.seq_len << ",\"layers\":" << cfg.layers
       << ",\"mlp_flops_baseline\":" << r.mlp_flops_baseline << ",\"mlp_flops_actual\":" << r.mlp_flops_actual
       << ",\"attention_flops_baseline\":" << r.attention_flops_baseline
       << ",\"attention_flops_actual\":" << r.attention_flops_actual
       << ",\"savings_fraction_mlp\":" << fmt_double(r.savings_fraction_mlp)
       << ",\"savings_fraction_total\":" << fmt_double(r.savings_fraction_total) << "}\n";
    return kExitOk;
}

// Annotated sequences: kept tokens are wrapped in asterisks.
int cmd_report_examples(const td::RunConfig& rc, const std::string& table_path, const std::string& out,
                        int count) {
    if (rc.data_path.empty() || rc.vocab_path.empty())
        throw td::ConfigError("examples report requires data= and vocab=");
    td::Vocabulary vocab = td::Vocabulary::load(rc.vocab_path);
    td::ImportanceTable table =
        table_path.empty() ? td::ImportanceTable(vocab.size()) : td::ImportanceTable::load(table_path);
    auto [seq_len, data] = td::read_packed_file(rc.data_path);
    td::SelectionStrategy strategy = rc.strategy();
    const int kept = td::kept_rows(rc.encoder_config(vocab.size()), rc.drop_rate);

    std::ofstream file;
    auto& os = output_stream(out, file);
    os << "# kind=examples seed=" << rc.seed << " kept=" << kept << " of " << seq_len << "\n";
    for (int i = 0; i < count && i < static_cast<int>(data.size()); ++i) {
        td::Rng rng(td::mix_seed(rc.seed, td::seed_tag::kPlan, 0, i));
        auto scores = td::score_sequence(data[i], table, vocab, strategy, rng);
        auto plan = td::build_drop_plan(scores, td::special_position_mask(data[i]), kept, strategy, rng);
        std::vector<bool> keep(seq_len, false);
        for (int k : plan.keep_idx) keep[k] = true;
        for (int t = 0; t < seq_len; ++t) {
            if (t) os << ' ';
            const std::string& tok = vocab.token(data[i].tokens[t]);
            os << (keep[t] ? "*" + tok + "*" : tok);
        }
        os << "\n";
    }
    return kExitOk;
}

int cmd_probe(const std::string& checkpoint, const std::string& vocab_path, const td::ProbeConfig& pc) {
    td::Vocabulary vocab = td::Vocabulary::load(vocab_path);
    td::EncoderModel model = td::load_checkpoint(checkpoint);
    double acc = td::toy_finetune_probe(model, vocab, pc);
    std::cout << "probe_accuracy=" << fmt_double(acc) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-LM pretraining with importance-driven token dropping"};
    app.require_subcommand(1);

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "Generate a deterministic English-like text corpus");
    std::string gen_out = "corpus.txt";
    uint64_t gen_tokens = 1000000, gen_seed = 13;
    gen->add_option("--out", gen_out, "Output text file");
    gen->add_option("--tokens", gen_tokens, "Minimum token count");
    gen->add_option("--seed", gen_seed, "Generator seed");

    // build-vocab
    auto* bv = app.add_subcommand("build-vocab", "Build a vocabulary from text corpora");
    std::vector<std::string> bv_corpus;
    std::string bv_out = "vocab.tsv";
    int bv_max = 4096;
    bv->add_option("--corpus", bv_corpus, "Corpus files (one document per line)")->required();
    bv->add_option("--out", bv_out, "Vocabulary output path");
    bv->add_option("--max-size", bv_max, "Maximum vocabulary size");

    // pack
    auto* pk = app.add_subcommand("pack", "Pack corpora into fixed-length sequences");
    std::vector<std::string> pk_corpus;
    std::string pk_vocab, pk_out = "data.bin";
    int pk_len = 128;
    bool pk_padded = false;
    pk->add_option("--corpus", pk_corpus, "Corpus files")->required();
    pk->add_option("--vocab", pk_vocab, "Vocabulary file")->required();
    pk->add_option("--out", pk_out, "Packed data output path");
    pk->add_option("--seq-len", pk_len, "Sequence length T");
    pk->add_flag("--padded", pk_padded, "Non-packed mode: one sentence pair per sequence, PAD-filled");

    // pretrain
    auto* pt = app.add_subcommand("pretrain", "Run stage-1 (+ optional stage-2) pretraining");
    std::string pt_config;
    bool pt_resume = false;
    int64_t pt_stop_after = -1;
    td::RunConfig rc;
    pt->add_option("--config", pt_config, "key=value configuration file");
    pt->add_flag("--resume", pt_resume, "Resume from the run state in out_dir");
    pt->add_option("--stop-after", pt_stop_after, "Pause (checkpoint and exit) at this step");
    std::optional<std::string> o_data, o_vocab, o_outdir, o_method;
    std::optional<double> o_rate, o_stage2, o_lr, o_wd;
    std::optional<int64_t> o_steps, o_warmup, o_log, o_ckpt;
    std::optional<int> o_batch, o_layers, o_dmodel, o_heads, o_val, o_seqlen;
    std::optional<uint64_t> o_seed;
    pt->add_option("--data", o_data, "Packed data file");
    pt->add_option("--vocab", o_vocab, "Vocabulary file");
    pt->add_option("--out-dir", o_outdir, "Run output directory");
    pt->add_option("--variant", o_method,
                   "Method: baseline|drop|rand|half-rand|freq|pass|avg|layer-rearranged");
    pt->add_option("--drop-rate", o_rate, "Fraction of tokens dropped in half layers");
    pt->add_option("--stage2-fraction", o_stage2, "Trailing fraction of steps without dropping");
    pt->add_option("--steps", o_steps, "Total optimizer steps");
    pt->add_option("--batch-size", o_batch, "Sequences per step");
    pt->add_option("--seq-len", o_seqlen, "Sequence length (must match the packed data)");
    pt->add_option("--layers", o_layers, "Encoder depth");
    pt->add_option("--d-model", o_dmodel, "Hidden width");
    pt->add_option("--heads", o_heads, "Attention heads");
    pt->add_option("--peak-lr", o_lr, "Peak learning rate");
    pt->add_option("--warmup-steps", o_warmup, "Warmup steps (-1: 1% of total)");
    pt->add_option("--weight-decay", o_wd, "Decoupled weight decay");
    pt->add_option("--log-interval", o_log, "Steps between metrics records");
    pt->add_option("--checkpoint-interval", o_ckpt, "Steps between checkpoints (0: final only)");
    pt->add_option("--val-sequences", o_val, "Sequences reserved for validation");
    pt->add_option("--seed", o_seed, "Root seed");

    // report
    auto* rp = app.add_subcommand("report", "Emit score/histogram/FLOP/example reports");
    std::string rp_kind, rp_table, rp_out, rp_config;
    int rp_buckets = 32, rp_count = 8;
    td::RunConfig rp_rc;
    std::optional<std::string> rp_vocab, rp_data, rp_method;
    std::optional<double> rp_rate;
    std::optional<int> rp_layers, rp_dmodel, rp_heads, rp_seqlen;
    std::optional<uint64_t> rp_seed;
    rp->add_option("--kind", rp_kind, "scores|histogram|flops|examples")->required();
    rp->add_option("--config", rp_config, "key=value configuration file");
    rp->add_option("--table", rp_table, "Importance table checkpoint");
    rp->add_option("--vocab", rp_vocab, "Vocabulary file");
    rp->add_option("--data", rp_data, "Packed data file (examples)");
    rp->add_option("--out", rp_out, "Output path (default stdout)");
    rp->add_option("--buckets", rp_buckets, "Histogram buckets");
    rp->add_option("--count", rp_count, "Example sequences to annotate");
    rp->add_option("--variant", rp_method, "Method (flops/examples)");
    rp->add_option("--drop-rate", rp_rate, "Drop rate (flops/examples)");
    rp->add_option("--layers", rp_layers, "Encoder depth (flops)");
    rp->add_option("--d-model", rp_dmodel, "Hidden width (flops)");
    rp->add_option("--heads", rp_heads, "Attention heads (flops)");
    rp->add_option("--seq-len", rp_seqlen, "Sequence length (flops)");
    rp->add_option("--seed", rp_seed, "Seed recorded in the report header");

    // probe
    auto* pb = app.add_subcommand("probe", "Fine-tune a checkpoint on the synthetic marker-pair task");
    std::string pb_ckpt, pb_vocab;
    td::ProbeConfig pc;
    pb->add_option("--checkpoint", pb_ckpt, "Encoder checkpoint")->required();
    pb->add_option("--vocab", pb_vocab, "Vocabulary file")->required();
    pb->add_option("--steps", pc.steps, "Fine-tuning steps (0: evaluate the fresh head)");
    pb->add_option("--train-examples", pc.train_examples, "Training examples");
    pb->add_option("--val-examples", pc.val_examples, "Validation examples");
    pb->add_option("--batch-size", pc.batch_size, "Batch size");
    pb->add_option("--lr", pc.lr, "Peak learning rate");
    pb->add_option("--seed", pc.seed, "Probe seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_corpus(gen_out, gen_tokens, gen_seed);
        if (bv->parsed()) return cmd_build_vocab(bv_corpus, bv_out, bv_max);
        if (pk->parsed()) return cmd_pack(pk_corpus, pk_vocab, pk_out, pk_len, !pk_padded);
        if (pt->parsed()) {
            if (!pt_config.empty()) rc.load_file(pt_config);
            if (o_data) rc.data_path = *o_data;
            if (o_vocab) rc.vocab_path = *o_vocab;
            if (o_outdir) rc.out_dir = *o_outdir;
            if (o_method) rc.method = *o_method;
            if (o_rate) rc.drop_rate = *o_rate;
            if (o_stage2) rc.stage2_fraction = *o_stage2;
            if (o_steps) rc.total_steps = *o_steps;
            if (o_batch) rc.batch_size = *o_batch;
            if (o_seqlen) rc.seq_len = *o_seqlen;
            if (o_layers) rc.layers = *o_layers;
            if (o_dmodel) rc.d_model = *o_dmodel;
            if (o_heads) rc.heads = *o_heads;
            if (o_lr) rc.peak_lr = *o_lr;
            if (o_warmup) rc.warmup_steps = *o_warmup;
            if (o_wd) rc.weight_decay = *o_wd;
            if (o_log) rc.log_interval = *o_log;
            if (o_ckpt) rc.checkpoint_interval = *o_ckpt;
            if (o_val) rc.val_sequences = *o_val;
            if (o_seed) rc.seed = *o_seed;
            return cmd_pretrain(rc, pt_resume, pt_stop_after);
        }
        if (rp->parsed()) {
            if (!rp_config.empty()) rp_rc.load_file(rp_config);
            if (rp_vocab) rp_rc.vocab_path = *rp_vocab;
            if (rp_data) rp_rc.data_path = *rp_data;
            if (rp_method) rp_rc.method = *rp_method;
            if (rp_rate) rp_rc.drop_rate = *rp_rate;
            if (rp_layers) rp_rc.layers = *rp_layers;
            if (rp_dmodel) rp_rc.d_model = *rp_dmodel;
            if (rp_heads) rp_rc.heads = *rp_heads;
            if (rp_seqlen) rp_rc.seq_len = *rp_seqlen;
            if (rp_seed) rp_rc.seed = *rp_seed;
            if (rp_kind == "scores") return cmd_report_scores(rp_table, rp_rc.vocab_path, rp_out, rp_rc.seed);
            if (rp_kind == "histogram")
                return cmd_report_histogram(rp_table, rp_rc.vocab_path, rp_out, rp_buckets, rp_rc.seed);
            if (rp_kind == "flops") return cmd_report_flops(rp_rc, rp_out);
            if (rp_kind == "examples") return cmd_report_examples(rp_rc, rp_table, rp_out, rp_count);
            throw td::ConfigError("unknown report kind: " + rp_kind);
        }
        if (pb->parsed()) return cmd_probe(pb_ckpt, pb_vocab, pc);
        return kExitUsage;
    } catch (const td::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const td::IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const td::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
