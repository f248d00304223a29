// Acceptance suite. Each criterion prints one PASS/FAIL line; the process
// exits with the number of failed criteria. --fast runs the property/oracle
// criteria (1-6); --slow runs the desk-scale training criteria (7-9), whose
// expensive artifacts are cached in --workdir and reused when the
// configuration hash matches.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tokendrop/encoder.hpp"
#include "tokendrop/errors.hpp"
#include "tokendrop/flops.hpp"
#include "tokendrop/io.hpp"
#include "tokendrop/importance.hpp"
#include "tokendrop/packing.hpp"
#include "tokendrop/probe.hpp"
#include "tokendrop/textgen.hpp"
#include "tokendrop/trainer.hpp"
#include "tokendrop/vocab.hpp"

using namespace tokendrop;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << title;
    if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
    std::cout << std::endl;
    if (!o.pass) g_failures += 1;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

PackedSequence random_sequence(int seq_len, int vocab, Rng& rng, int n_mask, bool corrupt = true) {
    PackedSequence s;
    s.tokens.assign(seq_len, 0);
    s.tokens[0] = special::kCls;
    s.tokens[seq_len - 1] = special::kSep;
    for (int t = 1; t < seq_len - 1; ++t)
        s.tokens[t] = special::kFirstRegular + rng.below(vocab - special::kFirstRegular);
    for (int k = 0; k < n_mask; ++k) {
        int pos = 1 + 2 * k;
        if (pos >= seq_len - 1) break;
        s.mask_positions.push_back(pos);
        s.mask_labels.push_back(s.tokens[pos]);
        if (corrupt && k % 2 == 0) s.tokens[pos] = special::kMask;
    }
    return s;
}

EncoderConfig config_of(int layers, int d_model, int heads, int seq_len, int vocab, Variant v) {
    EncoderConfig cfg;
    cfg.layers = layers;
    cfg.d_model = d_model;
    cfg.heads = heads;
    cfg.seq_len = seq_len;
    cfg.vocab_size = vocab;
    cfg.variant = v;
    cfg.resolve();
    return cfg;
}

// ---- criterion 1 -----------------------------------------------------------

Outcome criterion1() {
    Rng rng(1001);
    float worst = 0.0f;
    for (int trial = 0; trial < 100; ++trial) {
        const int layers = rng.uniform() < 0.5 ? 2 : 4;
        const int heads = 1 << rng.below(3);  // 1, 2 or 4
        const int d_model = std::min(64, heads * (2 + rng.below(8)) * 2);
        const int T = 8 + 2 * rng.below(9);
        const int V = 24;
        const uint64_t seed = 5000 + trial;

        std::vector<PackedSequence> seqs;
        for (int b = 0; b < 2; ++b) seqs.push_back(random_sequence(T, V, rng, 3));
        std::vector<const PackedSequence*> batch;
        for (auto& s : seqs) batch.push_back(&s);
        std::vector<DropPlan> full(2, full_keep_plan(T));

        EncoderModelT<float> base(config_of(layers, d_model, heads, T, V, Variant::baseline));
        base.init_params(seed);
        TapeT<float> tape;
        auto ref = encoder_forward(tape, base, batch, nullptr);

        for (Variant v : {Variant::drop, Variant::pass}) {
            EncoderModelT<float> model(config_of(layers, d_model, heads, T, V, v));
            model.init_params(seed);
            TapeT<float> tape2;
            auto fwd = encoder_forward(tape2, model, batch, &full);
            if (fwd.logits->shape != ref.logits->shape)
                return {false, "logit shape mismatch at trial " + std::to_string(trial)};
            for (size_t i = 0; i < fwd.logits->data.size(); ++i)
                worst = std::max(worst, std::abs(fwd.logits->data[i] - ref.logits->data[i]));
        }
    }
    return {worst <= 1e-6f, "100 configs, max |delta| = " + fmt(worst)};
}

// ---- criterion 2 -----------------------------------------------------------

Outcome criterion2() {
    const int T = 8, V = 12;
    Rng rng(2002);
    std::vector<PackedSequence> seqs;
    for (int b = 0; b < 2; ++b) seqs.push_back(random_sequence(T, V, rng, 2));
    std::vector<const PackedSequence*> batch;
    for (auto& s : seqs) batch.push_back(&s);

    std::vector<DropPlan> plans;
    for (auto& s : seqs) {
        Rng plan_rng(77);
        SelectionStrategy strat{SelectionVariant::random, 0.05, 0};
        ImportanceTable table(V);
        Vocabulary dummy;  // only specials; frequency path unused here
        (void)dummy;
        std::vector<double> scores(T);
        std::vector<bool> specials(T, false);
        for (int i = 0; i < T; ++i) {
            if (is_special_id(s.tokens[i])) {
                specials[i] = true;
                scores[i] = 1e9;
            } else {
                scores[i] = plan_rng.uniform();
            }
        }
        plans.push_back(build_drop_plan(scores, specials, 5, strat, plan_rng));
    }

    double worst = 0.0;
    for (Variant v : {Variant::baseline, Variant::drop, Variant::pass, Variant::avg,
                      Variant::layer_rearranged}) {
        EncoderModelT<double> model(config_of(4, 4, 2, T, V, v));
        model.init_params(909);
        const bool uses_plans =
            v == Variant::drop || v == Variant::pass || v == Variant::layer_rearranged;
        auto build = [&](TapeT<double>& t) -> TensorT<double>& {
            auto fwd = encoder_forward(t, model, batch, uses_plans ? &plans : nullptr);
            return *t.cross_entropy(*fwd.logits, fwd.labels).loss;
        };
        double err = oracles::fd_check(build, model.parameters());
        worst = std::max(worst, err);
        if (err >= 1e-4)
            return {false, std::string("variant ") + to_string(v) + " rel err " + fmt(err)};
    }
    return {true, "all parameters, five variants, worst rel err = " + fmt(worst)};
}

// ---- criterion 3 -----------------------------------------------------------

Outcome criterion3() {
    EncoderConfig cfg = config_of(12, 64, 2, 512, 64, Variant::drop);
    FlopReport half = account_flops(cfg, 0.5);
    FlopReport quarter = account_flops(cfg, 0.25);
    FlopReport none = account_flops(cfg, 0.0);
    bool ok = half.savings_fraction_mlp == 0.25 && quarter.savings_fraction_mlp == 0.125 &&
              none.savings_fraction_mlp == 0.0;
    return {ok, "MLP savings exactly " + fmt(half.savings_fraction_mlp) + " / " +
                    fmt(quarter.savings_fraction_mlp) + " / " + fmt(none.savings_fraction_mlp) +
                    " at rates 0.5 / 0.25 / 0"};
}

// ---- criterion 4 -----------------------------------------------------------

Outcome criterion4() {
    const int V = 512;
    const double beta = 0.9;
    ImportanceTable table(V, beta, 10.0);
    Rng rng(4004);
    std::vector<std::pair<int32_t, double>> history;
    history.reserve(100000);
    for (int batch = 0; batch < 1000; ++batch) {
        std::vector<std::pair<int32_t, double>> events;
        for (int i = 0; i < 100; ++i)
            events.emplace_back(special::kFirstRegular + rng.below(V - special::kFirstRegular),
                                12.0 * rng.uniform());
        table.update(events);
        history.insert(history.end(), events.begin(), events.end());
        if (table.value(special::kMask) != 1e4 || table.value(special::kCls) != 1e4 ||
            table.value(special::kSep) != 1e4 || table.value(special::kPad) != -1e4)
            return {false, "special entry drifted at batch " + std::to_string(batch)};
    }
    std::vector<double> fold(V, 10.0);
    for (const auto& [id, loss] : history) fold[id] = beta * fold[id] + (1.0 - beta) * loss;
    for (int id = special::kFirstRegular; id < V; ++id)
        if (table.value(id) != fold[id])
            return {false, "fold mismatch at id " + std::to_string(id)};
    return {true, "100000 events replayed exactly; specials pinned"};
}

// ---- criterion 5 -----------------------------------------------------------

Outcome criterion5() {
    Rng rng(5005);
    const int V = 64;
    ImportanceTable table(V);
    std::vector<std::pair<int32_t, double>> noise;
    for (int i = 0; i < 2000; ++i)
        noise.emplace_back(special::kFirstRegular + rng.below(V - special::kFirstRegular),
                           9.0 * rng.uniform());
    table.update(noise);

    std::ostringstream vocab_text;
    for (int i = 0; i < V - special::kFirstRegular; ++i)
        for (int rep = 0; rep <= i % 5; ++rep) vocab_text << "tok" << i << ' ';
    std::istringstream vocab_stream(vocab_text.str());
    Vocabulary vocab = build_vocab(vocab_stream, V);

    const SelectionVariant variants[] = {SelectionVariant::cumulative_loss,
                                         SelectionVariant::cumulative_loss_half_random,
                                         SelectionVariant::random, SelectionVariant::frequency};
    for (int trial = 0; trial < 10000; ++trial) {
        const int T = 16 + rng.below(49);
        PackedSequence seq;
        seq.tokens.assign(T, 0);
        seq.tokens[0] = special::kCls;
        for (int t = 1; t < T; ++t) {
            double r = rng.uniform();
            if (r < 0.08)
                seq.tokens[t] = special::kSep;
            else if (r < 0.16)
                seq.tokens[t] = special::kMask;
            else
                seq.tokens[t] = special::kFirstRegular + rng.below(V - special::kFirstRegular);
        }
        auto specials = special_position_mask(seq);
        int n_special = static_cast<int>(std::count(specials.begin(), specials.end(), true));
        const int kept = n_special + rng.below(T - n_special + 1);

        SelectionStrategy strat{variants[trial % 4], 0.05, 0};
        Rng score_rng(9000 + trial);
        auto scores = score_sequence(seq, table, vocab, strat, score_rng);
        Rng plan_rng(9000 + trial);
        DropPlan plan = build_drop_plan(scores, specials, kept, strat, plan_rng);

        // partition, order preservation
        if (static_cast<int>(plan.keep_idx.size()) != kept) return {false, "kept cardinality"};
        if (!std::is_sorted(plan.keep_idx.begin(), plan.keep_idx.end()) ||
            !std::is_sorted(plan.drop_idx.begin(), plan.drop_idx.end()))
            return {false, "index order violated"};
        std::vector<bool> seen(T, false);
        for (int i : plan.keep_idx) seen[i] = true;
        for (int i : plan.drop_idx) {
            if (seen[i]) return {false, "overlapping partition"};
            seen[i] = true;
        }
        if (std::count(seen.begin(), seen.end(), true) != T) return {false, "partition incomplete"};

        // specials always kept
        for (int i = 0; i < T; ++i)
            if (specials[i] && !std::binary_search(plan.keep_idx.begin(), plan.keep_idx.end(), i))
                return {false, "special position dropped"};

        // brute-force sort oracle
        std::vector<int> order(T);
        for (int i = 0; i < T; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        if (plan.sigma != order) return {false, "sigma differs from sort oracle"};
        if (strat.variant != SelectionVariant::cumulative_loss_half_random) {
            std::set<int> expect(order.begin(), order.begin() + kept);
            for (int i : plan.keep_idx)
                if (!expect.count(i)) return {false, "keep set differs from top-M oracle"};
        } else {
            // head ranks always kept; the rest lies inside the tail window
            const int j = static_cast<int>(0.05 * T);
            for (int r = 0; r < kept - j; ++r)
                if (!std::binary_search(plan.keep_idx.begin(), plan.keep_idx.end(), order[r]))
                    return {false, "half-random displaced a head rank"};
        }
    }
    return {true, "10000 sequences x 4 strategies match the oracle"};
}

// ---- criterion 6 -----------------------------------------------------------

Outcome criterion6() {
    std::stringstream corpus;
    generate_corpus(corpus, 1000000, 606);
    std::string text = corpus.str();
    std::istringstream vstream(text);
    Vocabulary vocab = build_vocab(vstream, 4096);

    SequencePacker packer(128, true, false);
    std::vector<PackedSequence> seqs;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        packer.push(encode(line, vocab));
        auto done = packer.drain();
        seqs.insert(seqs.end(), done.begin(), done.end());
    }
    packer.finish();

    uint64_t pads = 0, maskable = 0, n_mask = 0, to_mask_tok = 0, to_random = 0, unchanged = 0;
    for (size_t i = 0; i < seqs.size(); ++i) {
        const PackedSequence& s = seqs[i];
        for (int32_t t : s.tokens) {
            if (t == special::kPad) pads += 1;
            if (!is_special_id(t)) maskable += 1;
        }
        PackedSequence masked = apply_mlm_mask(s, vocab, mix_seed(606, seed_tag::kMask, 0, i));
        n_mask += masked.mask_positions.size();
        for (size_t k = 0; k < masked.mask_positions.size(); ++k) {
            int32_t pos = masked.mask_positions[k];
            if (masked.tokens[pos] == special::kMask)
                to_mask_tok += 1;
            else if (masked.tokens[pos] != s.tokens[pos])
                to_random += 1;
            else
                unchanged += 1;
        }
    }
    const double frac = static_cast<double>(n_mask) / static_cast<double>(maskable);
    const double p_mask = static_cast<double>(to_mask_tok) / n_mask;
    const double p_rand = static_cast<double>(to_random) / n_mask;
    const double p_same = static_cast<double>(unchanged) / n_mask;
    bool ok = pads == 0 && n_mask >= 100000 && std::abs(frac - 0.15) <= 0.01 &&
              std::abs(p_mask - 0.80) <= 0.01 && std::abs(p_rand - 0.10) <= 0.01 &&
              std::abs(p_same - 0.10) <= 0.01;
    return {ok, std::to_string(seqs.size()) + " sequences, PAD=" + std::to_string(pads) +
                    ", mask fraction " + fmt(frac) + ", mixture " + fmt(p_mask) + "/" + fmt(p_rand) +
                    "/" + fmt(p_same) + " over " + std::to_string(n_mask) + " positions"};
}

// ---- criteria 7-9 (slow) ---------------------------------------------------

struct SlowConfig {
    int seq_len = 128;
    int layers = 4;
    int d_model = 128;
    int heads = 2;
    int batch_size = 16;
    int64_t steps = 20000;
    double drop_rate = 0.5;
    double stage2_fraction = 0.1;
    int val_sequences = 512;
    uint64_t seed = 1234;
    uint64_t corpus_tokens = 5000000;
    uint64_t corpus_seed = 2026;

    std::string hash() const {
        std::ostringstream os;
        os << "T" << seq_len << "_L" << layers << "_d" << d_model << "_h" << heads << "_b" << batch_size
           << "_s" << steps << "_r" << drop_rate << "_f" << stage2_fraction << "_v" << val_sequences
           << "_seed" << seed << "_c" << corpus_tokens << "." << corpus_seed;
        return os.str();
    }
};

struct RunResult {
    uint64_t flops = 0;
    double val_loss = 0.0;
    double probe_accuracy = 0.0;
};

std::map<std::string, std::string> read_kv(const fs::path& p) {
    std::map<std::string, std::string> kv;
    std::ifstream is(p);
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void prepare_dataset(const fs::path& work, const SlowConfig& sc, Vocabulary& vocab,
                     std::vector<PackedSequence>& data) {
    fs::create_directories(work);
    const fs::path corpus_path = work / "corpus.txt";
    const fs::path vocab_path = work / "vocab.tsv";
    const fs::path data_path = work / "data.bin";

    if (!fs::exists(corpus_path)) {
        std::cerr << "[slow] generating " << sc.corpus_tokens << "-token corpus...\n";
        auto os = open_out(corpus_path.string(), false);
        generate_corpus(os, sc.corpus_tokens, sc.corpus_seed);
    }
    if (!fs::exists(vocab_path)) {
        std::cerr << "[slow] building vocabulary...\n";
        build_vocab_from_files({corpus_path.string()}, 4096).save(vocab_path.string());
    }
    vocab = Vocabulary::load(vocab_path.string());
    if (!fs::exists(data_path)) {
        std::cerr << "[slow] packing...\n";
        SequencePacker packer(sc.seq_len, true, false);
        std::vector<PackedSequence> seqs;
        std::ifstream lines(corpus_path);
        std::string line;
        while (std::getline(lines, line)) {
            packer.push(encode(line, vocab));
            auto done = packer.drain();
            seqs.insert(seqs.end(), done.begin(), done.end());
        }
        packer.finish();
        write_packed_file(data_path.string(), sc.seq_len, seqs);
    }
    data = read_packed_file(data_path.string()).second;
}

RunResult run_or_load(const fs::path& work, const SlowConfig& sc, const std::string& name, Variant variant,
                      const Vocabulary& vocab, const std::vector<PackedSequence>& data) {
    const fs::path dir = work / name;
    const fs::path result_path = dir / "result.txt";
    if (fs::exists(result_path)) {
        auto kv = read_kv(result_path);
        if (kv.count("config") && kv["config"] == sc.hash()) {
            std::cerr << "[slow] reusing cached run " << name << "\n";
            return {std::stoull(kv["flops"]), std::stod(kv["val_loss"]), std::stod(kv["probe"])};
        }
    }

    std::cerr << "[slow] training " << name << " (" << sc.steps << " steps)...\n";
    EncoderConfig enc = config_of(sc.layers, sc.d_model, sc.heads, sc.seq_len, vocab.size(), variant);
    TrainConfig tc;
    tc.total_steps = sc.steps;
    tc.stage2_fraction = sc.stage2_fraction;
    tc.batch_size = sc.batch_size;
    tc.drop_rate = sc.drop_rate;
    tc.seed = sc.seed;
    tc.log_interval = 100;
    tc.val_sequences = sc.val_sequences;
    SelectionStrategy strat{SelectionVariant::cumulative_loss, 0.05, sc.seed};

    Trainer trainer(enc, tc, strat, vocab, data);
    fs::create_directories(dir);
    std::ofstream metrics(dir / "metrics.jsonl");
    auto val = trainer.run(&metrics, dir.string());

    std::cerr << "[slow] probing " << name << "...\n";
    ProbeConfig pc;
    pc.steps = 1200;
    pc.batch_size = sc.batch_size;
    pc.lr = 3e-4;
    pc.seed = 7;
    double probe = toy_finetune_probe(trainer.model(), vocab, pc);

    RunResult r{trainer.flops_cumulative(), val.value(), probe};
    std::ofstream out(result_path);
    out << "config=" << sc.hash() << "\nflops=" << r.flops << "\nval_loss=" << r.val_loss
        << "\nprobe=" << r.probe_accuracy << "\n";
    return r;
}

Outcome criterion7(const fs::path& work, const SlowConfig& sc, RunResult& base, RunResult& drop) {
    Vocabulary vocab;
    std::vector<PackedSequence> data;
    prepare_dataset(work, sc, vocab, data);
    base = run_or_load(work, sc, "run_baseline", Variant::baseline, vocab, data);
    drop = run_or_load(work, sc, "run_drop", Variant::drop, vocab, data);

    const double flop_saving =
        1.0 - static_cast<double>(drop.flops) / static_cast<double>(base.flops);
    const double rel_val = std::abs(drop.val_loss - base.val_loss) / base.val_loss;
    const double probe_gap = std::abs(drop.probe_accuracy - base.probe_accuracy);
    bool ok = flop_saving >= 0.20 && rel_val <= 0.10 && probe_gap <= 0.05;
    return {ok, "flop saving " + fmt(flop_saving) + " (>=0.20), val " + fmt(drop.val_loss) + " vs " +
                    fmt(base.val_loss) + " rel " + fmt(rel_val) + " (<=0.10), probe " +
                    fmt(drop.probe_accuracy) + " vs " + fmt(base.probe_accuracy) + " gap " +
                    fmt(probe_gap) + " (<=0.05)"};
}

Outcome criterion8(const fs::path& work) {
    Vocabulary vocab = Vocabulary::load((work / "vocab.tsv").string());
    ImportanceTable table = ImportanceTable::load((work / "run_drop" / "importance.bin").string());

    std::vector<int32_t> regular;
    for (int32_t id = special::kUnk; id < vocab.size(); ++id) regular.push_back(id);
    std::vector<int32_t> by_freq = regular;
    std::sort(by_freq.begin(), by_freq.end(), [&](int32_t a, int32_t b) {
        if (vocab.frequency(a) != vocab.frequency(b)) return vocab.frequency(a) > vocab.frequency(b);
        return a < b;
    });

    auto median_of = [&](const std::vector<int32_t>& ids) {
        std::vector<double> vals;
        vals.reserve(ids.size());
        for (int32_t id : ids) vals.push_back(table.value(id));
        std::sort(vals.begin(), vals.end());
        const size_t n = vals.size();
        return n % 2 == 1 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    };
    std::vector<int32_t> top10(by_freq.begin(), by_freq.begin() + 10);
    const double top_median = median_of(top10);
    const double vocab_median = median_of(regular);
    return {top_median < vocab_median,
            "top-10-frequency median loss " + fmt(top_median) + " < vocabulary median " +
                fmt(vocab_median)};
}

Outcome criterion9(const fs::path& work, const SlowConfig& sc) {
    Vocabulary vocab = Vocabulary::load((work / "vocab.tsv").string());
    auto data = read_packed_file((work / "data.bin").string()).second;

    auto run500 = [&](const std::string& name) {
        EncoderConfig enc =
            config_of(sc.layers, sc.d_model, sc.heads, sc.seq_len, vocab.size(), Variant::drop);
        TrainConfig tc;
        tc.total_steps = sc.steps;
        tc.stage2_fraction = sc.stage2_fraction;
        tc.batch_size = sc.batch_size;
        tc.drop_rate = sc.drop_rate;
        tc.seed = sc.seed;
        tc.log_interval = 50;
        tc.val_sequences = sc.val_sequences;
        SelectionStrategy strat{SelectionVariant::cumulative_loss, 0.05, sc.seed};
        Trainer t(enc, tc, strat, vocab, data);
        const fs::path dir = work / name;
        fs::create_directories(dir);
        std::ofstream metrics(dir / "metrics.jsonl");
        t.run(&metrics, dir.string(), 500);
        metrics.close();
        std::ifstream in(dir / "metrics.jsonl", std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), {});
    };

    std::cerr << "[slow] determinism: two 500-step replays...\n";
    std::string a = run500("crit9_a");
    std::string b = run500("crit9_b");
    bool ok = !a.empty() && a == b;
    return {ok, std::to_string(std::count(a.begin(), a.end(), '\n')) + "-line metrics logs are " +
                    (ok ? "byte-identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
    bool fast = false, slow = false;
    fs::path work = "acceptance_work";
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--fast") fast = true;
        else if (arg == "--slow") slow = true;
        else if (arg == "--all") fast = slow = true;
        else if (arg == "--workdir" && i + 1 < argc) work = argv[++i];
        else {
            std::cerr << "usage: acceptance [--fast] [--slow] [--all] [--workdir PATH]\n";
            return 2;
        }
    }
    if (!fast && !slow) fast = true;

    try {
        if (fast) {
            report(1, "drop-rate-0 equivalence of drop/pass with baseline (32-bit, 1e-6)", criterion1());
            report(2, "finite-difference gradient checks, all parameters, all variants (64-bit, 1e-4)",
                   criterion2());
            report(3, "closed-form MLP FLOP savings (exact)", criterion3());
            report(4, "cumulative-loss EMA replay matches the fold oracle exactly", criterion4());
            report(5, "drop plans partition, preserve order, keep specials, match the sort oracle",
                   criterion5());
            report(6, "packed corpus has zero PAD; mask fraction and 80/10/10 mixture within 1%",
                   criterion6());
        }
        if (slow) {
            SlowConfig sc;
            RunResult base, drop;
            report(7, "desk-scale parity: >=20% FLOP saving, val loss within 10%, probe within 5 points",
                   criterion7(work, sc, base, drop));
            report(8, "most frequent tokens fall below the vocabulary median cumulative loss",
                   criterion8(work));
            report(9, "two seeded 500-step replays produce bit-identical metrics logs",
                   criterion9(work, sc));
        }
    } catch (const std::exception& e) {
        std::cerr << "acceptance suite aborted: " << e.what() << "\n";
        return 99;
    }
    return g_failures;
}
