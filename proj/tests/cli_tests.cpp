// Integration tests for the command-line binary: real subprocess invocations
// checking exit codes, byte-level idempotence and the report formats.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tokendrop/vocab.hpp"

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    std::cout << (ok ? "  ok: " : "  FAILED: ") << what << "\n";
    if (!ok) g_failures += 1;
}

int run(const std::string& args, const std::string& log = "/dev/null") {
    std::string cmd = std::string(TOKENDROP_BIN) + " " + args + " >" + log + " 2>&1";
    int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

std::string metric_rows(const std::string& text) {
    std::string out;
    for (const auto& l : lines_of(text))
        if (l.find("\"step\"") != std::string::npos) out += l + "\n";
    return out;
}

}  // namespace

int main() {
    fs::path work = fs::current_path() / "cli_work";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string W = work.string();

    std::cout << "corpus generation\n";
    check(run("gen-corpus --out " + W + "/corpus.txt --tokens 60000 --seed 13") == 0, "gen-corpus exits 0");
    check(run("gen-corpus --out " + W + "/corpus2.txt --tokens 60000 --seed 13") == 0, "gen-corpus rerun");
    check(slurp(work / "corpus.txt") == slurp(work / "corpus2.txt"), "gen-corpus is byte-idempotent");

    std::cout << "vocabulary\n";
    check(run("build-vocab --corpus " + W + "/corpus.txt --out " + W + "/vocab.tsv --max-size 4096") == 0,
          "build-vocab exits 0");
    check(run("build-vocab --corpus " + W + "/missing.txt --out " + W + "/x.tsv") == 2,
          "missing corpus file exits 2");
    {
        // line count = min(max_size, distinct tokens + 5)
        std::ifstream corpus(work / "corpus.txt");
        std::string line;
        std::set<std::string> distinct;
        while (std::getline(corpus, line))
            for (auto& s : tokendrop::tokenize_line(line))
                for (auto& t : s) distinct.insert(t);
        auto vocab_lines = lines_of(slurp(work / "vocab.tsv"));
        check(vocab_lines.size() == std::min<size_t>(4096, distinct.size() + 5),
              "vocab line count = min(max_size, distinct + 5)");
        check(run("build-vocab --corpus " + W + "/corpus.txt --out " + W + "/vocab2.tsv --max-size 4096") == 0,
              "build-vocab rerun");
        check(slurp(work / "vocab.tsv") == slurp(work / "vocab2.tsv"), "build-vocab is byte-idempotent");

        // capped vocabulary still counts every token (remainder in [UNK])
        check(run("build-vocab --corpus " + W + "/corpus.txt --out " + W + "/vocab_small.tsv --max-size 64") ==
                  0,
              "capped build-vocab exits 0");
        check(lines_of(slurp(work / "vocab_small.tsv")).size() == 64, "capped vocab has max_size lines");
    }

    std::cout << "packing\n";
    check(run("pack --corpus " + W + "/corpus.txt --vocab " + W + "/vocab.tsv --out " + W +
              "/data.bin --seq-len 64",
              W + "/pack.log") == 0,
          "pack exits 0");
    {
        std::string log = slurp(work / "pack.log");
        check(log.find("pad_tokens=0") != std::string::npos, "packed mode reports zero PAD");
        check(run("pack --corpus " + W + "/corpus.txt --vocab " + W + "/vocab.tsv --out " + W +
                  "/data_padded.bin --seq-len 64 --padded",
                  W + "/pack_padded.log") == 0,
              "padded pack exits 0");
        std::string padded = slurp(work / "pack_padded.log");
        auto pad_pos = padded.find("pad_tokens=");
        check(pad_pos != std::string::npos && padded[pad_pos + 11] != '0', "padded mode reports PAD > 0");
        check(run("pack --corpus " + W + "/corpus.txt --vocab " + W + "/vocab.tsv --out " + W +
                  "/data2.bin --seq-len 64") == 0,
              "pack rerun");
        check(slurp(work / "data.bin") == slurp(work / "data2.bin"), "pack is byte-idempotent");
    }

    std::cout << "pretraining\n";
    const std::string base_flags =
        " --data " + W + "/data.bin --vocab " + W + "/vocab.tsv --seq-len 64 --layers 2 --d-model 32 "
        "--heads 2 --batch-size 4 --log-interval 5 --val-sequences 8 --seed 42 "
        "--stage2-fraction 0.1";
    const std::string common = base_flags + " --steps 20";
    check(run("pretrain" + common + " --variant drop --drop-rate 0.5 --out-dir " + W + "/run_drop",
              W + "/pretrain.log") == 0,
          "pretrain (drop) exits 0");
    check(fs::exists(work / "run_drop/checkpoint.bin"), "checkpoint written");
    check(fs::exists(work / "run_drop/importance.bin"), "importance table written");
    {
        auto rows = lines_of(metric_rows(slurp(work / "run_drop/metrics.jsonl")));
        check(rows.size() == 4, "metrics rows = total_steps / log_interval");
        check(run("pretrain" + common + " --variant drop --drop-rate 0.5 --out-dir " + W + "/run_drop2") == 0,
              "pretrain rerun");
        check(slurp(work / "run_drop/metrics.jsonl") == slurp(work / "run_drop2/metrics.jsonl"),
              "pretrain metrics are byte-identical across reruns");

        check(run("pretrain" + common + " --variant baseline --out-dir " + W + "/run_base") == 0,
              "pretrain (baseline) exits 0");
        check(run("pretrain" + common + " --variant drop --drop-rate 0 --out-dir " + W + "/run_rate0") == 0,
              "pretrain (drop, rate 0) exits 0");
        check(metric_rows(slurp(work / "run_rate0/metrics.jsonl")) ==
                  metric_rows(slurp(work / "run_base/metrics.jsonl")),
              "drop at rate 0 reproduces baseline metrics");
    }
    check(run("pretrain" + common + " --variant drop --drop-rate 0.3 --out-dir " + W + "/bad") == 2,
          "unsupported drop rate exits 2");
    check(run("pretrain --data " + W + "/nope.bin --vocab " + W + "/vocab.tsv") == 2,
          "missing data file exits 2");
    {
        std::ofstream cfg(work / "bad.cfg");
        cfg << "unknown_key = 1\n";
        cfg.close();
        check(run("pretrain --config " + W + "/bad.cfg") == 2, "unknown config key exits 2");
        std::ofstream cfg2(work / "good.cfg");
        cfg2 << "# comment\n"
             << "data = " << W << "/data.bin\n"
             << "vocab = " << W << "/vocab.tsv\n"
             << "pack.seq_len = 64\n"
             << "encoder.layers = 2\n"
             << "encoder.d_model = 32\n"
             << "method = drop\n"
             << "drop_rate = 0.5\n"
             << "train.total_steps = 6\n"
             << "train.batch_size = 4\n"
             << "train.log_interval = 3\n"
             << "out_dir = " << W << "/run_cfg\n";
        cfg2.close();
        check(run("pretrain --config " + W + "/good.cfg") == 0, "config-file pretrain exits 0");
        // flags override the file
        check(run("pretrain --config " + W + "/good.cfg --steps 4 --out-dir " + W + "/run_cfg2") == 0,
              "flag overrides config file");
        auto rows = lines_of(metric_rows(slurp(work / "run_cfg2/metrics.jsonl")));
        check(rows.size() == 1, "override changed the step count");
    }

    std::cout << "reports\n";
    check(run("report --kind flops --variant drop --drop-rate 0.5 --layers 12 --d-model 64 --heads 2 "
              "--seq-len 512 --out " +
              W + "/flops.json") == 0,
          "flops report exits 0");
    check(slurp(work / "flops.json").find("\"savings_fraction_mlp\":0.25") != std::string::npos,
          "flops report shows the quarter saving");
    check(run("report --kind scores --table " + W + "/run_drop/importance.bin --vocab " + W +
              "/vocab.tsv --out " + W + "/scores.tsv --seed 42") == 0,
          "scores report exits 0");
    {
        auto rows = lines_of(slurp(work / "scores.tsv"));
        check(!rows.empty() && rows[0].rfind("# kind=scores seed=42", 0) == 0,
              "scores report records the seed in its header");
        check(rows.size() >= 2 && rows[1].find('\t') != std::string::npos, "scores rows are token<TAB>score");
    }
    check(run("report --kind histogram --table " + W + "/run_drop/importance.bin --vocab " + W +
              "/vocab.tsv --buckets 16 --out " + W + "/hist.csv") == 0,
          "histogram report exits 0");
    {
        auto rows = lines_of(slurp(work / "hist.csv"));
        uint64_t total = 0;
        int data_rows = 0;
        for (const auto& r : rows) {
            if (r.empty() || r[0] == '#') continue;
            data_rows += 1;
            total += std::stoull(r.substr(r.rfind(',') + 1));
        }
        auto vocab_lines = lines_of(slurp(work / "vocab.tsv"));
        check(data_rows == 16, "histogram has the requested bucket count");
        check(total == vocab_lines.size(), "histogram counts sum to the vocabulary size");
    }
    check(run("report --kind examples --data " + W + "/data.bin --vocab " + W + "/vocab.tsv --table " + W +
              "/run_drop/importance.bin --variant drop --drop-rate 0.5 --seq-len 64 --count 4 --out " +
              W + "/examples.txt") == 0,
          "examples report exits 0");
    {
        auto rows = lines_of(slurp(work / "examples.txt"));
        int annotated = 0;
        for (const auto& r : rows) {
            if (r.empty() || r[0] == '#') continue;
            annotated += 1;
            int kept = 0;
            std::istringstream toks(r);
            std::string tok;
            while (toks >> tok)
                if (tok.size() >= 2 && tok.front() == '*' && tok.back() == '*') kept += 1;
            check(kept == 32, "examples report marks exactly M tokens as kept");
        }
        check(annotated == 4, "examples report annotates the requested count");
    }
    check(run("report --kind nonsense --table x --vocab y") == 2, "unknown report kind exits 2");

    std::cout << "probe\n";
    check(run("probe --checkpoint " + W + "/run_drop/checkpoint.bin --vocab " + W +
              "/vocab.tsv --steps 0 --val-examples 200 --train-examples 16",
              W + "/probe.log") == 0,
          "probe exits 0");
    check(slurp(work / "probe.log").find("probe_accuracy=") != std::string::npos, "probe reports accuracy");

    std::cout << "resume\n";
    {
        // pause the same 20-step schedule at step 10, then resume it
        const std::string dir = W + "/run_resume";
        check(run("pretrain" + common + " --variant drop --drop-rate 0.5 --stop-after 10 --out-dir " + dir) ==
                  0,
              "paused leg exits 0");
        check(run("pretrain" + common + " --variant drop --drop-rate 0.5 --resume --out-dir " + dir,
                  W + "/resume.log") == 0,
              "resumed run exits 0");
        auto checksum_of = [](const std::string& s) {
            auto p = s.find("checksum=");
            return p == std::string::npos ? std::string() : s.substr(p, s.find(' ', p) - p);
        };
        check(!checksum_of(slurp(work / "resume.log")).empty() &&
                  checksum_of(slurp(work / "resume.log")) == checksum_of(slurp(work / "pretrain.log")),
              "resumed run reaches the uninterrupted run's checksum");
        check(slurp(work / "run_resume/metrics.jsonl") == slurp(work / "run_drop/metrics.jsonl"),
              "stitched metrics log matches the uninterrupted run");
    }

    std::cout << (g_failures == 0 ? "all CLI checks passed\n" : "CLI checks FAILED\n");
    return g_failures == 0 ? 0 : 1;
}
