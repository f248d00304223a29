#include "tokendrop/probe.hpp"

#include <algorithm>
#include <cmath>

#include "tokendrop/errors.hpp"
#include "tokendrop/rng.hpp"
#include "tokendrop/tensor.hpp"
#include "tokendrop/trainer.hpp"

namespace tokendrop {

namespace {

struct ProbeExample {
    std::vector<int32_t> tokens;
    int label;  // 1 iff both markers present
};

std::vector<ProbeExample> make_examples(int count, int seq_len, int32_t vocab_size, int32_t marker_a,
                                        int32_t marker_b, Rng& rng) {
    const int32_t regular = vocab_size - special::kFirstRegular;
    std::vector<ProbeExample> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        ProbeExample ex;
        ex.label = i % 2;
        ex.tokens.assign(seq_len, 0);
        ex.tokens[0] = special::kCls;
        ex.tokens[seq_len - 1] = special::kSep;
        for (int t = 1; t < seq_len - 1; ++t) {
            int32_t id;
            do {
                id = special::kFirstRegular + rng.below(regular);
            } while (id == marker_a || id == marker_b);
            ex.tokens[t] = id;
        }
        const int body = seq_len - 2;
        if (ex.label == 1) {
            int pa = 1 + rng.below(body);
            int pb = 1 + rng.below(body);
            while (pb == pa) pb = 1 + rng.below(body);
            ex.tokens[pa] = marker_a;
            ex.tokens[pb] = marker_b;
        } else {
            ex.tokens[1 + rng.below(body)] = (i / 2) % 2 == 0 ? marker_a : marker_b;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

// Forward the [CLS] states of a batch through encoder + classification head.
Tensor& cls_logits(Tape& tape, EncoderModel& model, const std::vector<const ProbeExample*>& batch,
                   Tensor& cls_w, Tensor& cls_b) {
    const int T = model.config.seq_len;
    const int B = static_cast<int>(batch.size());
    std::vector<int> token_idx(static_cast<size_t>(B) * T), pos_idx(static_cast<size_t>(B) * T);
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t) {
            token_idx[static_cast<size_t>(b) * T + t] = batch[b]->tokens[t];
            pos_idx[static_cast<size_t>(b) * T + t] = t;
        }
    Tensor* h = &tape.add(tape.gather_rows(model.tok_embedding, token_idx),
                          tape.gather_rows(model.pos_embedding, pos_idx));
    for (int layer = 0; layer < model.config.layers; ++layer)
        h = &encoder_layer(tape, model.config, model.layers[layer], *h, *h, B, T, T);
    std::vector<int> cls_rows(B);
    for (int b = 0; b < B; ++b) cls_rows[b] = b * T;
    return tape.add_row(tape.matmul(tape.gather_rows(*h, cls_rows), cls_w), cls_b);
}

}  // namespace

double toy_finetune_probe(EncoderModel& model, const Vocabulary& vocab, const ProbeConfig& cfg) {
    if (model.config.vocab_size != vocab.size())
        throw ConfigError("probe: checkpoint vocabulary size does not match the vocabulary file");

    // Fine-tuning always runs the full model.
    const Variant saved = model.config.variant;
    model.config.variant = Variant::baseline;
    model.config.resolve();

    Rng data_rng(mix_seed(cfg.seed, seed_tag::kProbeData));
    const int32_t regular = vocab.size() - special::kFirstRegular;
    if (regular < 16) throw ConfigError("probe needs at least 16 regular vocabulary entries");
    const int32_t marker_a = special::kFirstRegular + data_rng.below(regular);
    int32_t marker_b = marker_a;
    while (marker_b == marker_a) marker_b = special::kFirstRegular + data_rng.below(regular);

    auto train = make_examples(cfg.train_examples, model.config.seq_len, vocab.size(), marker_a, marker_b,
                               data_rng);
    auto val =
        make_examples(cfg.val_examples, model.config.seq_len, vocab.size(), marker_a, marker_b, data_rng);

    Tensor cls_w({model.config.d_model, 2});
    Tensor cls_b({2});
    Rng init_rng(mix_seed(cfg.seed, seed_tag::kProbeInit));
    for (auto& w : cls_w.data) w = static_cast<float>(0.02 * init_rng.normal());

    auto params = model.parameters();
    params.push_back(&cls_w);
    params.push_back(&cls_b);
    AdamW opt(0.9, 0.999, 1e-6, cfg.weight_decay);
    opt.attach(params);

    TrainConfig sched;
    sched.total_steps = std::max(cfg.steps, 1);
    sched.peak_lr = cfg.lr;
    sched.warmup_steps = cfg.steps / 10;

    Tape tape;
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<const ProbeExample*> batch;
        std::vector<int> labels;
        for (int j = 0; j < cfg.batch_size; ++j) {
            const auto& ex = train[(static_cast<size_t>(step) * cfg.batch_size + j) % train.size()];
            batch.push_back(&ex);
            labels.push_back(ex.label);
        }
        tape.clear();
        Tensor& logits = cls_logits(tape, model, batch, cls_w, cls_b);
        auto ce = tape.cross_entropy(logits, labels);
        if (!std::isfinite(ce.loss->data[0])) throw TrainAbort("probe: non-finite loss");
        for (auto* p : params) p->zero_grad();
        tape.backward(*ce.loss);
        opt.step(params, lr_at(step + 1, sched));
    }
    tape.clear();

    int correct = 0;
    for (size_t begin = 0; begin < val.size(); begin += cfg.batch_size) {
        std::vector<const ProbeExample*> batch;
        for (size_t j = begin; j < std::min(val.size(), begin + cfg.batch_size); ++j) batch.push_back(&val[j]);
        tape.clear();
        Tensor& logits = cls_logits(tape, model, batch, cls_w, cls_b);
        for (int r = 0; r < logits.rows(); ++r) {
            int pred = logits.at(r, 1) > logits.at(r, 0) ? 1 : 0;
            correct += pred == batch[r]->label ? 1 : 0;
        }
        tape.clear();
    }

    model.config.variant = saved;
    model.config.resolve();
    return static_cast<double>(correct) / static_cast<double>(val.size());
}

}  // namespace tokendrop
