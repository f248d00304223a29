#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tokendrop/errors.hpp"
#include "tokendrop/importance.hpp"
#include "tokendrop/packing.hpp"
#include "tokendrop/rng.hpp"
#include "tokendrop/tensor.hpp"

namespace tokendrop {

enum class Variant {
    baseline,          // every layer processes all T rows
    drop,              // unimportant rows removed from the half-layer block
    pass,              // as drop, but dropped rows stay visible as keys/values
    avg,               // window-2 stride-2 mean pooling instead of dropping
    layer_rearranged,  // the trailing full layer is moved to the bottom
};

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);

// (full layers, half layers) for the given depth. Half layers form one
// contiguous block of size L/2 ending just before the last layer; the
// rearranged variant shifts that block to the very top instead.
std::pair<std::vector<int>, std::vector<int>> layer_schedule(int layers, Variant variant);

struct EncoderConfig {
    int layers = 4;    // encoder depth
    int d_model = 128;
    int heads = 2;
    int seq_len = 128;
    int32_t vocab_size = 0;
    Variant variant = Variant::baseline;
    std::vector<int> full_layers;
    std::vector<int> half_layers;

    int d_k() const { return d_model / heads; }
    int d_ff() const { return 4 * d_model; }

    // Fills the layer sets from layer_schedule and checks all invariants.
    void resolve();
    bool is_half_layer(int layer) const;
    int boundary_layer() const;  // first half layer, -1 if none
    int merge_layer() const;     // first full layer above the block, == layers if none
};

template <typename S>
struct LayerParamsT {
    std::vector<TensorT<S>> wq, wk, wv;  // per head, [d_model x d_k]
    TensorT<S> wo;                       // [h*d_k x d_model]
    TensorT<S> ffn_w1, ffn_b1;           // [d_model x d_ff], [d_ff]
    TensorT<S> ffn_w2, ffn_b2;           // [d_ff x d_model], [d_model]
    TensorT<S> ln1_gain, ln1_bias;
    TensorT<S> ln2_gain, ln2_bias;
};

// Encoder parameters. Token embeddings are tied to the output projection of
// the MLM head; position embeddings are learned and indexed by the original
// position of each token, which gathering preserves.
template <typename S>
struct EncoderModelT {
    EncoderConfig config;
    TensorT<S> tok_embedding;  // [|V| x d_model]
    TensorT<S> pos_embedding;  // [T x d_model]
    std::vector<LayerParamsT<S>> layers;
    TensorT<S> head_w, head_b;  // transform before the tied projection
    TensorT<S> head_ln_gain, head_ln_bias;
    TensorT<S> out_bias;  // [|V|]

    explicit EncoderModelT(EncoderConfig cfg);
    void init_params(uint64_t seed);
    std::vector<TensorT<S>*> parameters();  // declaration order, stable
    int64_t parameter_count();
    void zero_grad();
};

using EncoderModel = EncoderModelT<float>;

// Everything the caller may want to inspect after a forward pass. Tensors
// live on the tape and are valid until it is cleared.
template <typename S>
struct ForwardResultT {
    TensorT<S>* logits = nullptr;       // [sum of mask counts x |V|]
    std::vector<int> labels;            // original ids at the mask positions, aligned with logits rows
    TensorT<S>* final_hidden = nullptr; // [B*T x d_model], original row order
    TensorT<S>* boundary_cache = nullptr;  // output of the layer below the half block
    TensorT<S>* merged_hidden = nullptr;   // T-row state right after merging
    std::vector<TensorT<S>*> layer_outputs;
    const std::vector<DropPlan>* plans = nullptr;
};

// One encoder layer: multi-head attention (queries x_q, keys/values x_kv)
// with residual + layernorm, then the ReLU feed-forward block with residual
// + layernorm. x_q/x_kv hold `batch` stacked blocks of rows_q/rows_kv rows.
template <typename S>
TensorT<S>& encoder_layer(TapeT<S>& tape, const EncoderConfig& cfg, LayerParamsT<S>& p, TensorT<S>& x_q,
                          TensorT<S>& x_kv, int batch, int rows_q, int rows_kv) {
    if (x_q.cols() != cfg.d_model || x_kv.cols() != cfg.d_model)
        throw DimError("encoder_layer: width mismatch, " + x_q.shape_str() + " / " + x_kv.shape_str());
    if (x_q.rows() != batch * rows_q || x_kv.rows() != batch * rows_kv)
        throw DimError("encoder_layer: row count does not factor into batch blocks");

    const S inv_sqrt_dk = S(1) / std::sqrt(static_cast<S>(cfg.d_k()));

    // Head projections over the whole stacked batch.
    std::vector<TensorT<S>*> q_heads(cfg.heads), k_heads(cfg.heads), v_heads(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
        q_heads[h] = &tape.matmul(x_q, p.wq[h]);
        k_heads[h] = &tape.matmul(x_kv, p.wk[h]);
        v_heads[h] = &tape.matmul(x_kv, p.wv[h]);
    }

    // Attention is block-diagonal over the batch.
    std::vector<TensorT<S>*> per_seq(batch);
    for (int b = 0; b < batch; ++b) {
        std::vector<TensorT<S>*> ctx(cfg.heads);
        for (int h = 0; h < cfg.heads; ++h) {
            TensorT<S>& q = tape.slice_rows(*q_heads[h], b * rows_q, rows_q);
            TensorT<S>& k = tape.slice_rows(*k_heads[h], b * rows_kv, rows_kv);
            TensorT<S>& v = tape.slice_rows(*v_heads[h], b * rows_kv, rows_kv);
            TensorT<S>& scores = tape.scale(tape.matmul_nt(q, k), inv_sqrt_dk);
            TensorT<S>& weights = tape.softmax_rows(scores);
            ctx[h] = &tape.matmul(weights, v);
        }
        per_seq[b] = &tape.concat_cols(ctx);
    }
    TensorT<S>& context = batch == 1 ? *per_seq[0] : tape.concat_rows(per_seq);
    TensorT<S>& attn_out = tape.matmul(context, p.wo);
    TensorT<S>& x1 = tape.layernorm(tape.add(x_q, attn_out), p.ln1_gain, p.ln1_bias);

    TensorT<S>& ffn_hidden = tape.relu(tape.add_row(tape.matmul(x1, p.ffn_w1), p.ffn_b1));
    TensorT<S>& ffn_out = tape.add_row(tape.matmul(ffn_hidden, p.ffn_w2), p.ffn_b2);
    return tape.layernorm(tape.add(x1, ffn_out), p.ln2_gain, p.ln2_bias);
}

// Full forward pass over a batch of packed sequences. In stage-1 variants the
// half-layer block runs on the kept (or pooled) rows only:
//   - separation: before the first half layer, query rows for dropped tokens
//     are removed while keys/values stay full-width;
//   - interior half layers run entirely on the reduced row set (token pass
//     keeps the dropped tokens' cached states visible as keys/values);
//   - merging: before the next full layer, dropped rows are restored from the
//     cached outputs of the layer below the block, in original order.
// MLM logits are produced only at mask positions, through a transform head
// and the tied token-embedding projection.
template <typename S>
ForwardResultT<S> encoder_forward(TapeT<S>& tape, EncoderModelT<S>& model,
                                  const std::vector<const PackedSequence*>& batch,
                                  const std::vector<DropPlan>* plans) {
    const EncoderConfig& cfg = model.config;
    const int T = cfg.seq_len;
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw ContractError("encoder_forward: empty batch");
    for (const auto* s : batch)
        if (s->length() != T) throw DimError("encoder_forward: sequence length != " + std::to_string(T));

    const bool reduces = cfg.variant != Variant::baseline;
    const bool uses_plans = cfg.variant == Variant::drop || cfg.variant == Variant::pass ||
                            cfg.variant == Variant::layer_rearranged;

    int kept = T;
    std::vector<int> keep_global, drop_global;
    if (uses_plans) {
        if (plans == nullptr || static_cast<int>(plans->size()) != B)
            throw ContractError("encoder_forward: variant requires one drop plan per sequence");
        kept = (*plans)[0].kept;
        for (const auto& plan : *plans)
            if (plan.kept != kept)
                throw ContractError("encoder_forward: kept count must be uniform across the batch");
        keep_global.reserve(static_cast<size_t>(B) * kept);
        drop_global.reserve(static_cast<size_t>(B) * (T - kept));
        for (int b = 0; b < B; ++b) {
            for (int i : (*plans)[b].keep_idx) keep_global.push_back(b * T + i);
            for (int i : (*plans)[b].drop_idx) drop_global.push_back(b * T + i);
        }
    } else if (cfg.variant == Variant::baseline && plans != nullptr) {
        for (const auto& plan : *plans)
            if (plan.kept != T) throw ContractError("baseline forward requires all-keep plans");
    } else if (cfg.variant == Variant::avg) {
        if (T % 2 != 0) throw ConfigError("avg variant requires an even sequence length");
        kept = T / 2;
    }

    // Input embeddings: token row + position row.
    std::vector<int> token_idx(static_cast<size_t>(B) * T), pos_idx(static_cast<size_t>(B) * T);
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < T; ++t) {
            token_idx[static_cast<size_t>(b) * T + t] = batch[b]->tokens[t];
            pos_idx[static_cast<size_t>(b) * T + t] = t;
        }
    TensorT<S>* h = &tape.add(tape.gather_rows(model.tok_embedding, token_idx),
                              tape.gather_rows(model.pos_embedding, pos_idx));

    ForwardResultT<S> result;
    result.plans = plans;
    result.layer_outputs.reserve(cfg.layers);

    const int boundary = cfg.boundary_layer();
    const int merge_at = cfg.merge_layer();
    TensorT<S>* cache = nullptr;  // output of the layer just below the half block
    int rows = T;                 // query rows carried by `h`

    auto merge_back = [&]() {
        if (cfg.variant == Variant::avg) {
            h = &tape.add(tape.unpool_pair_rows(*h), *cache);
        } else {
            TensorT<S>& dropped = tape.gather_rows(*cache, drop_global);
            h = &tape.merge_rows(*h, dropped, keep_global, drop_global);
        }
        result.merged_hidden = h;
        rows = T;
    };

    for (int layer = 0; layer < cfg.layers; ++layer) {
        if (layer == merge_at) merge_back();
        if (reduces && layer == boundary) {
            cache = h;
            TensorT<S>* hq = cfg.variant == Variant::avg ? &tape.pool_pair_rows(*h)
                                                         : &tape.gather_rows(*h, keep_global);
            h = &encoder_layer(tape, cfg, model.layers[layer], *hq, *cache, B, kept, T);
            rows = kept;
        } else if (reduces && cfg.is_half_layer(layer)) {
            if (cfg.variant == Variant::pass) {
                // Dropped tokens stay visible: their key/value rows come from
                // the cached pre-block states.
                TensorT<S>& dropped = tape.gather_rows(*cache, drop_global);
                TensorT<S>& kv = tape.merge_rows(*h, dropped, keep_global, drop_global);
                h = &encoder_layer(tape, cfg, model.layers[layer], *h, kv, B, kept, T);
            } else {
                h = &encoder_layer(tape, cfg, model.layers[layer], *h, *h, B, kept, kept);
            }
        } else {
            h = &encoder_layer(tape, cfg, model.layers[layer], *h, *h, B, rows, rows);
        }
        result.layer_outputs.push_back(h);
    }
    if (merge_at == cfg.layers && cache != nullptr) merge_back();

    result.final_hidden = h;
    result.boundary_cache = cache;

    // MLM head at the mask positions only.
    std::vector<int> mask_global;
    for (int b = 0; b < B; ++b)
        for (size_t k = 0; k < batch[b]->mask_positions.size(); ++k) {
            mask_global.push_back(b * T + batch[b]->mask_positions[k]);
            result.labels.push_back(batch[b]->mask_labels[k]);
        }
    if (!mask_global.empty()) {
        TensorT<S>& masked = tape.gather_rows(*h, mask_global);
        TensorT<S>& transformed = tape.layernorm(
            tape.relu(tape.add_row(tape.matmul(masked, model.head_w), model.head_b)), model.head_ln_gain,
            model.head_ln_bias);
        result.logits = &tape.add_row(tape.matmul_nt(transformed, model.tok_embedding), model.out_bias);
    }
    return result;
}

// ---- implementation ------------------------------------------------------

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::drop: return "drop";
        case Variant::pass: return "pass";
        case Variant::avg: return "avg";
        case Variant::layer_rearranged: return "layer-rearranged";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& name) {
    if (name == "baseline") return Variant::baseline;
    if (name == "drop") return Variant::drop;
    if (name == "pass") return Variant::pass;
    if (name == "avg") return Variant::avg;
    if (name == "layer-rearranged" || name == "layer_rearranged") return Variant::layer_rearranged;
    throw ConfigError("unknown encoder variant: " + name);
}

inline std::pair<std::vector<int>, std::vector<int>> layer_schedule(int layers, Variant variant) {
    std::vector<int> full, half;
    if (variant == Variant::baseline) {
        for (int i = 0; i < layers; ++i) full.push_back(i);
        return {full, half};
    }
    if (layers < 2 || layers % 2 != 0)
        throw ConfigError("token-reducing variants need an even layer count >= 2, got " +
                          std::to_string(layers));
    const int n_half = layers / 2;
    if (variant == Variant::layer_rearranged) {
        for (int i = 0; i < n_half; ++i) full.push_back(i);
        for (int i = n_half; i < layers; ++i) half.push_back(i);
    } else {
        for (int i = 0; i < n_half - 1; ++i) full.push_back(i);
        for (int i = n_half - 1; i < layers - 1; ++i) half.push_back(i);
        full.push_back(layers - 1);
    }
    return {full, half};
}

inline void EncoderConfig::resolve() {
    if (layers < 1) throw ConfigError("encoder needs at least one layer");
    if (d_model < 1 || heads < 1 || d_model % heads != 0)
        throw ConfigError("d_model (" + std::to_string(d_model) + ") must be divisible by heads (" +
                          std::to_string(heads) + ")");
    if (seq_len < 2) throw ConfigError("sequence length must be at least 2");
    if (vocab_size < special::kFirstRegular) throw ConfigError("vocab_size not set");
    if (variant == Variant::avg && seq_len % 2 != 0)
        throw ConfigError("avg variant requires an even sequence length");
    std::tie(full_layers, half_layers) = layer_schedule(layers, variant);
}

inline bool EncoderConfig::is_half_layer(int layer) const {
    for (int h : half_layers)
        if (h == layer) return true;
    return false;
}

inline int EncoderConfig::boundary_layer() const { return half_layers.empty() ? -1 : half_layers.front(); }

inline int EncoderConfig::merge_layer() const {
    return half_layers.empty() ? -1 : half_layers.back() + 1;
}

template <typename S>
EncoderModelT<S>::EncoderModelT(EncoderConfig cfg) : config(std::move(cfg)) {
    config.resolve();
    tok_embedding = TensorT<S>({config.vocab_size, config.d_model});
    pos_embedding = TensorT<S>({config.seq_len, config.d_model});
    layers.resize(config.layers);
    for (auto& l : layers) {
        l.wq.assign(config.heads, TensorT<S>({config.d_model, config.d_k()}));
        l.wk.assign(config.heads, TensorT<S>({config.d_model, config.d_k()}));
        l.wv.assign(config.heads, TensorT<S>({config.d_model, config.d_k()}));
        l.wo = TensorT<S>({config.heads * config.d_k(), config.d_model});
        l.ffn_w1 = TensorT<S>({config.d_model, config.d_ff()});
        l.ffn_b1 = TensorT<S>({config.d_ff()});
        l.ffn_w2 = TensorT<S>({config.d_ff(), config.d_model});
        l.ffn_b2 = TensorT<S>({config.d_model});
        l.ln1_gain = TensorT<S>({config.d_model});
        l.ln1_bias = TensorT<S>({config.d_model});
        l.ln2_gain = TensorT<S>({config.d_model});
        l.ln2_bias = TensorT<S>({config.d_model});
    }
    head_w = TensorT<S>({config.d_model, config.d_model});
    head_b = TensorT<S>({config.d_model});
    head_ln_gain = TensorT<S>({config.d_model});
    head_ln_bias = TensorT<S>({config.d_model});
    out_bias = TensorT<S>({config.vocab_size});
}

template <typename S>
void EncoderModelT<S>::init_params(uint64_t seed) {
    Rng rng(mix_seed(seed, seed_tag::kInit));
    auto fill_normal = [&](TensorT<S>& t) {
        for (auto& v : t.data) v = static_cast<S>(0.02 * rng.normal());
    };
    auto fill_const = [](TensorT<S>& t, S c) { std::fill(t.data.begin(), t.data.end(), c); };

    fill_normal(tok_embedding);
    fill_normal(pos_embedding);
    for (auto& l : layers) {
        for (auto& w : l.wq) fill_normal(w);
        for (auto& w : l.wk) fill_normal(w);
        for (auto& w : l.wv) fill_normal(w);
        fill_normal(l.wo);
        fill_normal(l.ffn_w1);
        fill_const(l.ffn_b1, S(0));
        fill_normal(l.ffn_w2);
        fill_const(l.ffn_b2, S(0));
        fill_const(l.ln1_gain, S(1));
        fill_const(l.ln1_bias, S(0));
        fill_const(l.ln2_gain, S(1));
        fill_const(l.ln2_bias, S(0));
    }
    fill_normal(head_w);
    fill_const(head_b, S(0));
    fill_const(head_ln_gain, S(1));
    fill_const(head_ln_bias, S(0));
    fill_const(out_bias, S(0));
}

template <typename S>
std::vector<TensorT<S>*> EncoderModelT<S>::parameters() {
    std::vector<TensorT<S>*> out;
    out.push_back(&tok_embedding);
    out.push_back(&pos_embedding);
    for (auto& l : layers) {
        for (auto& w : l.wq) out.push_back(&w);
        for (auto& w : l.wk) out.push_back(&w);
        for (auto& w : l.wv) out.push_back(&w);
        out.push_back(&l.wo);
        out.push_back(&l.ffn_w1);
        out.push_back(&l.ffn_b1);
        out.push_back(&l.ffn_w2);
        out.push_back(&l.ffn_b2);
        out.push_back(&l.ln1_gain);
        out.push_back(&l.ln1_bias);
        out.push_back(&l.ln2_gain);
        out.push_back(&l.ln2_bias);
    }
    out.push_back(&head_w);
    out.push_back(&head_b);
    out.push_back(&head_ln_gain);
    out.push_back(&head_ln_bias);
    out.push_back(&out_bias);
    return out;
}

template <typename S>
int64_t EncoderModelT<S>::parameter_count() {
    int64_t n = 0;
    for (auto* p : parameters()) n += p->numel();
    return n;
}

template <typename S>
void EncoderModelT<S>::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

// Checkpoint: header {magic, version, layers, d_model, heads, seq_len,
// vocab_size, variant}, then float32 parameters in declaration order.
void save_checkpoint(EncoderModelT<float>& model, const std::string& path);
EncoderModelT<float> load_checkpoint(const std::string& path);

}  // namespace tokendrop
