#include "tokendrop/flops.hpp"

#include <cmath>

namespace tokendrop {

namespace {

uint64_t mlp_flops(const EncoderConfig& cfg, uint64_t rows) {
    // Two matmuls: [rows x d] * [d x d_ff] and [rows x d_ff] * [d_ff x d].
    return 2 * rows * (static_cast<uint64_t>(cfg.d_model) * cfg.d_ff() + static_cast<uint64_t>(cfg.d_ff()) * cfg.d_model);
}

uint64_t attention_flops(const EncoderConfig& cfg, uint64_t rows_q, uint64_t rows_kv) {
    const uint64_t d = cfg.d_model;
    uint64_t proj = 2 * rows_q * d * d      // Q
                    + 2 * rows_kv * d * d   // K
                    + 2 * rows_kv * d * d   // V
                    + 2 * rows_q * d * d;   // output
    uint64_t scores = 2 * rows_q * rows_kv * d;  // summed over heads
    uint64_t apply = 2 * rows_q * rows_kv * d;
    return proj + scores + apply;
}

}  // namespace

int kept_rows(const EncoderConfig& cfg, double drop_rate) {
    if (cfg.variant == Variant::baseline) return cfg.seq_len;
    if (cfg.variant == Variant::avg) return cfg.seq_len / 2;
    return static_cast<int>(std::lround((1.0 - drop_rate) * cfg.seq_len));
}

uint64_t encoder_flops_per_sequence(const EncoderConfig& cfg, int kept) {
    const uint64_t T = cfg.seq_len;
    const uint64_t M = kept;
    const int boundary = cfg.boundary_layer();
    uint64_t total = 0;
    for (int layer = 0; layer < cfg.layers; ++layer) {
        if (!cfg.is_half_layer(layer) || M == T) {
            total += attention_flops(cfg, T, T) + mlp_flops(cfg, T);
        } else if (layer == boundary || cfg.variant == Variant::pass) {
            total += attention_flops(cfg, M, T) + mlp_flops(cfg, M);
        } else {
            total += attention_flops(cfg, M, M) + mlp_flops(cfg, M);
        }
    }
    return total;
}

FlopReport account_flops(const EncoderConfig& cfg, double drop_rate) {
    const uint64_t T = cfg.seq_len;
    const uint64_t M = kept_rows(cfg, drop_rate);
    const int boundary = cfg.boundary_layer();

    FlopReport r;
    for (int layer = 0; layer < cfg.layers; ++layer) {
        r.mlp_flops_baseline += mlp_flops(cfg, T);
        r.attention_flops_baseline += attention_flops(cfg, T, T);
        if (!cfg.is_half_layer(layer) || M == T) {
            r.mlp_flops_actual += mlp_flops(cfg, T);
            r.attention_flops_actual += attention_flops(cfg, T, T);
        } else if (layer == boundary || cfg.variant == Variant::pass) {
            r.mlp_flops_actual += mlp_flops(cfg, M);
            r.attention_flops_actual += attention_flops(cfg, M, T);
        } else {
            r.mlp_flops_actual += mlp_flops(cfg, M);
            r.attention_flops_actual += attention_flops(cfg, M, M);
        }
    }
    r.savings_fraction_mlp =
        1.0 - static_cast<double>(r.mlp_flops_actual) / static_cast<double>(r.mlp_flops_baseline);
    r.savings_fraction_total =
        1.0 - static_cast<double>(r.mlp_flops_actual + r.attention_flops_actual) /
                  static_cast<double>(r.mlp_flops_baseline + r.attention_flops_baseline);
    return r;
}

}  // namespace tokendrop
