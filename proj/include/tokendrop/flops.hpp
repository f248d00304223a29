#pragma once

#include <cstdint>

#include "tokendrop/encoder.hpp"

namespace tokendrop {

// Closed-form forward-pass FLOP model, counting multiply-accumulates as 2
// FLOPs for the attention projections/scores and the feed-forward matmuls.
// Layernorm and activations are ignored. Per-layer row counts follow the
// variant: full layers see T rows; at the separation boundary queries shrink
// to M while keys/values stay at T; interior half layers run at M rows for
// drop/avg and keep T-row keys/values for pass.
struct FlopReport {
    uint64_t mlp_flops_baseline = 0;
    uint64_t mlp_flops_actual = 0;
    uint64_t attention_flops_baseline = 0;
    uint64_t attention_flops_actual = 0;
    double savings_fraction_mlp = 0.0;    // 1 - actual/baseline, MLP only
    double savings_fraction_total = 0.0;  // over attention + MLP
};

// M = round((1 - drop_rate) * T) rows survive in half layers (T/2 for avg).
int kept_rows(const EncoderConfig& cfg, double drop_rate);

// Per-sequence forward FLOPs for one encoder pass.
FlopReport account_flops(const EncoderConfig& cfg, double drop_rate);

// Encoder FLOPs for a single sequence with an explicit kept-row count
// (baseline cost is the same formula at kept = T).
uint64_t encoder_flops_per_sequence(const EncoderConfig& cfg, int kept);

}  // namespace tokendrop
