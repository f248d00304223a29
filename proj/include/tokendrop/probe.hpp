#pragma once

#include <cstdint>

#include "tokendrop/encoder.hpp"
#include "tokendrop/vocab.hpp"

namespace tokendrop {

// Synthetic full-sequence classification: does a fixed marker-token pair
// co-occur in the sequence? Positives carry both markers, negatives exactly
// one, so bag-of-one-marker features are uninformative and the classifier
// has to aggregate over positions. Fine-tuning updates all encoder
// parameters plus a fresh [CLS] head; no token dropping is applied.
struct ProbeConfig {
    int train_examples = 4096;
    int val_examples = 1000;
    int steps = 1200;  // 0: evaluate the randomly initialized head only
    int batch_size = 16;
    double lr = 3e-4;
    double weight_decay = 0.01;
    uint64_t seed = 7;
};

// Returns validation accuracy in [0, 1].
double toy_finetune_probe(EncoderModel& model, const Vocabulary& vocab, const ProbeConfig& cfg);

}  // namespace tokendrop
