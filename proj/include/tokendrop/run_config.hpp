#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tokendrop/encoder.hpp"
#include "tokendrop/importance.hpp"
#include "tokendrop/trainer.hpp"

namespace tokendrop {

// A pretraining method: which rows the encoder reduces and how sequences are
// scored. The selection strategy is ignored by baseline/avg.
struct Method {
    Variant encoder = Variant::baseline;
    SelectionVariant selection = SelectionVariant::cumulative_loss;
};

// Method names accepted by the CLI: baseline, drop, rand, half-rand, freq,
// pass, avg, layer-rearranged.
Method method_from_string(const std::string& name);

// Flat key=value run configuration. Unknown keys are rejected; command-line
// flags override file values.
struct RunConfig {
    std::string corpus;  // comma-separated paths
    std::string vocab_path;
    std::string data_path;
    std::string out_dir = "run";

    int vocab_max_size = 4096;
    int seq_len = 128;
    bool packed = true;

    std::string method = "drop";
    double drop_rate = 0.5;

    int layers = 4;
    int d_model = 128;
    int heads = 2;

    int64_t total_steps = 20000;
    double stage2_fraction = 0.1;
    int batch_size = 32;
    double peak_lr = 1e-4;
    int64_t warmup_steps = -1;
    double weight_decay = 0.01;
    int64_t log_interval = 50;
    int64_t checkpoint_interval = 0;
    int val_sequences = 0;

    double importance_beta = 0.9;
    double importance_default = 10.0;
    double random_fraction = 0.05;

    uint64_t seed = 42;

    void set(const std::string& key, const std::string& value);
    void load_file(const std::string& path);
    void validate() const;

    std::vector<std::string> corpus_paths() const;
    Method resolved_method() const { return method_from_string(method); }
    EncoderConfig encoder_config(int32_t vocab_size) const;
    TrainConfig train_config() const;
    SelectionStrategy strategy() const;
};

}  // namespace tokendrop
