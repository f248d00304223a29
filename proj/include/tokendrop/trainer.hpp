#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tokendrop/encoder.hpp"
#include "tokendrop/flops.hpp"
#include "tokendrop/importance.hpp"
#include "tokendrop/packing.hpp"
#include "tokendrop/vocab.hpp"

namespace tokendrop {

struct TrainConfig {
    int64_t total_steps = 20000;
    double stage2_fraction = 0.1;  // trailing fraction trained without dropping
    int batch_size = 32;
    double peak_lr = 1e-4;
    int64_t warmup_steps = -1;  // -1: 1% of total_steps
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-6;
    double drop_rate = 0.5;  // one of {0, 0.25, 0.5, 0.625, 0.75}
    double importance_beta = 0.9;
    double importance_default = 10.0;
    double random_fraction = 0.05;
    uint64_t seed = 42;
    int64_t log_interval = 50;
    int64_t checkpoint_interval = 0;  // 0: final only
    int val_sequences = 0;            // reserved from the head of the dataset

    void validate() const;
    int64_t resolved_warmup() const;
    int64_t stage2_steps() const;
    int64_t stage1_steps() const { return total_steps - stage2_steps(); }
};

// Linear ramp 0 -> peak over the warmup, then linear decay hitting exactly 0
// at total_steps.
double lr_at(int64_t step, const TrainConfig& cfg);

// AdamW with decoupled weight decay: the decay term scales with lr but not
// with the gradient moments.
class AdamW {
public:
    AdamW(double beta1, double beta2, double eps, double weight_decay);
    void attach(const std::vector<Tensor*>& params);
    void step(const std::vector<Tensor*>& params, double lr);
    int64_t steps_taken() const { return t_; }

    // serialized by the trainer for resume
    int64_t t_ = 0;
    std::vector<std::vector<float>> m_, v_;

private:
    double beta1_, beta2_, eps_, wd_;
};

struct StepStats {
    int64_t step = 0;
    int stage = 1;
    double mlm_loss = 0.0;
    double lr = 0.0;
    uint64_t flops = 0;
    double tokens_kept_fraction = 1.0;
};

// Owns the model, optimizer state, importance table and data for one
// pretraining run. All randomness derives from config.seed, so a run is a
// pure function of (config, data) and can be resumed bit-exactly.
class Trainer {
public:
    Trainer(EncoderConfig encoder_cfg, TrainConfig cfg, SelectionStrategy strategy, const Vocabulary& vocab,
            std::vector<PackedSequence> data);

    // One optimizer step: plan -> forward -> loss -> backward -> AdamW ->
    // importance update -> FLOP accounting. Throws TrainAbort on non-finite
    // loss after writing a diagnostic checkpoint.
    StepStats train_step();

    // Full run: stage-1 steps with dropping, then stage-2 without. Emits
    // JSON-line metrics every log_interval steps and checkpoints at
    // checkpoint_interval. stop_after >= 0 pauses the run at that step (the
    // run state is saved and can be resumed). Returns the final validation
    // MLM loss if val_sequences > 0 and the run completed.
    std::optional<double> run(std::ostream* metrics, const std::string& out_dir, int64_t stop_after = -1);

    // Mean full-sequence MLM NLL over the validation split (no dropping).
    double evaluate_validation();

    int64_t step() const { return step_; }
    uint64_t flops_cumulative() const { return flops_; }
    EncoderModel& model() { return model_; }
    ImportanceTable& importance() { return table_; }
    const TrainConfig& config() const { return cfg_; }
    uint64_t parameter_checksum();

    void save_run_state(const std::string& out_dir);
    void load_run_state(const std::string& out_dir);

private:
    PackedBatch assemble_batch(int64_t step);
    std::vector<DropPlan> build_plans(const PackedBatch& batch, int64_t step);
    void write_metrics_header(std::ostream& os) const;
    void write_metrics_row(std::ostream& os, const StepStats& s) const;
    void diagnostic_dump(const std::string& reason);

    TrainConfig cfg_;
    SelectionStrategy strategy_;
    const Vocabulary& vocab_;
    EncoderModel model_;
    AdamW opt_;
    ImportanceTable table_;
    std::vector<PackedSequence> data_;
    Tape tape_;
    int64_t step_ = 0;
    uint64_t flops_ = 0;
    std::string out_dir_ = ".";
};

uint64_t fnv1a(const void* data, size_t bytes, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace tokendrop
