#include "tokendrop/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tokendrop/errors.hpp"
#include "tokendrop/io.hpp"
#include "tokendrop/rng.hpp"

namespace tokendrop {

namespace {
constexpr uint32_t kStateMagic = 0x53544454;  // "TDTS"
constexpr uint32_t kStateVersion = 1;

const double kDropRateChoices[] = {0.0, 0.25, 0.5, 0.625, 0.75};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}
}  // namespace

uint64_t fnv1a(const void* data, size_t bytes, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

void TrainConfig::validate() const {
    if (total_steps < 1) throw ConfigError("total_steps must be positive");
    if (!(stage2_fraction >= 0.0 && stage2_fraction < 1.0))
        throw ConfigError("stage2_fraction must lie in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (peak_lr <= 0.0) throw ConfigError("peak_lr must be positive");
    if (log_interval < 1) throw ConfigError("log_interval must be positive");
    bool ok = false;
    for (double r : kDropRateChoices)
        if (std::abs(drop_rate - r) < 1e-12) ok = true;
    if (!ok) throw ConfigError("drop_rate must be one of 0, 0.25, 0.5, 0.625, 0.75");
    if (resolved_warmup() >= total_steps) throw ConfigError("warmup_steps must be below total_steps");
}

int64_t TrainConfig::resolved_warmup() const {
    return warmup_steps >= 0 ? warmup_steps : total_steps / 100;
}

int64_t TrainConfig::stage2_steps() const {
    return static_cast<int64_t>(std::llround(stage2_fraction * static_cast<double>(total_steps)));
}

double lr_at(int64_t step, const TrainConfig& cfg) {
    if (step < 0 || step > cfg.total_steps) throw ContractError("lr_at: step outside [0, total_steps]");
    const int64_t warmup = cfg.resolved_warmup();
    if (step <= warmup)
        return warmup == 0 ? cfg.peak_lr : cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
    return cfg.peak_lr * static_cast<double>(cfg.total_steps - step) /
           static_cast<double>(cfg.total_steps - warmup);
}

AdamW::AdamW(double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

void AdamW::attach(const std::vector<Tensor*>& params) {
    m_.clear();
    v_.clear();
    for (auto* p : params) {
        m_.emplace_back(p->numel(), 0.0f);
        v_.emplace_back(p->numel(), 0.0f);
    }
}

void AdamW::step(const std::vector<Tensor*>& params, double lr) {
    if (m_.size() != params.size()) throw ContractError("optimizer not attached to these parameters");
    t_ += 1;
    const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t_));
    const float flr = static_cast<float>(lr), feps = static_cast<float>(eps_), fwd = static_cast<float>(wd_);
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        if (p.grad.empty()) p.ensure_grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t k = 0; k < p.data.size(); ++k) {
            const float g = p.grad[k];
            m[k] = b1 * m[k] + (1.0f - b1) * g;
            v[k] = b2 * v[k] + (1.0f - b2) * g * g;
            const float mhat = m[k] / bc1;
            const float vhat = v[k] / bc2;
            p.data[k] -= flr * (mhat / (std::sqrt(vhat) + feps)) + flr * fwd * p.data[k];
        }
    }
}

Trainer::Trainer(EncoderConfig encoder_cfg, TrainConfig cfg, SelectionStrategy strategy,
                 const Vocabulary& vocab, std::vector<PackedSequence> data)
    : cfg_(cfg),
      strategy_(strategy),
      vocab_(vocab),
      model_((encoder_cfg.vocab_size = vocab.size(), encoder_cfg)),
      opt_(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay),
      table_(vocab.size(), cfg.importance_beta, cfg.importance_default),
      data_(std::move(data)) {
    cfg_.validate();
    if (data_.empty()) throw ContractError("trainer needs a non-empty dataset");
    if (cfg_.val_sequences >= static_cast<int>(data_.size()))
        throw ConfigError("val_sequences leaves no training data");
    for (const auto& s : data_)
        if (s.length() != model_.config.seq_len)
            throw ContractError("dataset sequence length does not match encoder seq_len");
    strategy_.rng_seed = cfg_.seed;
    model_.init_params(cfg_.seed);
    opt_.attach(model_.parameters());
}

PackedBatch Trainer::assemble_batch(int64_t step) {
    PackedBatch batch;
    const int64_t n_train = static_cast<int64_t>(data_.size()) - cfg_.val_sequences;
    batch.sequences.reserve(cfg_.batch_size);
    for (int j = 0; j < cfg_.batch_size; ++j) {
        const int64_t idx = cfg_.val_sequences + (step * cfg_.batch_size + j) % n_train;
        batch.sequences.push_back(
            apply_mlm_mask(data_[idx], vocab_, mix_seed(cfg_.seed, seed_tag::kMask, step, j)));
    }
    batch.validate();
    return batch;
}

std::vector<DropPlan> Trainer::build_plans(const PackedBatch& batch, int64_t step) {
    const int kept = kept_rows(model_.config, cfg_.drop_rate);
    std::vector<DropPlan> plans;
    plans.reserve(batch.sequences.size());
    for (size_t j = 0; j < batch.sequences.size(); ++j) {
        Rng rng(mix_seed(cfg_.seed, seed_tag::kPlan, step, j));
        const auto& seq = batch.sequences[j];
        auto scores = score_sequence(seq, table_, vocab_, strategy_, rng);
        plans.push_back(build_drop_plan(scores, special_position_mask(seq), kept, strategy_, rng));
    }
    return plans;
}

StepStats Trainer::train_step() {
    const bool stage2 = step_ >= cfg_.stage1_steps();
    const bool plan_driven = model_.config.variant == Variant::drop ||
                             model_.config.variant == Variant::pass ||
                             model_.config.variant == Variant::layer_rearranged;
    // Rate 0 keeps every row; run the plain path so the step is identical to
    // a baseline step down to the bit.
    const bool full_width =
        plan_driven && kept_rows(model_.config, cfg_.drop_rate) == model_.config.seq_len;

    PackedBatch batch = assemble_batch(step_);
    auto views = batch.views();

    StepStats stats;
    stats.step = step_;
    stats.stage = stage2 ? 2 : 1;
    stats.lr = lr_at(step_ + 1, cfg_);

    tape_.clear();
    CrossEntropyOut<float> ce;
    std::vector<int> labels;
    int kept = model_.config.seq_len;

    if (stage2 || full_width || model_.config.variant == Variant::baseline) {
        // Full model, no reduction; the importance table is not consulted.
        const Variant saved = model_.config.variant;
        model_.config.variant = Variant::baseline;
        model_.config.resolve();
        auto fwd = encoder_forward(tape_, model_, views, nullptr);
        model_.config.variant = saved;
        model_.config.resolve();
        ce = tape_.cross_entropy(*fwd.logits, fwd.labels);
        labels = std::move(fwd.labels);
    } else if (plan_driven) {
        auto plans = build_plans(batch, step_);
        kept = plans[0].kept;
        auto fwd = encoder_forward(tape_, model_, views, &plans);
        ce = tape_.cross_entropy(*fwd.logits, fwd.labels);
        labels = std::move(fwd.labels);
    } else {  // avg: reduction without plans
        kept = model_.config.seq_len / 2;
        auto fwd = encoder_forward(tape_, model_, views, nullptr);
        ce = tape_.cross_entropy(*fwd.logits, fwd.labels);
        labels = std::move(fwd.labels);
    }

    stats.mlm_loss = ce.loss->data[0];
    if (!std::isfinite(stats.mlm_loss)) {
        diagnostic_dump("non-finite MLM loss at step " + std::to_string(step_));
        throw TrainAbort("non-finite MLM loss at step " + std::to_string(step_) +
                         "; diagnostic checkpoint written to " + out_dir_);
    }

    model_.zero_grad();
    tape_.backward(*ce.loss);
    auto params = model_.parameters();
    opt_.step(params, stats.lr);

    // Eq-style cumulative-loss update, one event per masked position in
    // sequence/position order.
    std::vector<std::pair<int32_t, double>> events;
    events.reserve(labels.size());
    for (size_t i = 0; i < labels.size(); ++i)
        events.emplace_back(labels[i], static_cast<double>(ce.per_position[i]));
    table_.update(events);

    const int flop_rows = (stage2 || model_.config.variant == Variant::baseline) ? model_.config.seq_len : kept;
    stats.flops = static_cast<uint64_t>(batch.sequences.size()) *
                  encoder_flops_per_sequence(model_.config, flop_rows);
    stats.tokens_kept_fraction =
        static_cast<double>(flop_rows) / static_cast<double>(model_.config.seq_len);
    flops_ += stats.flops;
    step_ += 1;
    tape_.clear();
    return stats;
}

double Trainer::evaluate_validation() {
    if (cfg_.val_sequences == 0) throw ContractError("no validation split configured");
    const Variant saved = model_.config.variant;
    model_.config.variant = Variant::baseline;
    model_.config.resolve();

    double total = 0.0;
    int64_t count = 0;
    for (int begin = 0; begin < cfg_.val_sequences; begin += cfg_.batch_size) {
        const int n = std::min(cfg_.batch_size, cfg_.val_sequences - begin);
        PackedBatch batch;
        for (int j = 0; j < n; ++j)
            batch.sequences.push_back(
                apply_mlm_mask(data_[begin + j], vocab_, mix_seed(cfg_.seed, seed_tag::kValMask, begin + j)));
        auto views = batch.views();
        tape_.clear();
        auto fwd = encoder_forward(tape_, model_, views, nullptr);
        auto ce = tape_.cross_entropy(*fwd.logits, fwd.labels);
        for (float l : ce.per_position) total += l;
        count += static_cast<int64_t>(ce.per_position.size());
        tape_.clear();
    }

    model_.config.variant = saved;
    model_.config.resolve();
    return total / static_cast<double>(count);
}

void Trainer::write_metrics_header(std::ostream& os) const {
    os << "{\"record\":\"header\",\"seed\":" << cfg_.seed << ",\"variant\":\""
       << to_string(model_.config.variant) << "\",\"strategy\":\"" << to_string(strategy_.variant)
       << "\",\"drop_rate\":" << fmt_double(cfg_.drop_rate) << ",\"total_steps\":" << cfg_.total_steps
       << ",\"stage2_fraction\":" << fmt_double(cfg_.stage2_fraction)
       << ",\"batch_size\":" << cfg_.batch_size << ",\"layers\":" << model_.config.layers
       << ",\"d_model\":" << model_.config.d_model << ",\"seq_len\":" << model_.config.seq_len << "}\n";
}

void Trainer::write_metrics_row(std::ostream& os, const StepStats& s) const {
    os << "{\"step\":" << s.step << ",\"stage\":" << s.stage << ",\"mlm_loss\":" << fmt_double(s.mlm_loss)
       << ",\"lr\":" << fmt_double(s.lr) << ",\"flops_cumulative\":" << flops_
       << ",\"tokens_kept_fraction\":" << fmt_double(s.tokens_kept_fraction) << "}\n";
}

std::optional<double> Trainer::run(std::ostream* metrics, const std::string& out_dir, int64_t stop_after) {
    out_dir_ = out_dir;
    std::filesystem::create_directories(out_dir);
    const int64_t limit = stop_after < 0 ? cfg_.total_steps : std::min(stop_after, cfg_.total_steps);
    if (metrics && step_ == 0) write_metrics_header(*metrics);
    while (step_ < limit) {
        StepStats s = train_step();
        if (metrics && (s.step + 1) % cfg_.log_interval == 0) {
            write_metrics_row(*metrics, s);
            metrics->flush();
        }
        if (cfg_.checkpoint_interval > 0 && (s.step + 1) % cfg_.checkpoint_interval == 0 &&
            step_ < cfg_.total_steps)
            save_run_state(out_dir);
    }
    save_run_state(out_dir);
    if (step_ < cfg_.total_steps) return std::nullopt;  // paused; resume later
    if (cfg_.val_sequences > 0) {
        const double val = evaluate_validation();
        if (metrics) {
            *metrics << "{\"record\":\"final\",\"val_mlm_loss\":" << fmt_double(val)
                     << ",\"val_sequences\":" << cfg_.val_sequences << ",\"flops_cumulative\":" << flops_
                     << "}\n";
            metrics->flush();
        }
        return val;
    }
    return std::nullopt;
}

uint64_t Trainer::parameter_checksum() {
    uint64_t h = 0xcbf29ce484222325ull;
    for (auto* p : model_.parameters()) h = fnv1a(p->data.data(), p->data.size() * sizeof(float), h);
    return h;
}

void Trainer::save_run_state(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(model_, out_dir + "/checkpoint.bin");
    table_.save(out_dir + "/importance.bin");
    auto os = open_out(out_dir + "/trainstate.bin");
    write_le<uint32_t>(os, kStateMagic);
    write_le<uint32_t>(os, kStateVersion);
    write_le<uint64_t>(os, static_cast<uint64_t>(step_));
    write_le<uint64_t>(os, static_cast<uint64_t>(opt_.t_));
    write_le<uint64_t>(os, flops_);
    write_le<uint64_t>(os, static_cast<uint64_t>(opt_.m_.size()));
    for (auto& m : opt_.m_) write_vec(os, m);
    for (auto& v : opt_.v_) write_vec(os, v);
}

void Trainer::load_run_state(const std::string& out_dir) {
    {
        EncoderModel loaded = load_checkpoint(out_dir + "/checkpoint.bin");
        auto src = loaded.parameters();
        auto dst = model_.parameters();
        if (src.size() != dst.size()) throw IoError("resume: checkpoint does not match this model");
        for (size_t i = 0; i < src.size(); ++i) {
            if (src[i]->shape != dst[i]->shape) throw IoError("resume: parameter shape mismatch");
            dst[i]->data = src[i]->data;
        }
    }
    table_ = ImportanceTable::load(out_dir + "/importance.bin");
    if (table_.size() != vocab_.size()) throw IoError("resume: importance table size mismatch");
    auto is = open_in(out_dir + "/trainstate.bin");
    if (read_le<uint32_t>(is) != kStateMagic) throw IoError("not a train-state file");
    if (read_le<uint32_t>(is) != kStateVersion) throw IoError("unsupported train-state version");
    step_ = static_cast<int64_t>(read_le<uint64_t>(is));
    opt_.t_ = static_cast<int64_t>(read_le<uint64_t>(is));
    flops_ = read_le<uint64_t>(is);
    uint64_t groups = read_le<uint64_t>(is);
    if (groups != opt_.m_.size()) throw IoError("resume: optimizer state does not match this model");
    for (auto& m : opt_.m_) read_vec(is, m);
    for (auto& v : opt_.v_) read_vec(is, v);
}

void Trainer::diagnostic_dump(const std::string& reason) {
    try {
        std::filesystem::create_directories(out_dir_);
        save_checkpoint(model_, out_dir_ + "/diagnostic_checkpoint.bin");
        table_.save(out_dir_ + "/diagnostic_importance.bin");
        std::ofstream os(out_dir_ + "/diagnostic.txt");
        os << reason << "\nstep=" << step_ << "\n";
    } catch (const std::exception& e) {
        std::cerr << "diagnostic dump failed: " << e.what() << "\n";
    }
}

}  // namespace tokendrop
