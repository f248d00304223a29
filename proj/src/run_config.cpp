#include "tokendrop/run_config.hpp"

#include <fstream>
#include <sstream>

#include "tokendrop/errors.hpp"

namespace tokendrop {

Method method_from_string(const std::string& name) {
    if (name == "baseline") return {Variant::baseline, SelectionVariant::cumulative_loss};
    if (name == "drop") return {Variant::drop, SelectionVariant::cumulative_loss};
    if (name == "rand") return {Variant::drop, SelectionVariant::random};
    if (name == "half-rand" || name == "half_rand")
        return {Variant::drop, SelectionVariant::cumulative_loss_half_random};
    if (name == "freq") return {Variant::drop, SelectionVariant::frequency};
    if (name == "pass") return {Variant::pass, SelectionVariant::cumulative_loss};
    if (name == "avg") return {Variant::avg, SelectionVariant::cumulative_loss};
    if (name == "layer-rearranged" || name == "layer_rearranged")
        return {Variant::layer_rearranged, SelectionVariant::cumulative_loss};
    throw ConfigError("unknown method: " + name +
                      " (expected baseline|drop|rand|half-rand|freq|pass|avg|layer-rearranged)");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key " + key + " expects a boolean, got '" + v + "'");
}

template <typename T>
T parse_num(const std::string& key, const std::string& v) {
    std::istringstream is(v);
    T out;
    is >> out;
    if (is.fail() || !is.eof()) throw ConfigError("key " + key + " expects a number, got '" + v + "'");
    return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "corpus") corpus = value;
    else if (key == "vocab") vocab_path = value;
    else if (key == "data") data_path = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "vocab.max_size") vocab_max_size = parse_num<int>(key, value);
    else if (key == "pack.seq_len") seq_len = parse_num<int>(key, value);
    else if (key == "pack.packed") packed = parse_bool(key, value);
    else if (key == "method") method = value;
    else if (key == "drop_rate") drop_rate = parse_num<double>(key, value);
    else if (key == "encoder.layers") layers = parse_num<int>(key, value);
    else if (key == "encoder.d_model") d_model = parse_num<int>(key, value);
    else if (key == "encoder.heads") heads = parse_num<int>(key, value);
    else if (key == "train.total_steps") total_steps = parse_num<int64_t>(key, value);
    else if (key == "train.stage2_fraction") stage2_fraction = parse_num<double>(key, value);
    else if (key == "train.batch_size") batch_size = parse_num<int>(key, value);
    else if (key == "train.peak_lr") peak_lr = parse_num<double>(key, value);
    else if (key == "train.warmup_steps") warmup_steps = parse_num<int64_t>(key, value);
    else if (key == "train.weight_decay") weight_decay = parse_num<double>(key, value);
    else if (key == "train.log_interval") log_interval = parse_num<int64_t>(key, value);
    else if (key == "train.checkpoint_interval") checkpoint_interval = parse_num<int64_t>(key, value);
    else if (key == "train.val_sequences") val_sequences = parse_num<int>(key, value);
    else if (key == "importance.beta") importance_beta = parse_num<double>(key, value);
    else if (key == "importance.default_value") importance_default = parse_num<double>(key, value);
    else if (key == "importance.random_fraction") random_fraction = parse_num<double>(key, value);
    else if (key == "seed") seed = parse_num<uint64_t>(key, value);
    else throw ConfigError("unknown configuration key: " + key);
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void RunConfig::validate() const {
    resolved_method();
    encoder_config(special::kFirstRegular + 1);  // shape checks with a dummy vocab size
    train_config().validate();
    if (!(importance_beta > 0.0 && importance_beta < 1.0))
        throw ConfigError("importance.beta must lie in (0, 1)");
    if (random_fraction < 0.0 || random_fraction > 1.0)
        throw ConfigError("importance.random_fraction must lie in [0, 1]");
}

std::vector<std::string> RunConfig::corpus_paths() const {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(corpus);
    while (std::getline(is, cur, ',')) {
        std::string t = trim(cur);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

EncoderConfig RunConfig::encoder_config(int32_t vocab_size) const {
    EncoderConfig cfg;
    cfg.layers = layers;
    cfg.d_model = d_model;
    cfg.heads = heads;
    cfg.seq_len = seq_len;
    cfg.vocab_size = vocab_size;
    cfg.variant = resolved_method().encoder;
    cfg.resolve();
    return cfg;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.total_steps = total_steps;
    cfg.stage2_fraction = stage2_fraction;
    cfg.batch_size = batch_size;
    cfg.peak_lr = peak_lr;
    cfg.warmup_steps = warmup_steps;
    cfg.weight_decay = weight_decay;
    cfg.drop_rate = drop_rate;
    cfg.importance_beta = importance_beta;
    cfg.importance_default = importance_default;
    cfg.random_fraction = random_fraction;
    cfg.seed = seed;
    cfg.log_interval = log_interval;
    cfg.checkpoint_interval = checkpoint_interval;
    cfg.val_sequences = val_sequences;
    return cfg;
}

SelectionStrategy RunConfig::strategy() const {
    SelectionStrategy s;
    s.variant = resolved_method().selection;
    s.random_fraction = random_fraction;
    s.rng_seed = seed;
    return s;
}

}  // namespace tokendrop
