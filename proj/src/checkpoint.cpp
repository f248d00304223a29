#include "tokendrop/encoder.hpp"
#include "tokendrop/io.hpp"

namespace tokendrop {

namespace {
constexpr uint32_t kCkptMagic = 0x4b434454;  // "TDCK"
constexpr uint32_t kCkptVersion = 1;
}  // namespace

void save_checkpoint(EncoderModelT<float>& model, const std::string& path) {
    auto os = open_out(path);
    write_le<uint32_t>(os, kCkptMagic);
    write_le<uint32_t>(os, kCkptVersion);
    write_le<uint32_t>(os, static_cast<uint32_t>(model.config.layers));
    write_le<uint32_t>(os, static_cast<uint32_t>(model.config.d_model));
    write_le<uint32_t>(os, static_cast<uint32_t>(model.config.heads));
    write_le<uint32_t>(os, static_cast<uint32_t>(model.config.seq_len));
    write_le<uint32_t>(os, static_cast<uint32_t>(model.config.vocab_size));
    write_le<uint32_t>(os, static_cast<uint32_t>(model.config.variant));
    write_le<uint64_t>(os, static_cast<uint64_t>(model.parameter_count()));
    for (auto* p : model.parameters()) write_vec(os, p->data);
}

EncoderModelT<float> load_checkpoint(const std::string& path) {
    auto is = open_in(path);
    if (read_le<uint32_t>(is) != kCkptMagic) throw IoError("not a checkpoint file: " + path);
    if (read_le<uint32_t>(is) != kCkptVersion) throw IoError("unsupported checkpoint version: " + path);
    EncoderConfig cfg;
    cfg.layers = static_cast<int>(read_le<uint32_t>(is));
    cfg.d_model = static_cast<int>(read_le<uint32_t>(is));
    cfg.heads = static_cast<int>(read_le<uint32_t>(is));
    cfg.seq_len = static_cast<int>(read_le<uint32_t>(is));
    cfg.vocab_size = static_cast<int32_t>(read_le<uint32_t>(is));
    cfg.variant = static_cast<Variant>(read_le<uint32_t>(is));
    EncoderModelT<float> model(cfg);
    uint64_t expect = read_le<uint64_t>(is);
    if (expect != static_cast<uint64_t>(model.parameter_count()))
        throw IoError("checkpoint parameter count mismatch: " + path);
    for (auto* p : model.parameters()) read_vec(is, p->data);
    return model;
}

}  // namespace tokendrop
