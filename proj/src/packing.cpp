#include "tokendrop/packing.hpp"

#include <algorithm>
#include <iostream>

#include "tokendrop/errors.hpp"
#include "tokendrop/io.hpp"
#include "tokendrop/rng.hpp"

namespace tokendrop {

namespace {
constexpr uint32_t kPackMagic = 0x4b504454;  // "TDPK"
constexpr uint32_t kPackVersion = 1;
}  // namespace

void PackedBatch::validate() const {
    for (const auto& s : sequences)
        if (s.length() != seq_len())
            throw ContractError("batch sequences must share one length, got " + std::to_string(s.length()) +
                                " vs " + std::to_string(seq_len()));
}

SequencePacker::SequencePacker(int seq_len, bool packed, bool warn_to_stderr)
    : seq_len_(seq_len), packed_(packed), warn_(warn_to_stderr) {
    if (seq_len < 8) throw ConfigError("sequence length must be >= 8, got " + std::to_string(seq_len));
}

void SequencePacker::push_sentence(std::vector<int32_t> sentence) {
    stats_.tokens_ingested += sentence.size();
    const size_t limit = static_cast<size_t>(seq_len_ - 2);
    if (sentence.size() > limit) {
        stats_.tokens_truncated += sentence.size() - limit;
        stats_.truncated_sentences += 1;
        if (warn_)
            std::cerr << "warning: truncating sentence of " << sentence.size() << " tokens to " << limit
                      << "\n";
        sentence.resize(limit);
    }

    if (packed_) {
        stream_.insert(stream_.end(), sentence.begin(), sentence.end());
        stream_.push_back(special::kSep);
        const size_t body = static_cast<size_t>(seq_len_ - 1);  // after the [CLS]
        size_t cursor = 0;
        while (stream_.size() - cursor >= body) {
            PackedSequence seq;
            seq.tokens.reserve(seq_len_);
            seq.tokens.push_back(special::kCls);
            seq.tokens.insert(seq.tokens.end(), stream_.begin() + cursor, stream_.begin() + cursor + body);
            cursor += body;
            for (int32_t t : seq.tokens)
                if (!is_special_id(t)) stats_.tokens_emitted += 1;
            stats_.sequences += 1;
            ready_.push_back(std::move(seq));
        }
        stream_.erase(stream_.begin(), stream_.begin() + cursor);
    } else {
        pending_.push_back(std::move(sentence));
        if (pending_.size() == 2) {
            // Pair must fit as [CLS] s1 [SEP] s2 [SEP]; otherwise s1 goes out alone.
            if (2 + pending_[0].size() + 1 + pending_[1].size() > static_cast<size_t>(seq_len_)) {
                std::vector<std::vector<int32_t>> keep = {std::move(pending_[1])};
                pending_.pop_back();
                emit_pair();
                pending_ = std::move(keep);
            } else {
                emit_pair();
            }
        }
    }
}

void SequencePacker::emit_pair() {
    PackedSequence seq;
    seq.tokens.reserve(seq_len_);
    seq.tokens.push_back(special::kCls);
    for (auto& sentence : pending_) {
        seq.tokens.insert(seq.tokens.end(), sentence.begin(), sentence.end());
        seq.tokens.push_back(special::kSep);
        stats_.tokens_emitted += sentence.size();
    }
    pending_.clear();
    stats_.pad_tokens += static_cast<uint64_t>(seq_len_) - seq.tokens.size();
    seq.tokens.resize(seq_len_, special::kPad);
    stats_.sequences += 1;
    ready_.push_back(std::move(seq));
}

void SequencePacker::push(const TokenizedDocument& doc) {
    for (const auto& sentence : doc.sentences) {
        if (sentence.empty()) throw ContractError("tokenized document contains an empty sentence");
        push_sentence(sentence);
    }
}

std::vector<PackedSequence> SequencePacker::drain() { return std::exchange(ready_, {}); }

std::optional<PackedSequence> SequencePacker::finish() {
    if (packed_) {
        for (int32_t t : stream_)
            if (!is_special_id(t)) stats_.tokens_in_dropped_tail += 1;
        stream_.clear();
        return std::nullopt;
    }
    if (pending_.empty()) return std::nullopt;
    emit_pair();
    auto seq = std::move(ready_.back());
    ready_.pop_back();
    return seq;
}

std::pair<std::vector<PackedSequence>, PackStats> pack_documents(const std::vector<TokenizedDocument>& docs,
                                                                 int seq_len, bool packed) {
    SequencePacker packer(seq_len, packed);
    std::vector<PackedSequence> out;
    for (const auto& doc : docs) {
        packer.push(doc);
        auto batch = packer.drain();
        out.insert(out.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
    }
    if (auto tail = packer.finish()) out.push_back(std::move(*tail));
    return {std::move(out), packer.stats()};
}

PackedSequence apply_mlm_mask(const PackedSequence& seq, const Vocabulary& vocab, uint64_t seed) {
    if (!seq.mask_positions.empty()) throw ContractError("sequence already carries MLM masks");
    if (seq.tokens.empty() || seq.tokens[0] != special::kCls)
        throw ContractError("sequence does not start with [CLS]");

    std::vector<int> maskable;
    maskable.reserve(seq.tokens.size());
    for (size_t i = 0; i < seq.tokens.size(); ++i)
        if (!is_special_id(seq.tokens[i])) maskable.push_back(static_cast<int>(i));

    const int n_mask = static_cast<int>(0.15 * static_cast<double>(maskable.size()));
    PackedSequence out = seq;
    if (n_mask == 0) return out;

    Rng rng(seed);
    std::vector<int> chosen = rng.sample_without_replacement(static_cast<int>(maskable.size()), n_mask);
    std::vector<int32_t> positions;
    positions.reserve(n_mask);
    for (int c : chosen) positions.push_back(maskable[c]);
    std::sort(positions.begin(), positions.end());

    const int32_t regular = vocab.size() - special::kFirstRegular;
    for (int32_t pos : positions) {
        out.mask_positions.push_back(pos);
        out.mask_labels.push_back(seq.tokens[pos]);
        double r = rng.uniform();
        if (r < 0.8)
            out.tokens[pos] = special::kMask;
        else if (r < 0.9)
            out.tokens[pos] = special::kFirstRegular + rng.below(regular);
        // else: left unchanged
    }
    return out;
}

void write_packed_file(const std::string& path, int seq_len, const std::vector<PackedSequence>& seqs) {
    auto os = open_out(path);
    write_le<uint32_t>(os, kPackMagic);
    write_le<uint32_t>(os, kPackVersion);
    write_le<uint32_t>(os, static_cast<uint32_t>(seq_len));
    write_le<uint64_t>(os, seqs.size());
    for (const auto& s : seqs) {
        if (s.length() != seq_len) throw ContractError("packed file requires uniform sequence length");
        write_vec(os, s.tokens);
        write_le<uint32_t>(os, static_cast<uint32_t>(s.mask_positions.size()));
        write_vec(os, s.mask_positions);
        write_vec(os, s.mask_labels);
    }
}

std::pair<int, std::vector<PackedSequence>> read_packed_file(const std::string& path) {
    auto is = open_in(path);
    if (read_le<uint32_t>(is) != kPackMagic) throw IoError("not a packed-data file: " + path);
    if (read_le<uint32_t>(is) != kPackVersion) throw IoError("unsupported packed-data version: " + path);
    const int seq_len = static_cast<int>(read_le<uint32_t>(is));
    const uint64_t count = read_le<uint64_t>(is);
    std::vector<PackedSequence> seqs(count);
    for (auto& s : seqs) {
        s.tokens.resize(seq_len);
        read_vec(is, s.tokens);
        uint32_t n = read_le<uint32_t>(is);
        s.mask_positions.resize(n);
        s.mask_labels.resize(n);
        read_vec(is, s.mask_positions);
        read_vec(is, s.mask_labels);
    }
    return {seq_len, std::move(seqs)};
}

}  // namespace tokendrop
