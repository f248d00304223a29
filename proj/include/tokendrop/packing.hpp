#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tokendrop/vocab.hpp"

namespace tokendrop {

// Fixed-length training sequence. tokens[0] is always [CLS]; in packed mode
// no [PAD] ever appears. mask_positions are strictly increasing, never point
// at a special position, and mask_labels hold the pre-corruption ids.
struct PackedSequence {
    std::vector<int32_t> tokens;
    std::vector<int32_t> mask_positions;
    std::vector<int32_t> mask_labels;

    int length() const { return static_cast<int>(tokens.size()); }
    bool operator==(const PackedSequence&) const = default;
};

// A batch of packed sequences of uniform length.
struct PackedBatch {
    std::vector<PackedSequence> sequences;

    void validate() const;  // throws ContractError on length disagreement
    int seq_len() const { return sequences.empty() ? 0 : sequences.front().length(); }
    std::vector<const PackedSequence*> views() const {
        std::vector<const PackedSequence*> v;
        v.reserve(sequences.size());
        for (const auto& s : sequences) v.push_back(&s);
        return v;
    }
};

struct PackStats {
    uint64_t sequences = 0;
    uint64_t pad_tokens = 0;
    uint64_t tokens_ingested = 0;        // non-special tokens pushed in
    uint64_t tokens_emitted = 0;         // non-special tokens in emitted sequences
    uint64_t tokens_truncated = 0;       // lost to over-length sentence truncation
    uint64_t tokens_in_dropped_tail = 0; // packed mode: trailing partial buffer
    uint64_t truncated_sentences = 0;
};

// Greedy stream packer. In packed mode sentences are concatenated across
// document boundaries ([SEP] after each) and cut into exact length-T pieces,
// each prefixed with [CLS]; a sentence may straddle two sequences. In
// non-packed mode each sequence is one sentence pair [CLS] s1 [SEP] s2 [SEP]
// padded to T. Sentences longer than T-2 are truncated (counted + warned).
class SequencePacker {
public:
    SequencePacker(int seq_len, bool packed, bool warn_to_stderr = true);

    void push(const TokenizedDocument& doc);

    // Completed sequences accumulated since the last call.
    std::vector<PackedSequence> drain();

    // Flushes the trailing partial buffer: dropped in packed mode (counted),
    // emitted PAD-filled in non-packed mode.
    std::optional<PackedSequence> finish();

    const PackStats& stats() const { return stats_; }

private:
    void push_sentence(std::vector<int32_t> sentence);
    void emit_pair();

    int seq_len_;
    bool packed_;
    bool warn_;
    std::vector<int32_t> stream_;                  // packed mode: pending token stream
    std::vector<std::vector<int32_t>> pending_;    // non-packed mode: up to 2 sentences
    std::vector<PackedSequence> ready_;
    PackStats stats_;
};

// One-shot convenience over a document list.
std::pair<std::vector<PackedSequence>, PackStats> pack_documents(
    const std::vector<TokenizedDocument>& docs, int seq_len, bool packed);

// Selects 15% of the non-special positions (without replacement), then per
// selected position: 80% -> [MASK], 10% -> random regular id, 10% unchanged.
// Labels record the original ids. Deterministic in (sequence, seed).
PackedSequence apply_mlm_mask(const PackedSequence& seq, const Vocabulary& vocab, uint64_t seed);

// Binary packed-data file: header {magic, version, T, count}, then per
// sequence T int32 token ids followed by mask metadata (count, positions,
// labels). Little-endian throughout; round-trips bit-exactly.
void write_packed_file(const std::string& path, int seq_len, const std::vector<PackedSequence>& seqs);
std::pair<int, std::vector<PackedSequence>> read_packed_file(const std::string& path);

}  // namespace tokendrop
