#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace tokendrop {

// Token ids are dense. The first five ids are reserved; [UNK] is the
// out-of-vocabulary fallback and is treated as an ordinary token by the
// importance machinery.
namespace special {
inline constexpr int32_t kPad = 0;
inline constexpr int32_t kCls = 1;
inline constexpr int32_t kSep = 2;
inline constexpr int32_t kMask = 3;
inline constexpr int32_t kUnk = 4;
inline constexpr int32_t kFirstRegular = 5;
}  // namespace special

// True for [PAD]/[CLS]/[SEP]/[MASK], the ids that are never masked, never
// dropped and never updated in the importance table. [UNK] is not special.
inline bool is_special_id(int32_t id) { return id >= special::kPad && id <= special::kMask; }

class Vocabulary {
public:
    Vocabulary();  // specials only

    int32_t size() const { return static_cast<int32_t>(id_to_token_.size()); }
    const std::string& token(int32_t id) const { return id_to_token_.at(id); }
    uint64_t frequency(int32_t id) const { return frequency_.at(id); }
    const std::vector<uint64_t>& frequencies() const { return frequency_; }

    // Returns [UNK] for tokens outside the vocabulary.
    int32_t lookup(const std::string& token) const;

    // `token<TAB>count`, id = line number.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    // Used by the builder only.
    int32_t add_token(const std::string& token, uint64_t count);
    void add_unk_count(uint64_t n) { frequency_[special::kUnk] += n; }

private:
    std::vector<std::string> id_to_token_;
    std::vector<uint64_t> frequency_;
    std::unordered_map<std::string, int32_t> token_to_id_;
};

// One document, sentence-split, ids only. No special ids appear and no
// sentence is empty.
struct TokenizedDocument {
    std::vector<std::vector<int32_t>> sentences;
};

// Lowercased word/punctuation tokens grouped into sentences. Terminal
// punctuation (. ! ?) closes a sentence and is consumed; other punctuation
// becomes a single-character token. Line end closes the trailing sentence.
std::vector<std::vector<std::string>> tokenize_line(const std::string& line);

// Counts tokens over the corpus (one document per line) and keeps the most
// frequent ones, ties broken by first occurrence. Counts of discarded tokens
// accrue to [UNK] so frequency totals match the corpus token count.
Vocabulary build_vocab(std::istream& corpus, int32_t max_size);
Vocabulary build_vocab_from_files(const std::vector<std::string>& paths, int32_t max_size);

TokenizedDocument encode(const std::string& document, const Vocabulary& vocab);

}  // namespace tokendrop
