#pragma once

#include <cstdint>
#include <iosfwd>

namespace tokendrop {

// Deterministic English-like corpus: grammar-templated sentences over a
// fixed word inventory, Zipf-weighted within each part-of-speech pool.
// Function words occupy predictable syntactic slots, giving the natural
// frequent-and-easy / rare-and-hard stratification MLM training exhibits on
// real text. One document per line, sentences closed by periods.
// Emits at least `target_tokens` word/punctuation tokens.
void generate_corpus(std::ostream& out, uint64_t target_tokens, uint64_t seed);

}  // namespace tokendrop
