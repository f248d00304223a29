#include "tokendrop/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tokendrop/errors.hpp"
#include "tokendrop/io.hpp"

namespace tokendrop {

namespace {

const char* kSpecialNames[] = {"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

Vocabulary::Vocabulary() {
    for (const char* name : kSpecialNames) {
        token_to_id_[name] = static_cast<int32_t>(id_to_token_.size());
        id_to_token_.emplace_back(name);
        frequency_.push_back(0);
    }
}

int32_t Vocabulary::lookup(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? special::kUnk : it->second;
}

int32_t Vocabulary::add_token(const std::string& token, uint64_t count) {
    if (token_to_id_.count(token)) throw ContractError("duplicate vocabulary token: " + token);
    int32_t id = static_cast<int32_t>(id_to_token_.size());
    token_to_id_[token] = id;
    id_to_token_.push_back(token);
    frequency_.push_back(count);
    return id;
}

void Vocabulary::save(const std::string& path) const {
    auto os = open_out(path, /*binary=*/false);
    for (int32_t id = 0; id < size(); ++id) os << id_to_token_[id] << '\t' << frequency_[id] << '\n';
    if (!os) throw IoError("failed writing vocabulary: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
    auto is = open_in(path, /*binary=*/false);
    Vocabulary v;
    std::string line;
    int32_t id = 0;
    while (std::getline(is, line)) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("malformed vocabulary line " + std::to_string(id));
        std::string token = line.substr(0, tab);
        uint64_t count = std::stoull(line.substr(tab + 1));
        if (id <= special::kUnk) {
            if (token != kSpecialNames[id])
                throw IoError("vocabulary line " + std::to_string(id) + " must be " +
                              std::string(kSpecialNames[id]));
            v.frequency_[id] = count;
        } else {
            v.add_token(token, count);
        }
        ++id;
    }
    if (id < special::kFirstRegular) throw IoError("vocabulary missing reserved entries: " + path);
    return v;
}

std::vector<std::vector<std::string>> tokenize_line(const std::string& line) {
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::string> current;
    std::string word;

    auto flush_word = [&] {
        if (!word.empty()) {
            current.push_back(word);
            word.clear();
        }
    };
    auto flush_sentence = [&] {
        flush_word();
        if (!current.empty()) {
            sentences.push_back(std::move(current));
            current.clear();
        }
    };

    for (char raw : line) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            flush_word();
        } else if (is_word_char(c)) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else if (is_terminal_punct(raw)) {
            flush_sentence();
        } else {
            flush_word();
            current.emplace_back(1, raw);
        }
    }
    flush_sentence();
    return sentences;
}

Vocabulary build_vocab(std::istream& corpus, int32_t max_size) {
    if (max_size < special::kFirstRegular + 1)
        throw ConfigError("vocabulary max_size must be at least " + std::to_string(special::kFirstRegular + 1));

    std::unordered_map<std::string, size_t> index;
    std::vector<std::pair<std::string, uint64_t>> counts;  // first-occurrence order
    std::string line;
    while (std::getline(corpus, line)) {
        for (auto& sentence : tokenize_line(line)) {
            for (auto& tok : sentence) {
                auto [it, fresh] = index.try_emplace(tok, counts.size());
                if (fresh)
                    counts.emplace_back(tok, 1);
                else
                    counts[it->second].second += 1;
            }
        }
    }
    if (counts.empty()) throw IngestError("corpus contains no tokens");

    std::vector<size_t> order(counts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (counts[a].second != counts[b].second) return counts[a].second > counts[b].second;
        return a < b;  // earlier first occurrence wins ties
    });

    Vocabulary vocab;
    size_t budget = static_cast<size_t>(max_size - special::kFirstRegular);
    for (size_t i = 0; i < order.size(); ++i) {
        const auto& [tok, cnt] = counts[order[i]];
        if (i < budget)
            vocab.add_token(tok, cnt);
        else
            vocab.add_unk_count(cnt);
    }
    return vocab;
}

Vocabulary build_vocab_from_files(const std::vector<std::string>& paths, int32_t max_size) {
    std::stringstream all;
    for (const auto& p : paths) {
        std::ifstream is(p);
        if (!is) throw IngestError("cannot read corpus file: " + p);
        all << is.rdbuf();
        all << '\n';
    }
    return build_vocab(all, max_size);
}

TokenizedDocument encode(const std::string& document, const Vocabulary& vocab) {
    TokenizedDocument doc;
    for (auto& sentence : tokenize_line(document)) {
        std::vector<int32_t> ids;
        ids.reserve(sentence.size());
        for (auto& tok : sentence) ids.push_back(vocab.lookup(tok));
        if (!ids.empty()) doc.sentences.push_back(std::move(ids));
    }
    return doc;
}

}  // namespace tokendrop
