#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tokendrop/packing.hpp"
#include "tokendrop/rng.hpp"
#include "tokendrop/vocab.hpp"

namespace tokendrop {

// Per-vocabulary-id exponential moving average of the MLM negative
// log-likelihood: m_id <- beta * m_id + (1 - beta) * loss. Entries for
// [MASK]/[CLS]/[SEP] are pinned at +1e4 and [PAD] at -1e4; they are never
// updated so those tokens always sort as maximally / minimally important.
class ImportanceTable {
public:
    static constexpr double kSpecialValue = 1e4;
    static constexpr double kPadValue = -1e4;

    ImportanceTable(int32_t vocab_size, double beta = 0.9, double default_value = 10.0);

    // Applies one batch of (token id, NLL loss) events in position order.
    // Events targeting pinned ids are ignored. A negative loss for a non-PAD
    // id is a caller bug and throws.
    void update(const std::vector<std::pair<int32_t, double>>& events);

    double value(int32_t id) const { return values_.at(id); }
    const std::vector<double>& values() const { return values_; }
    int32_t size() const { return static_cast<int32_t>(values_.size()); }
    double beta() const { return beta_; }
    double default_value() const { return default_value_; }
    uint64_t update_count() const { return update_count_; }

    void save(const std::string& path) const;
    static ImportanceTable load(const std::string& path);

private:
    std::vector<double> values_;
    double beta_;
    double default_value_;
    uint64_t update_count_ = 0;
};

enum class SelectionVariant {
    cumulative_loss,
    cumulative_loss_half_random,
    random,
    frequency,
};

const char* to_string(SelectionVariant v);

struct SelectionStrategy {
    SelectionVariant variant = SelectionVariant::cumulative_loss;
    double random_fraction = 0.05;  // J = int(random_fraction * T) for half_random
    uint64_t rng_seed = 0;
};

// Per-position keep/drop decision for one sequence. keep_idx and drop_idx
// partition [0, T) and are both ascending, so the original token order is
// preserved on both sides of the separation.
struct DropPlan {
    std::vector<int> sigma;     // positions ordered by descending score
    int kept = 0;               // M
    std::vector<int> keep_idx;  // first M of sigma, re-sorted ascending
    std::vector<int> drop_idx;  // remaining T-M, re-sorted ascending
};

// Score per position. cumulative_loss reads the table; frequency scores
// -count (rarer = more important) with a small id tiebreak so equal counts
// order deterministically; random draws i.i.d. uniforms. For frequency and
// random scoring, [MASK]/[CLS]/[SEP] are forced to +1e9 and [PAD] to -1e9.
std::vector<double> score_sequence(const PackedSequence& seq, const ImportanceTable& table,
                                   const Vocabulary& vocab, const SelectionStrategy& strategy, Rng& rng);

// Sorts positions by descending score (ties by ascending position) and keeps
// the top M. For half_random, the last J kept ranks are replaced by J ranks
// sampled without replacement from the tail window [M-J+1, T]; special
// positions are never displaced. Throws PlanError if M < #special positions
// or M > T.
DropPlan build_drop_plan(const std::vector<double>& scores, const std::vector<bool>& special_positions,
                         int kept, const SelectionStrategy& strategy, Rng& rng);

// Trivial all-keep plan (baseline / stage-2 / evaluation).
DropPlan full_keep_plan(int seq_len);

std::vector<bool> special_position_mask(const PackedSequence& seq);

// Inspection artifacts: per-token scores ranked by descending cumulative
// loss, plus a histogram of the score distribution.
struct ScoreReport {
    struct RankedEntry {
        int32_t id;
        std::string token;
        double score;
    };
    struct Bucket {
        double low, high;
        uint64_t count;
    };
    std::vector<RankedEntry> ranked;
    std::vector<Bucket> histogram;  // bucket counts sum to |V|
};

ScoreReport dump_scores(const ImportanceTable& table, const Vocabulary& vocab, int buckets = 32);

}  // namespace tokendrop
