#include "tokendrop/importance.hpp"

#include <algorithm>
#include <cmath>

#include "tokendrop/errors.hpp"
#include "tokendrop/io.hpp"

namespace tokendrop {

namespace {
constexpr uint32_t kTableMagic = 0x54494454;  // "TDIT"
constexpr uint32_t kTableVersion = 1;
constexpr double kForcedHigh = 1e9;
constexpr double kForcedLow = -1e9;
}  // namespace

ImportanceTable::ImportanceTable(int32_t vocab_size, double beta, double default_value)
    : values_(vocab_size, default_value), beta_(beta), default_value_(default_value) {
    if (vocab_size < special::kFirstRegular) throw ConfigError("vocabulary too small for importance table");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("importance beta must lie in (0, 1)");
    values_[special::kCls] = kSpecialValue;
    values_[special::kSep] = kSpecialValue;
    values_[special::kMask] = kSpecialValue;
    values_[special::kPad] = kPadValue;
}

void ImportanceTable::update(const std::vector<std::pair<int32_t, double>>& events) {
    for (const auto& [id, loss] : events) {
        if (id < 0 || id >= size()) throw IndexError("importance update: id out of range");
        if (loss < 0.0 && id != special::kPad)
            throw ContractError("importance update: negative loss for non-PAD token id " + std::to_string(id));
        if (is_special_id(id)) continue;  // pinned entries are never updated
        values_[id] = beta_ * values_[id] + (1.0 - beta_) * loss;
    }
    update_count_ += 1;
}

void ImportanceTable::save(const std::string& path) const {
    auto os = open_out(path);
    write_le<uint32_t>(os, kTableMagic);
    write_le<uint32_t>(os, kTableVersion);
    write_le<uint32_t>(os, static_cast<uint32_t>(values_.size()));
    write_vec(os, values_);
    write_le<double>(os, beta_);
    write_le<double>(os, default_value_);
    write_le<uint64_t>(os, update_count_);
}

ImportanceTable ImportanceTable::load(const std::string& path) {
    auto is = open_in(path);
    if (read_le<uint32_t>(is) != kTableMagic) throw IoError("not an importance-table file: " + path);
    if (read_le<uint32_t>(is) != kTableVersion) throw IoError("unsupported importance-table version");
    uint32_t n = read_le<uint32_t>(is);
    ImportanceTable t(static_cast<int32_t>(n));
    t.values_.resize(n);
    read_vec(is, t.values_);
    t.beta_ = read_le<double>(is);
    t.default_value_ = read_le<double>(is);
    t.update_count_ = read_le<uint64_t>(is);
    return t;
}

const char* to_string(SelectionVariant v) {
    switch (v) {
        case SelectionVariant::cumulative_loss: return "cumulative_loss";
        case SelectionVariant::cumulative_loss_half_random: return "half_random";
        case SelectionVariant::random: return "random";
        case SelectionVariant::frequency: return "frequency";
    }
    return "?";
}

std::vector<bool> special_position_mask(const PackedSequence& seq) {
    std::vector<bool> mask(seq.tokens.size(), false);
    for (size_t i = 0; i < seq.tokens.size(); ++i)
        if (is_special_id(seq.tokens[i]) && seq.tokens[i] != special::kPad) mask[i] = true;
    return mask;
}

std::vector<double> score_sequence(const PackedSequence& seq, const ImportanceTable& table,
                                   const Vocabulary& vocab, const SelectionStrategy& strategy, Rng& rng) {
    const size_t n = seq.tokens.size();
    std::vector<double> scores(n);
    switch (strategy.variant) {
        case SelectionVariant::cumulative_loss:
        case SelectionVariant::cumulative_loss_half_random:
            for (size_t i = 0; i < n; ++i) scores[i] = table.value(seq.tokens[i]);
            break;
        case SelectionVariant::frequency: {
            // Rarer tokens score higher; among equal counts the lower id is
            // treated as the more frequent one.
            const double tie = 0.5 / static_cast<double>(vocab.size());
            for (size_t i = 0; i < n; ++i) {
                int32_t id = seq.tokens[i];
                if (id == special::kPad)
                    scores[i] = kForcedLow;
                else if (is_special_id(id))
                    scores[i] = kForcedHigh;
                else
                    scores[i] = -static_cast<double>(vocab.frequency(id)) + tie * static_cast<double>(id);
            }
            break;
        }
        case SelectionVariant::random:
            for (size_t i = 0; i < n; ++i) {
                int32_t id = seq.tokens[i];
                double u = rng.uniform();  // always drawn, keeps the stream position-aligned
                if (id == special::kPad)
                    scores[i] = kForcedLow;
                else if (is_special_id(id))
                    scores[i] = kForcedHigh;
                else
                    scores[i] = u;
            }
            break;
    }
    return scores;
}

DropPlan build_drop_plan(const std::vector<double>& scores, const std::vector<bool>& special_positions,
                         int kept, const SelectionStrategy& strategy, Rng& rng) {
    const int n = static_cast<int>(scores.size());
    if (static_cast<int>(special_positions.size()) != n)
        throw ContractError("build_drop_plan: score/special mask length mismatch");
    int n_special = 0;
    for (bool s : special_positions) n_special += s ? 1 : 0;
    if (kept < n_special)
        throw PlanError("kept count " + std::to_string(kept) + " below special-token count " +
                        std::to_string(n_special));
    if (kept > n) throw PlanError("kept count exceeds sequence length");

    DropPlan plan;
    plan.kept = kept;
    plan.sigma.resize(n);
    for (int i = 0; i < n; ++i) plan.sigma[i] = i;
    std::sort(plan.sigma.begin(), plan.sigma.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    std::vector<bool> keep_flag(n, false);
    for (int r = 0; r < kept; ++r) keep_flag[plan.sigma[r]] = true;

    if (strategy.variant == SelectionVariant::cumulative_loss_half_random) {
        const int j = static_cast<int>(strategy.random_fraction * n);
        if (j > 0 && kept > 0) {
            // Window of ranks [kept - j, n): the last j kept ranks plus every
            // dropped rank. j window members are re-chosen at random; special
            // positions inside the window always stay kept.
            const int window_begin = std::max(kept - j, 0);
            std::vector<int> window_specials, window_regular;
            for (int r = window_begin; r < n; ++r) {
                int pos = plan.sigma[r];
                keep_flag[pos] = false;
                (special_positions[pos] ? window_specials : window_regular).push_back(pos);
            }
            for (int pos : window_specials) keep_flag[pos] = true;
            int to_sample = kept - window_begin - static_cast<int>(window_specials.size());
            to_sample = std::clamp(to_sample, 0, static_cast<int>(window_regular.size()));
            if (to_sample > 0) {
                auto picks = rng.sample_without_replacement(static_cast<int>(window_regular.size()), to_sample);
                for (int p : picks) keep_flag[window_regular[p]] = true;
            }
        }
    }

    // Reconcile: specials are kept no matter what the scores said, and the
    // kept count is exactly M. With the scorer contracts (specials carry
    // maximal scores) this is a no-op.
    for (int i = 0; i < n; ++i)
        if (special_positions[i]) keep_flag[i] = true;
    int count = 0;
    for (int i = 0; i < n; ++i) count += keep_flag[i] ? 1 : 0;
    for (int r = n - 1; r >= 0 && count > kept; --r) {
        int pos = plan.sigma[r];
        if (keep_flag[pos] && !special_positions[pos]) {
            keep_flag[pos] = false;
            --count;
        }
    }
    for (int r = 0; r < n && count < kept; ++r) {
        int pos = plan.sigma[r];
        if (!keep_flag[pos]) {
            keep_flag[pos] = true;
            ++count;
        }
    }

    for (int i = 0; i < n; ++i) (keep_flag[i] ? plan.keep_idx : plan.drop_idx).push_back(i);
    return plan;
}

DropPlan full_keep_plan(int seq_len) {
    DropPlan plan;
    plan.kept = seq_len;
    plan.sigma.resize(seq_len);
    plan.keep_idx.resize(seq_len);
    for (int i = 0; i < seq_len; ++i) plan.sigma[i] = plan.keep_idx[i] = i;
    return plan;
}

ScoreReport dump_scores(const ImportanceTable& table, const Vocabulary& vocab, int buckets) {
    if (buckets < 1) throw ConfigError("histogram needs at least one bucket");
    if (vocab.size() != table.size()) throw ContractError("vocabulary and importance table sizes differ");
    ScoreReport report;
    report.ranked.reserve(table.size());
    for (int32_t id = 0; id < table.size(); ++id)
        report.ranked.push_back({id, vocab.token(id), table.value(id)});
    std::sort(report.ranked.begin(), report.ranked.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });

    double lo = report.ranked.back().score;
    double hi = report.ranked.front().score;
    if (hi == lo) hi = lo + 1.0;
    const double width = (hi - lo) / buckets;
    report.histogram.resize(buckets);
    for (int b = 0; b < buckets; ++b)
        report.histogram[b] = {lo + b * width, lo + (b + 1) * width, 0};
    for (const auto& entry : report.ranked) {
        int b = std::min(buckets - 1, static_cast<int>((entry.score - lo) / width));
        report.histogram[b].count += 1;
    }
    return report;
}

}  // namespace tokendrop
