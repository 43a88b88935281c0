#pragma once

#include "cmpsearch/rank_table.hpp"
#include "cmpsearch/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cmpsearch {

struct QueryRecord {
    ItemId x = 0;
    ItemId y = 0;
    Answer answer = Answer::minus;
    bool operator==(const QueryRecord&) const = default;
};

class QueryLog {
public:
    void append(ItemId x, ItemId y, Answer a) { entries_.push_back({x, y, a}); }
    std::size_t query_count() const { return entries_.size(); }
    const std::vector<QueryRecord>& entries() const { return entries_; }
    bool operator==(const QueryLog&) const = default;

private:
    std::vector<QueryRecord> entries_;
};

// O_t for a hidden target t: answers the ordered pair (x, y).
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual Answer ask(ItemId x, ItemId y) = 0;
    std::uint64_t calls() const { return calls_; }

protected:
    std::uint64_t calls_ = 0;
};

// Exact oracle answered from the precomputed rank table.
class TableOracle final : public Oracle {
public:
    TableOracle(const RankTable& table, ItemId target) : table_(&table), target_(target) {}
    Answer ask(ItemId x, ItemId y) override {
        ++calls_;
        return table_->answer(target_, x, y);
    }
    ItemId target() const { return target_; }

private:
    const RankTable* table_;
    ItemId target_;
};

// Flips the inner answer with probability epsilon, independently per call.
Answer noisy_answer(Answer inner, double epsilon, std::mt19937_64& rng);

class NoisyOracle final : public Oracle {
public:
    NoisyOracle(Oracle& inner, double epsilon, std::uint64_t seed);
    Answer ask(ItemId x, ItemId y) override;
    double epsilon() const { return epsilon_; }

private:
    Oracle* inner_;
    double epsilon_;
    std::mt19937_64 rng_;
};

// Records every query passing through it.
class LoggingOracle final : public Oracle {
public:
    explicit LoggingOracle(Oracle& inner) : inner_(&inner) {}
    Answer ask(ItemId x, ItemId y) override {
        ++calls_;
        const Answer a = inner_->ask(x, y);
        log_.append(x, y, a);
        return a;
    }
    const QueryLog& log() const { return log_; }

private:
    Oracle* inner_;
    QueryLog log_;
};

// Two calls against a live oracle; the answers reveal d(x,t) = d(y,t).
bool is_tie(Oracle& oracle, ItemId x, ItemId y);

struct OracleConfig {
    enum class Kind { exact, noisy, external_session } kind = Kind::exact;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    bool counting = true;

    void validate() const;
};

// JSON-lines transcript: one {seq, x, y, answer} per query, then
// {result, queries}.
std::string transcript_jsonl(const QueryLog& log, const ItemId* result);

}  // namespace cmpsearch
