#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cmpsearch {

using ItemId = std::uint32_t;

// 1-based index into an item's ordered list of equidistant classes.
// Class 1 always holds the item itself (and any zero-distance twins).
using ClassIndex = std::uint32_t;

// Oracle reply to the ordered query (x, y): plus iff x is strictly closer
// to the target than y. Ties answer minus.
enum class Answer : int { plus = 1, minus = -1 };

inline int to_int(Answer a) { return static_cast<int>(a); }
inline Answer flip(Answer a) { return a == Answer::plus ? Answer::minus : Answer::plus; }
Answer answer_from_int(int v);

struct Query {
    ItemId first = 0;
    ItemId second = 0;
    bool operator==(const Query&) const = default;
};

// Instrumentation. Oracle queries are never folded into the computational
// counters.
struct CostCounters {
    std::uint64_t oracle_queries = 0;
    std::uint64_t table_lookups = 0;
    std::uint64_t mass_additions = 0;
    std::uint64_t pair_evaluations = 0;

    std::uint64_t operations() const { return table_lookups + mass_additions; }

    CostCounters& operator+=(const CostCounters& o) {
        oracle_queries += o.oracle_queries;
        table_lookups += o.table_lookups;
        mass_additions += o.mass_additions;
        pair_evaluations += o.pair_evaluations;
        return *this;
    }
    bool operator==(const CostCounters&) const = default;
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files or arguments.
class InputError : public Error {
public:
    using Error::Error;
};

// Answer history that no hypothesis is consistent with, or an answer sent
// to a session that cannot accept one.
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace cmpsearch
