#pragma once

#include "cmpsearch/rank_table.hpp"
#include "cmpsearch/ranknet.hpp"
#include "cmpsearch/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cmpsearch {

// Hypotheses consistent with every answer so far, ascending ids.
using VersionSpace = std::vector<ItemId>;

enum class PairProvenance { all, within_v, same_net };

// Candidate queries. `all` and `within_v` are implicit (every ordered pair of
// items, or of version-space members); `same_net` lists, for every node of a
// rank-net tree, the ordered pairs of distinct net members.
class PairSet {
public:
    static PairSet all() { return PairSet(PairProvenance::all, {}); }
    static PairSet within_version_space() { return PairSet(PairProvenance::within_v, {}); }
    static PairSet same_net(const RankNetTree& tree);

    PairProvenance provenance() const { return provenance_; }
    // Explicit pairs, lexicographic; only meaningful for same_net.
    const std::vector<std::pair<ItemId, ItemId>>& pairs() const { return pairs_; }
    bool contains(ItemId x, ItemId y) const;

private:
    PairSet(PairProvenance p, std::vector<std::pair<ItemId, ItemId>> pairs)
        : provenance_(p), pairs_(std::move(pairs)) {}

    PairProvenance provenance_;
    std::vector<std::pair<ItemId, ItemId>> pairs_;
};

enum class GbsVariant { full, fast, sparse };

std::string to_string(GbsVariant v);

// |sum_{z in V} mu(z) O_z(x, y)|, costing |V| lookups and mass additions.
double gbs_objective(const RankTable& table, const VersionSpace& v, ItemId x, ItemId y, CostCounters* cost = nullptr);

struct QueryChoice {
    ItemId x = 0;
    ItemId y = 0;
    double objective = 0.0;
    bool operator==(const QueryChoice&) const = default;
};

// Argmin of the objective over the informative pairs of `pairs` (those that
// put positive mass on both answers), ties to the lexicographically first
// (x, y). Falls back to the within-V pairs when `pairs` has no informative
// member. Empty only if V is already resolved. Pairs are scored in parallel.
std::optional<QueryChoice> select_query(const RankTable& table, const VersionSpace& v, const PairSet& pairs,
                                        CostCounters* cost = nullptr);

namespace serial {
// Straight loop over the pair set through RankTable::answer.
std::optional<QueryChoice> select_query(const RankTable& table, const VersionSpace& v, const PairSet& pairs);
}  // namespace serial

VersionSpace update_version_space(const RankTable& table, const VersionSpace& v, ItemId x, ItemId y, Answer a,
                                  CostCounters* cost = nullptr);

// True when the positive-mass members of V are all at distance zero from one
// another (no query can separate them), or there are none.
bool is_resolved(const RankTable& table, const VersionSpace& v);
// Smallest positive-mass member, or the first member when none has mass.
ItemId resolved_item(const RankTable& table, const VersionSpace& v);

class Oracle;

// Greedy splitting search, driven through a SearchSession.
ItemId gbs_search(Oracle& oracle, const RankTable& table, GbsVariant variant, const PairSet* same_net_pairs = nullptr);

// Minimum expected number of queries over all adaptive policies, by memoized
// recursion over reachable version spaces. Query space is every ordered pair.
double exact_opt(const RankTable& table, std::size_t max_n = 7);

}  // namespace cmpsearch
