#pragma once

#include "cmpsearch/gbs.hpp"
#include "cmpsearch/oracle.hpp"
#include "cmpsearch/rank_table.hpp"
#include "cmpsearch/ranknet.hpp"
#include "cmpsearch/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cmpsearch {

enum class Algorithm { ranknet, tree, noisy, gbs, fgbs, sgbs };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
bool is_noisy(Algorithm a);

// Which denominator the repetition factor uses. `half_gap` is (1/2 - eps)^2,
// the form under which the per-match Hoeffding bound exp(-k(1/2-eps)^2/2)
// delivers the stated tournament failure rate; `unit_gap` uses (1 - eps)^2.
enum class RepetitionForm { half_gap, unit_gap };

// k = 2 ln((level + 1/delta)^2 ceil(log2 m)) / denominator, rounded up to the
// next odd integer; 0 when m = 1.
std::uint64_t repetition_factor(std::uint64_t level, std::uint64_t m, double epsilon, double delta,
                                RepetitionForm form = RepetitionForm::half_gap);

// Sequential nearest-member scan: the champion starts as members[0] and each
// next member y replaces it when O_t(y, champion) = +1. |R| - 1 queries.
class ChampionScan {
public:
    explicit ChampionScan(std::vector<ItemId> members);
    bool done() const { return next_ >= members_.size(); }
    std::optional<Query> pending() const;
    void submit(Answer a);
    ItemId winner() const { return champion_; }
    bool operator==(const ChampionScan&) const = default;

private:
    std::vector<ItemId> members_;
    std::size_t next_ = 1;
    ItemId champion_ = 0;
};

// Single-elimination bracket. Each match repeats the query (a, b) k times,
// a being the earlier bracket slot; the player with strictly more wins
// advances, ties to a. An odd player out gets a bye.
class Tournament {
public:
    Tournament(std::vector<ItemId> players, std::uint64_t k);
    bool done() const { return round_.size() <= 1; }
    std::optional<Query> pending() const;
    void submit(Answer a);
    ItemId winner() const { return round_.front(); }
    std::uint64_t repetitions() const { return k_; }
    bool operator==(const Tournament&) const = default;

private:
    void finish_match();

    std::vector<ItemId> round_;
    std::vector<ItemId> next_round_;
    std::size_t match_ = 0;
    std::uint64_t k_ = 0;
    std::uint64_t played_ = 0;
    std::uint64_t first_wins_ = 0;
};

ItemId nearest_in_net(Oracle& oracle, std::span<const ItemId> members);
ItemId tournament(Oracle& oracle, std::span<const ItemId> members, std::uint64_t k);

// Read-only inputs shared by any number of sessions.
struct SearchContext {
    std::shared_ptr<const RankTable> table;
    std::shared_ptr<const RankNetTree> tree;       // tree, noisy, sgbs
    std::shared_ptr<const PairSet> same_net_pairs;  // sgbs
    GreedyOrder order = GreedyOrder::ascending_id;

    // Builds the tree and the same-net pair set from the table.
    static SearchContext prepare(std::shared_ptr<const RankTable> table, GreedyOrder order = GreedyOrder::ascending_id);
};

struct SessionParams {
    double epsilon = 0.0;
    double delta = 0.1;
    RepetitionForm form = RepetitionForm::half_gap;
};

namespace detail {

// Rank-net search with each net built when the descent reaches it.
struct RankNetEngine {
    RankNet net;
    ChampionScan scan;
    std::optional<ItemId> result;
    int level = 1;
    bool operator==(const RankNetEngine&) const = default;
};

// Descent of a precomputed tree, nearest member by champion scan or, in
// noisy mode, by tournament.
struct TreeEngine {
    int node = 0;
    std::variant<ChampionScan, Tournament> selector;
    std::optional<ItemId> result;
    int level = 1;
    bool operator==(const TreeEngine&) const = default;
};

struct GbsEngine {
    GbsVariant variant = GbsVariant::fast;
    VersionSpace v;
    std::optional<QueryChoice> pending;
    std::optional<ItemId> result;
    bool operator==(const GbsEngine&) const = default;
};

}  // namespace detail

// Resumable search: emits the next comparison, consumes the answer. Copying
// a session forks it; replaying the same answers reproduces it exactly.
class SearchSession {
public:
    static SearchSession start(const SearchContext& ctx, Algorithm algorithm, const SessionParams& params = {});

    Algorithm algorithm() const { return algorithm_; }
    std::optional<Query> next() const;
    bool finished() const;
    ItemId result() const;  // throws ProtocolError while awaiting
    void answer(Answer a);  // throws ProtocolError when finished
    int level() const;

    const QueryLog& log() const { return log_; }
    const CostCounters& cost() const { return cost_; }
    std::string transcript() const;
    nlohmann::json state_json() const;

    // Structural equality of the state machine (inputs compared by identity).
    bool same_state(const SearchSession& other) const;

private:
    SearchSession() = default;
    void select_for_current_node(detail::TreeEngine& e);
    void prepare_gbs(detail::GbsEngine& e);
    void descend_while_decided();

    Algorithm algorithm_ = Algorithm::tree;
    SearchContext ctx_;
    SessionParams params_;
    std::variant<detail::GbsEngine, detail::RankNetEngine, detail::TreeEngine> engine_;
    QueryLog log_;
    CostCounters cost_;
};

// Drives the session to completion against the oracle.
ItemId run_session(SearchSession& session, Oracle& oracle);

ItemId rank_net_search(Oracle& oracle, const SearchContext& ctx);
ItemId tree_search(Oracle& oracle, const SearchContext& ctx);
ItemId noisy_search(Oracle& noisy_oracle, const SearchContext& ctx, double epsilon, double delta);

}  // namespace cmpsearch
