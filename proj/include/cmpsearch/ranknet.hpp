#pragma once

#include "cmpsearch/rank_table.hpp"
#include "cmpsearch/types.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmpsearch {

// Explicit item set with its (restricted) prior mass.
// Items a net is built over. Zero-mass items are dropped: they are never
// targets, and a zero-mass center keeps a positive-mass neighbour in its ball
// for every rho, which would stall the halving loop.
struct Domain {
    std::vector<ItemId> items;  // ascending, all of positive mass
    double mass = 0.0;

    static Domain of(const RankTable& table, std::vector<ItemId> items, CostCounters* cost = nullptr);
    static Domain all(const RankTable& table, CostCounters* cost = nullptr);
    std::size_t size() const { return items.size(); }
    bool operator==(const Domain&) const = default;
};

// Ball radius d_y(rho, E) expressed as a class index of the owner's row: the
// smallest prefix of classes whose global mass reaches rho * mu(E).
struct RadiusRank {
    ItemId owner = 0;
    ClassIndex class_index = 1;
    double threshold_mass = 0.0;
};

RadiusRank radius_rank(const RankTable& table, const Domain& domain, ItemId y, double rho,
                       CostCounters* cost = nullptr);

// d(y, y') > min{d_y, d_y'} for closed balls, i.e. at least one of the two
// lies outside the other's radius ball.
bool net_condition(const RankTable& table, const RadiusRank& a, const RadiusRank& b, CostCounters* cost = nullptr);

enum class GreedyOrder { ascending_id, descending_id };

// Scans the domain in order, admitting every candidate that satisfies the
// net condition against all members admitted so far.
std::vector<ItemId> greedy_net(const RankTable& table, const Domain& domain, double rho,
                               GreedyOrder order = GreedyOrder::ascending_id, CostCounters* cost = nullptr);

struct Ball {
    ItemId center = 0;
    ClassIndex radius_class = 1;
    std::vector<ItemId> members;  // {z in E : rank_of(center, z) <= radius_class}, ascending
    double mass = 0.0;            // global mass of the full closed ball
    int child = -1;               // tree node index, -1 if none

    bool zero_radius() const { return radius_class == 1; }
    bool operator==(const Ball&) const = default;
};

// Voronoi assignment of E \ R to every nearest member, then circumscription:
// each member's ball is the prefix of its classes up to the farthest assigned
// element, intersected with E. Balls come back in member order.
std::vector<Ball> voronoi_balls(const RankTable& table, const Domain& domain, std::span<const ItemId> members,
                                CostCounters* cost = nullptr);

struct RankNet {
    ItemId root = 0;
    Domain domain;
    double rho = 0.5;
    std::vector<ItemId> members;  // scan order
    std::vector<Ball> balls;      // parallel to members
    int halvings = 1;
    CostCounters build_cost;             // all rho iterations
    std::uint64_t max_iteration_lookups = 0;  // largest single (net + balls) construction

    const Ball* ball_of(ItemId member) const;
    bool operator==(const RankNet&) const = default;
};

// Halves rho from 1 until every ball of positive radius has global mass at
// most half of mu(E). Throws Error if rho drops below the numerical floor.
RankNet build_rank_net(const RankTable& table, ItemId root, const Domain& domain,
                       GreedyOrder order = GreedyOrder::ascending_id, CostCounters* cost = nullptr);

struct NetBoundsCheck {
    bool net_size_ok = true;     // |R| <= c^3 / rho
    bool ball_mass_ok = true;    // positive-radius ball mass <= c^3 rho mu(E)
    bool final_rho_ok = true;    // rho > 1 / (4 c^3)
    bool ok() const { return net_size_ok && ball_mass_ok && final_rho_ok; }
    std::string describe() const;
};

NetBoundsCheck check_net_bounds(const RankNet& net, double doubling_constant);

// Coverage: every domain item lies within some member's d_y ball.
bool covers_domain(const RankTable& table, const RankNet& net);
// Maximality: no non-member satisfies the net condition against every member.
bool is_maximal(const RankTable& table, const RankNet& net);

struct TreeNode {
    RankNet net;
    int parent = -1;
    int parent_ball = -1;
    int depth = 0;  // root 0
    bool operator==(const TreeNode&) const = default;
};

// Rank nets for every reachable ball, node 0 at the root. Balls of positive
// radius and positive restricted mass own a child node.
class RankNetTree {
public:
    RankNetTree() = default;
    explicit RankNetTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const TreeNode& root() const { return nodes_.front(); }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t depth() const;
    bool operator==(const RankNetTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

struct TreeBuildOptions {
    GreedyOrder order = GreedyOrder::ascending_id;
    bool parallel = true;  // build each tree level's nets concurrently
};

RankNetTree build_tree(const RankTable& table, const TreeBuildOptions& options = {});

// Nested {node: {domain_size, rho, members, balls: [{center, radius_class,
// member_ids, child?}]}} with a versioned header.
nlohmann::json to_json(const RankNetTree& tree);
RankNetTree rank_net_tree_from_json(const nlohmann::json& j);

}  // namespace cmpsearch
