#include "cmpsearch/ranknet.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace cmpsearch {

namespace {

std::uint64_t* lookups_of(CostCounters* cost) { return cost ? &cost->table_lookups : nullptr; }

void add_lookups(CostCounters* cost, std::uint64_t k) {
    if (cost) cost->table_lookups += k;
}

}  // namespace

Domain Domain::of(const RankTable& table, std::vector<ItemId> items, CostCounters* cost) {
    if (cost) cost->mass_additions += items.size();
    std::erase_if(items, [&](ItemId z) { return !(table.mass(z) > 0.0); });
    std::sort(items.begin(), items.end());
    Domain d{std::move(items), 0.0};
    for (ItemId z : d.items) d.mass += table.mass(z);
    return d;
}

Domain Domain::all(const RankTable& table, CostCounters* cost) {
    std::vector<ItemId> items(table.size());
    for (ItemId i = 0; i < items.size(); ++i) items[i] = i;
    return of(table, std::move(items), cost);
}

RadiusRank radius_rank(const RankTable& table, const Domain& domain, ItemId y, double rho, CostCounters* cost) {
    if (!(domain.mass > 0.0)) throw Error("radius_rank: domain has zero prior mass");
    const double threshold = rho * domain.mass;
    return {y, table.smallest_prefix_reaching(y, threshold, lookups_of(cost)), threshold};
}

bool net_condition(const RankTable& table, const RadiusRank& a, const RadiusRank& b, CostCounters* cost) {
    add_lookups(cost, 2);
    return table.rank_of(a.owner, b.owner) > a.class_index || table.rank_of(b.owner, a.owner) > b.class_index;
}

namespace {

std::vector<ItemId> scan_order(const Domain& domain, GreedyOrder order) {
    std::vector<ItemId> out = domain.items;
    if (order == GreedyOrder::descending_id) std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<ItemId> greedy_net(const RankTable& table, const Domain& domain, double rho, GreedyOrder order,
                               CostCounters* cost) {
    const auto candidates = scan_order(domain, order);
    std::vector<RadiusRank> radius;
    radius.reserve(candidates.size());
    for (ItemId y : candidates) radius.push_back(radius_rank(table, domain, y, rho, cost));

    std::vector<char> excluded(candidates.size(), 0);
    std::vector<ItemId> members;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (excluded[i]) continue;
        members.push_back(candidates[i]);
        for (std::size_t j = i + 1; j < candidates.size(); ++j)
            if (!excluded[j] && !net_condition(table, radius[i], radius[j], cost)) excluded[j] = 1;
    }
    return members;
}

std::vector<Ball> voronoi_balls(const RankTable& table, const Domain& domain, std::span<const ItemId> members,
                                CostCounters* cost) {
    std::vector<Ball> balls(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) balls[k].center = members[k];

    std::vector<char> is_member(table.size(), 0);
    for (ItemId y : members) is_member[y] = 1;

    std::uint64_t lookups = 0;
    for (ItemId z : domain.items) {
        if (is_member[z]) continue;
        ClassIndex nearest = ~ClassIndex{0};
        for (ItemId y : members) nearest = std::min(nearest, table.rank_of(z, y));
        lookups += members.size();
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (table.rank_of(z, members[k]) != nearest) continue;
            balls[k].radius_class = std::max(balls[k].radius_class, table.rank_of(members[k], z));
            lookups += 1;
        }
        lookups += members.size();
    }
    for (auto& b : balls) {
        for (ItemId z : domain.items)
            if (table.rank_of(b.center, z) <= b.radius_class) b.members.push_back(z);
        lookups += domain.items.size() + 1;
        b.mass = table.cum_mass(b.center, b.radius_class);
    }
    add_lookups(cost, lookups);
    return balls;
}

const Ball* RankNet::ball_of(ItemId member) const {
    for (const auto& b : balls)
        if (b.center == member) return &b;
    return nullptr;
}

RankNet build_rank_net(const RankTable& table, ItemId root, const Domain& domain, GreedyOrder order,
                       CostCounters* cost) {
    if (!std::binary_search(domain.items.begin(), domain.items.end(), root))
        throw Error("build_rank_net: root is not in the domain");
    if (!(domain.mass > 0.0)) throw Error("build_rank_net: domain has zero prior mass");

    double min_mass = domain.mass;
    for (ItemId z : domain.items)
        if (table.mass(z) > 0.0) min_mass = std::min(min_mass, table.mass(z));
    const double rho_floor = min_mass / domain.mass / 1024.0;

    RankNet net;
    net.root = root;
    net.domain = domain;
    net.halvings = 0;
    double rho = 1.0;
    for (;;) {
        rho /= 2;
        ++net.halvings;
        if (rho < rho_floor)
            throw Error("build_rank_net: rho fell below " + std::to_string(rho_floor) + " on a domain of " +
                        std::to_string(domain.size()) + " items without meeting the halving exit test");
        CostCounters iteration;
        auto members = greedy_net(table, domain, rho, order, &iteration);
        auto balls = voronoi_balls(table, domain, members, &iteration);
        net.max_iteration_lookups = std::max(net.max_iteration_lookups, iteration.table_lookups);

        bool done = true;
        for (const auto& b : balls) {
            ++iteration.table_lookups;
            if (!b.zero_radius() && b.mass > 0.5 * domain.mass) {
                done = false;
                break;
            }
        }
        net.build_cost += iteration;
        if (done) {
            net.rho = rho;
            net.members = std::move(members);
            net.balls = std::move(balls);
            break;
        }
    }
    if (cost) *cost += net.build_cost;
    return net;
}

std::string NetBoundsCheck::describe() const {
    std::ostringstream os;
    os << "net-size " << (net_size_ok ? "ok" : "VIOLATED") << ", ball-mass " << (ball_mass_ok ? "ok" : "VIOLATED")
       << ", final-rho " << (final_rho_ok ? "ok" : "VIOLATED");
    return os.str();
}

NetBoundsCheck check_net_bounds(const RankNet& net, double c) {
    constexpr double slack = 1.0 + 1e-12;
    const double c3 = c * c * c;
    NetBoundsCheck out;
    out.net_size_ok = static_cast<double>(net.members.size()) <= c3 / net.rho * slack;
    for (const auto& b : net.balls)
        if (!b.zero_radius() && b.mass > c3 * net.rho * net.domain.mass * slack) out.ball_mass_ok = false;
    out.final_rho_ok = net.rho > 1.0 / (4.0 * c3);
    return out;
}

bool covers_domain(const RankTable& table, const RankNet& net) {
    for (ItemId z : net.domain.items) {
        bool covered = false;
        for (ItemId y : net.members) {
            const auto r = radius_rank(table, net.domain, y, net.rho);
            if (table.rank_of(y, z) <= r.class_index) {
                covered = true;
                break;
            }
        }
        if (!covered) return false;
    }
    return true;
}

bool is_maximal(const RankTable& table, const RankNet& net) {
    for (ItemId z : net.domain.items) {
        if (std::find(net.members.begin(), net.members.end(), z) != net.members.end()) continue;
        const auto rz = radius_rank(table, net.domain, z, net.rho);
        bool addable = true;
        for (ItemId y : net.members)
            if (!net_condition(table, rz, radius_rank(table, net.domain, y, net.rho))) {
                addable = false;
                break;
            }
        if (addable) return false;
    }
    return true;
}

std::size_t RankNetTree::depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, static_cast<std::size_t>(n.depth) + 1);
    return d;
}

RankNetTree build_tree(const RankTable& table, const TreeBuildOptions& options) {
    if (table.size() == 0) throw Error("build_tree: empty rank table");
    std::vector<TreeNode> nodes;
    const auto all = Domain::all(table);
    nodes.push_back({build_rank_net(table, all.items.front(), all, options.order), -1, -1, 0});

    struct Pending {
        int parent;
        int ball;
        Domain domain;
        ItemId center;
    };
    std::vector<int> frontier{0};
    while (!frontier.empty()) {
        std::vector<Pending> work;
        for (int idx : frontier) {
            const auto& balls = nodes[static_cast<std::size_t>(idx)].net.balls;
            for (std::size_t b = 0; b < balls.size(); ++b) {
                if (balls[b].zero_radius()) continue;
                auto dom = Domain::of(table, balls[b].members);
                if (!(dom.mass > 0.0)) continue;
                work.push_back({idx, static_cast<int>(b), std::move(dom), balls[b].center});
            }
        }
        std::vector<RankNet> built(work.size());
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel)
        for (std::size_t i = 0; i < work.size(); ++i) {
            try {
                built[i] = build_rank_net(table, work[i].center, work[i].domain, options.order);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);

        frontier.clear();
        for (std::size_t i = 0; i < work.size(); ++i) {
            const int id = static_cast<int>(nodes.size());
            auto& parent = nodes[static_cast<std::size_t>(work[i].parent)];
            parent.net.balls[static_cast<std::size_t>(work[i].ball)].child = id;
            const int depth = parent.depth + 1;
            nodes.push_back({std::move(built[i]), work[i].parent, work[i].ball, depth});
            frontier.push_back(id);
        }
    }
    return RankNetTree(std::move(nodes));
}

namespace {

nlohmann::json node_json(const RankNetTree& tree, int idx) {
    const auto& net = tree.node(idx).net;
    nlohmann::json balls = nlohmann::json::array();
    for (const auto& b : net.balls) {
        nlohmann::json jb = {{"center", b.center},
                             {"radius_class", b.radius_class},
                             {"member_ids", b.members},
                             {"mass", b.mass}};
        if (b.child >= 0) jb["child"] = node_json(tree, b.child);
        balls.push_back(std::move(jb));
    }
    return {{"domain_size", net.domain.size()},
            {"domain_mass", net.domain.mass},
            {"root", net.root},
            {"rho", net.rho},
            {"halvings", net.halvings},
            {"members", net.members},
            {"cost",
             {{"table_lookups", net.build_cost.table_lookups},
              {"mass_additions", net.build_cost.mass_additions},
              {"max_iteration_lookups", net.max_iteration_lookups}}},
            {"balls", std::move(balls)}};
}

}  // namespace

nlohmann::json to_json(const RankNetTree& tree) {
    return {{"format", "cmpsearch.rank_net_tree"},
            {"version", 1},
            {"node_count", tree.size()},
            {"node", node_json(tree, 0)}};
}

RankNetTree rank_net_tree_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "cmpsearch.rank_net_tree") throw InputError("not a rank-net tree file");
    if (j.value("version", 0) != 1) throw InputError("unsupported rank-net tree version");

    // Children are numbered breadth-first, matching build_tree.
    struct Item {
        const nlohmann::json* node;
        std::vector<ItemId> domain;
        int parent;
        int ball;
        int depth;
    };
    std::vector<TreeNode> nodes;
    std::vector<Item> queue;
    const auto& root = j.at("node");
    std::vector<ItemId> all(root.at("domain_size").get<std::size_t>());
    for (ItemId i = 0; i < all.size(); ++i) all[i] = i;
    queue.push_back({&root, std::move(all), -1, -1, 0});
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const nlohmann::json& jn = *queue[head].node;
        TreeNode tn;
        tn.parent = queue[head].parent;
        tn.parent_ball = queue[head].ball;
        tn.depth = queue[head].depth;
        tn.net.root = jn.at("root").get<ItemId>();
        tn.net.domain = {queue[head].domain, jn.at("domain_mass").get<double>()};
        tn.net.rho = jn.at("rho").get<double>();
        tn.net.halvings = jn.at("halvings").get<int>();
        tn.net.members = jn.at("members").get<std::vector<ItemId>>();
        const auto& jc = jn.at("cost");
        tn.net.build_cost.table_lookups = jc.at("table_lookups").get<std::uint64_t>();
        tn.net.build_cost.mass_additions = jc.at("mass_additions").get<std::uint64_t>();
        tn.net.max_iteration_lookups = jc.at("max_iteration_lookups").get<std::uint64_t>();
        if (tn.net.domain.size() != jn.at("domain_size").get<std::size_t>())
            throw InputError("rank-net tree: domain_size does not match parent ball");
        const int self = static_cast<int>(head);
        const auto& jballs = jn.at("balls");
        for (std::size_t b = 0; b < jballs.size(); ++b) {
            const auto& jb = jballs[b];
            Ball ball;
            ball.center = jb.at("center").get<ItemId>();
            ball.radius_class = jb.at("radius_class").get<ClassIndex>();
            ball.members = jb.at("member_ids").get<std::vector<ItemId>>();
            ball.mass = jb.at("mass").get<double>();
            if (jb.contains("child")) {
                ball.child = static_cast<int>(queue.size());
                queue.push_back({&jb.at("child"), ball.members, self, static_cast<int>(b), tn.depth + 1});
            }
            tn.net.balls.push_back(std::move(ball));
        }
        nodes.push_back(std::move(tn));
    }
    return RankNetTree(std::move(nodes));
}

}  // namespace cmpsearch
