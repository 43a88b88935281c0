#include "cmpsearch/ranknet.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace cmpsearch;

namespace {
RankTable l4_table() { return RankTable::build(Dataset::from_line("l4", {0, 1, 3, 7}), {}, Prior::uniform(4)); }
}  // namespace

TEST_CASE("radius ranks on the four-point line at rho = 1/2") {
    const auto t = l4_table();
    const auto e = Domain::all(t);
    CHECK(e.mass == 1.0);
    for (ItemId y = 0; y < 4; ++y) CHECK(radius_rank(t, e, y, 0.5).class_index == 2);
}

TEST_CASE("root net on the four-point line") {
    const auto t = l4_table();
    const auto net = build_rank_net(t, 0, Domain::all(t));
    CHECK(net.rho == 0.5);
    CHECK(net.members == std::vector<ItemId>{0, 2, 3});
    const Ball* b = net.ball_of(0);
    REQUIRE(b);
    CHECK(b->members == std::vector<ItemId>{0, 1});
    CHECK(b->mass == 0.5);
    CHECK(net.ball_of(2)->zero_radius());
    CHECK(covers_domain(t, net));
    CHECK(is_maximal(t, net));
    CHECK(check_net_bounds(net, 4.0).ok());
}

TEST_CASE("tree on the four-point line") {
    const auto t = l4_table();
    const auto tree = build_tree(t);
    REQUIRE(tree.size() == 2);
    CHECK(tree.node(1).net.domain.items == std::vector<ItemId>{0, 1});
    CHECK(tree.node(1).net.members == std::vector<ItemId>{0, 1});
    CHECK(tree.node(1).parent == 0);
    CHECK(tree.depth() == 2);
}

TEST_CASE("radius rank matches brute force on random domains") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 60; ++i) {
        const auto in = oracle::random_instance(rng, 25);
        const auto t = RankTable::build(in.data, in.metric, in.prior);
        std::vector<ItemId> items;
        for (ItemId z = 0; z < in.data.size(); ++z)
            if (in.prior[z] > 0.0 || rng() % 2) items.push_back(z);
        const auto dom = Domain::of(t, items);
        for (double rho : {1.0, 0.5, 0.25, 0.125, 1.0 / 64})
            for (ItemId y : items) REQUIRE(radius_rank(t, dom, y, rho).class_index == oracle::radius_rank(in, items, y, rho));
    }
}

TEST_CASE("nets on random instances") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 40; ++i) {
        const auto in = oracle::random_instance(rng, 30);
        const auto t = RankTable::build(in.data, in.metric, in.prior);
        for (auto order : {GreedyOrder::ascending_id, GreedyOrder::descending_id}) {
            const auto tree = build_tree(t, {order, true});
            CHECK(tree == build_tree(t, {order, false}));
            for (const auto& node : tree.nodes()) {
                CHECK(covers_domain(t, node.net));
                CHECK(is_maximal(t, node.net));
                for (std::size_t a = 0; a < node.net.members.size(); ++a)
                    for (std::size_t b = a + 1; b < node.net.members.size(); ++b) {
                        const auto ra = radius_rank(t, node.net.domain, node.net.members[a], node.net.rho);
                        const auto rb = radius_rank(t, node.net.domain, node.net.members[b], node.net.rho);
                        CHECK(net_condition(t, ra, rb));
                    }
                double positive_radius_mass_bound = 0.5 * node.net.domain.mass;
                for (const auto& b : node.net.balls)
                    if (!b.zero_radius()) CHECK(b.mass <= positive_radius_mass_bound);
            }
        }
    }
}

TEST_CASE("every support item ends in a leaf ball") {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 30; ++i) {
        const auto in = oracle::random_instance(rng, 30);
        const auto t = RankTable::build(in.data, in.metric, in.prior);
        const auto tree = build_tree(t);
        for (ItemId target : in.prior.support()) {
            // Follow the balls containing the target down to a leaf.
            int node = 0;
            for (int guard = 0; guard < 100; ++guard) {
                const Ball* hit = nullptr;
                for (const auto& b : tree.node(node).net.balls)
                    if (std::binary_search(b.members.begin(), b.members.end(), target)) hit = &b;
                REQUIRE(hit);
                if (hit->child < 0) {
                    CHECK(oracle::acceptable(in, target, hit->center));
                    break;
                }
                node = hit->child;
            }
        }
    }
}

TEST_CASE("tree json round trip") {
    const auto d = gen_l1_ball(60, 2, 1.0, 4);
    const auto t = RankTable::build(d, {}, Prior::powerlaw(60, 0.4, 4));
    const auto tree = build_tree(t);
    const auto j = to_json(tree);
    CHECK(j["format"] == "cmpsearch.rank_net_tree");
    CHECK(j["node_count"] == tree.size());
    CHECK(rank_net_tree_from_json(nlohmann::json::parse(j.dump())) == tree);
}

TEST_CASE("net bounds check flags violations") {
    const auto t = l4_table();
    const auto net = build_rank_net(t, 0, Domain::all(t));
    CHECK(check_net_bounds(net, 4.0).ok());
    // With c = 1 the bound |R| <= 1/rho = 2 fails for three members.
    const auto bad = check_net_bounds(net, 1.0);
    CHECK(!bad.net_size_ok);
    CHECK(!bad.describe().empty());
}

TEST_CASE("net construction cost stays within 8 |E| (|R| + log |E|)") {
    auto bound = [](const RankNet& net) {
        const double e = static_cast<double>(net.domain.size());
        return 8.0 * e * (static_cast<double>(net.members.size()) + std::max(1.0, std::log2(e)));
    };
    for (std::size_t n : {30, 150, 600}) {
        const auto t = RankTable::build(gen_l1_ball(n, 3, 1.0, 7), {}, Prior::powerlaw(n, 0.4, 0));
        const auto tree = build_tree(t);
        for (const auto& node : tree.nodes())
            CHECK(static_cast<double>(node.net.max_iteration_lookups) <= bound(node.net));
    }
    std::mt19937_64 rng(47);
    for (int i = 0; i < 40; ++i) {
        const auto in = oracle::random_instance(rng, 30);
        const auto t = RankTable::build(in.data, in.metric, in.prior);
        const auto tree = build_tree(t);
        for (const auto& node : tree.nodes())
            CHECK(static_cast<double>(node.net.max_iteration_lookups) <= bound(node.net));
    }
}
