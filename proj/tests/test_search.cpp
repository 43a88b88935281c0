#include "cmpsearch/search.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace cmpsearch;

namespace {
SearchContext l4_context() {
    auto t = std::make_shared<const RankTable>(
        RankTable::build(Dataset::from_line("l4", {0, 1, 3, 7}), {}, Prior::uniform(4)));
    return SearchContext::prepare(t);
}

std::uint64_t queries_for(const SearchContext& ctx, Algorithm a, ItemId target, ItemId* result = nullptr) {
    TableOracle o(*ctx.table, target);
    auto s = SearchSession::start(ctx, a);
    const ItemId r = run_session(s, o);
    if (result) *result = r;
    CHECK(o.calls() == s.log().query_count());
    return o.calls();
}
}  // namespace

TEST_CASE("per-target query counts on the four-point line") {
    const auto ctx = l4_context();
    const std::uint64_t expected[] = {3, 3, 2, 2};
    for (auto a : {Algorithm::ranknet, Algorithm::tree})
        for (ItemId t = 0; t < 4; ++t) {
            ItemId r = 99;
            CHECK(queries_for(ctx, a, t, &r) == expected[t]);
            CHECK(r == t);
        }
    for (auto a : {Algorithm::gbs, Algorithm::fgbs, Algorithm::sgbs})
        for (ItemId t = 0; t < 4; ++t) CHECK(queries_for(ctx, a, t) == 2);
}

TEST_CASE("single item needs no query") {
    auto t = std::make_shared<const RankTable>(RankTable::build(Dataset::from_line("one", {3}), {}, Prior::uniform(1)));
    const auto ctx = SearchContext::prepare(t);
    for (auto a : {Algorithm::ranknet, Algorithm::tree, Algorithm::gbs, Algorithm::fgbs, Algorithm::sgbs}) {
        auto s = SearchSession::start(ctx, a);
        CHECK(s.finished());
        CHECK(s.result() == 0);
    }
}

TEST_CASE("repetition factor") {
    CHECK(repetition_factor(1, 4, 0.25, 0.1) == 177);
    CHECK(repetition_factor(1, 1, 0.25, 0.1) == 0);
    CHECK(repetition_factor(1, 4, 0.25, 0.1) % 2 == 1);
    CHECK(repetition_factor(1, 4, 0.25, 0.1, RepetitionForm::unit_gap) < repetition_factor(1, 4, 0.25, 0.1));
    CHECK(repetition_factor(3, 4, 0.1, 0.1) > repetition_factor(1, 4, 0.1, 0.1));
    CHECK_THROWS_AS(repetition_factor(1, 4, 0.5, 0.1), InputError);
    CHECK_THROWS_AS(repetition_factor(1, 4, 0.1, 0.0), InputError);
    CHECK_THROWS_AS(repetition_factor(0, 4, 0.1, 0.1), InputError);
}

TEST_CASE("champion scan") {
    const auto ctx = l4_context();
    TableOracle o(*ctx.table, 2);
    const std::vector<ItemId> members{0, 3, 2, 1};
    CHECK(nearest_in_net(o, members) == 2);
    CHECK(o.calls() == 3);
}

TEST_CASE("tournament") {
    const auto ctx = l4_context();
    TableOracle o(*ctx.table, 3);
    const std::vector<ItemId> players{0, 1, 2};
    CHECK(tournament(o, players, 3) == 2);
    // Three players: one match then a final, 3 games each.
    CHECK(o.calls() == 6);

    // Equidistant players: every game answers -1, so the later slot wins.
    auto t = std::make_shared<const RankTable>(RankTable::build(Dataset::from_line("tie", {-1, 0, 1}), {}, Prior::uniform(3)));
    TableOracle mid(*t, 1);
    CHECK(tournament(mid, std::vector<ItemId>{2, 0}, 1) == 0);
    CHECK(tournament(mid, std::vector<ItemId>{0, 2}, 1) == 2);

    // Equal win counts go to the earlier slot.
    struct Alternating final : Oracle {
        Answer ask(ItemId, ItemId) override { return ++calls_ % 2 ? Answer::plus : Answer::minus; }
    } alt;
    CHECK(tournament(alt, std::vector<ItemId>{4, 9}, 2) == 4);

    Tournament single({5}, 0);
    CHECK(single.done());
    CHECK(single.winner() == 5);
    CHECK_THROWS(Tournament({1, 2}, 0));
}

TEST_CASE("sessions fork and replay") {
    const auto ctx = l4_context();
    for (auto a : {Algorithm::ranknet, Algorithm::tree, Algorithm::gbs, Algorithm::fgbs, Algorithm::sgbs}) {
        TableOracle o(*ctx.table, 0);
        auto s = SearchSession::start(ctx, a);
        run_session(s, o);
        auto replay = SearchSession::start(ctx, a);
        for (const auto& e : s.log().entries()) {
            CHECK(replay.next() == Query{e.x, e.y});
            auto fork = replay;
            replay.answer(e.answer);
            CHECK(!fork.same_state(replay));
        }
        CHECK(replay.same_state(s));
        CHECK(replay.transcript() == s.transcript());
        CHECK(replay.cost() == s.cost());
        CHECK_THROWS_AS(replay.answer(Answer::plus), ProtocolError);
    }
}

TEST_CASE("session state and transcript") {
    const auto ctx = l4_context();
    auto s = SearchSession::start(ctx, Algorithm::tree);
    CHECK_THROWS_AS(s.result(), ProtocolError);
    auto j = s.state_json();
    CHECK(j["status"] == "awaiting");
    CHECK(j["queries_so_far"] == 0);
    CHECK(j["level"] == 1);
    CHECK(j["pair"].size() == 2);
    TableOracle o(*ctx.table, 3);
    run_session(s, o);
    j = s.state_json();
    CHECK(j["status"] == "finished");
    CHECK(j["result"] == 3);
    CHECK(!j.contains("pair"));

    std::istringstream lines(s.transcript());
    std::string line;
    std::vector<nlohmann::json> rows;
    while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["seq"] == 0);
    CHECK(rows[0].contains("x"));
    CHECK(rows[2]["result"] == 3);
    CHECK(rows[2]["queries"] == 2);
}

TEST_CASE("gbs finishes under any answer stream") {
    // Only informative pairs are asked, so no answer can empty V.
    auto t = std::make_shared<const RankTable>(
        RankTable::build(Dataset::from_line("l5", {0, 1, 3, 7, 15}), {}, Prior::uniform(5)));
    const auto ctx = SearchContext::prepare(t);
    for (int pattern = 0; pattern < 32; ++pattern)
        for (auto a : {Algorithm::gbs, Algorithm::fgbs, Algorithm::sgbs}) {
            auto s = SearchSession::start(ctx, a);
            for (int k = 0; !s.finished(); ++k) {
                REQUIRE(k < 10);
                s.answer((pattern >> (k % 5)) & 1 ? Answer::plus : Answer::minus);
            }
            CHECK(s.result() < 5);
        }
}

TEST_CASE("noisy search with a noiseless oracle finds every target") {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 20; ++i) {
        const auto in = oracle::random_instance(rng, 20);
        auto t = std::make_shared<const RankTable>(RankTable::build(in.data, in.metric, in.prior));
        const auto ctx = SearchContext::prepare(t);
        for (ItemId target : in.prior.support()) {
            TableOracle o(*t, target);
            CHECK(oracle::acceptable(in, target, noisy_search(o, ctx, 0.2, 0.1)));
        }
    }
}

TEST_CASE("noisy search under noise on the four-point line") {
    const auto ctx = l4_context();
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        TableOracle exact(*ctx.table, seed % 4);
        NoisyOracle noisy(exact, 0.25, seed);
        ok += noisy_search(noisy, ctx, 0.25, 0.1) == seed % 4;
    }
    CHECK(ok >= 45);
}

TEST_CASE("rank-net and tree search agree on random instances") {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 30; ++i) {
        const auto in = oracle::random_instance(rng, 30);
        auto t = std::make_shared<const RankTable>(RankTable::build(in.data, in.metric, in.prior));
        for (auto order : {GreedyOrder::ascending_id, GreedyOrder::descending_id}) {
            const auto ctx = SearchContext::prepare(t, order);
            for (ItemId target : in.prior.support()) {
                TableOracle a(*t, target), b(*t, target);
                auto sa = SearchSession::start(ctx, Algorithm::ranknet);
                auto sb = SearchSession::start(ctx, Algorithm::tree);
                const ItemId ra = run_session(sa, a);
                CHECK(ra == run_session(sb, b));
                CHECK(sa.log() == sb.log());
                CHECK(oracle::acceptable(in, target, ra));
                CHECK(sb.cost().operations() <= sa.cost().operations());
            }
        }
    }
}

TEST_CASE("algorithm names") {
    CHECK(parse_algorithm("f-gbs") == Algorithm::fgbs);
    CHECK(parse_algorithm("s-gbs") == Algorithm::sgbs);
    CHECK(parse_algorithm("ranknet") == Algorithm::ranknet);
    CHECK(to_string(Algorithm::tree) == "tree");
    CHECK_THROWS_AS(parse_algorithm("bfs"), InputError);
    CHECK(is_noisy(Algorithm::noisy));
}

TEST_CASE("oracles") {
    const auto ctx = l4_context();
    TableOracle exact(*ctx.table, 0);
    CHECK(is_tie(exact, 1, 1));
    CHECK(!is_tie(exact, 1, 2));
    NoisyOracle quiet(exact, 0.0, 1);
    for (int i = 0; i < 20; ++i) CHECK(quiet.ask(1, 2) == Answer::plus);
    CHECK_THROWS(NoisyOracle(exact, 0.5, 1));
    LoggingOracle log(exact);
    log.ask(2, 1);
    CHECK(log.log().entries().front() == QueryRecord{2, 1, Answer::minus});
    CHECK(answer_from_int(1) == Answer::plus);
    CHECK_THROWS_AS(answer_from_int(0), ProtocolError);
}

TEST_CASE("one tournament fails at most (level + 1/delta)^-2 of the time") {
    const std::size_t n = 200;
    auto t = std::make_shared<const RankTable>(RankTable::build(gen_l1_ball(n, 3, 1.0, 5), {}, Prior::powerlaw(n, 0.4, 5)));
    const auto tree = build_tree(*t);
    const auto& members = tree.root().net.members;
    const double eps = 0.25, delta = 0.1;
    const std::uint64_t level = 1;
    const auto k = repetition_factor(level, members.size(), eps, delta);
    const int trials = 2000;
    int failures = 0;
    for (int i = 0; i < trials; ++i) {
        const ItemId target = static_cast<ItemId>(i % n);
        ClassIndex best = ~ClassIndex{0};
        for (ItemId m : members) best = std::min(best, t->rank_of(target, m));
        TableOracle exact(*t, target);
        NoisyOracle noisy(exact, eps, static_cast<std::uint64_t>(i));
        failures += t->rank_of(target, tournament(noisy, members, k)) != best;
    }
    const double p = 1.0 / std::pow(static_cast<double>(level) + 1.0 / delta, 2);
    const double sigma = std::sqrt(p * (1 - p) / trials);
    CHECK(static_cast<double>(failures) / trials <= p + 3 * sigma);
}
