#include "cmpsearch/search.hpp"

#include <bit>
#include <cmath>

namespace cmpsearch {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ranknet: return "ranknet";
        case Algorithm::tree: return "tree";
        case Algorithm::noisy: return "noisy";
        case Algorithm::gbs: return "gbs";
        case Algorithm::fgbs: return "fgbs";
        case Algorithm::sgbs: return "sgbs";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& name) {
    for (auto a : {Algorithm::ranknet, Algorithm::tree, Algorithm::noisy, Algorithm::gbs, Algorithm::fgbs,
                   Algorithm::sgbs})
        if (to_string(a) == name) return a;
    if (name == "f-gbs") return Algorithm::fgbs;
    if (name == "s-gbs") return Algorithm::sgbs;
    if (name == "t-ranknet") return Algorithm::tree;
    throw InputError("unknown algorithm '" + name + "' (ranknet, tree, noisy, gbs, fgbs, sgbs)");
}

bool is_noisy(Algorithm a) { return a == Algorithm::noisy; }

std::uint64_t repetition_factor(std::uint64_t level, std::uint64_t m, double epsilon, double delta,
                                RepetitionForm form) {
    if (level < 1 || m < 1) throw InputError("repetition_factor needs level >= 1 and m >= 1");
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw InputError("noise rate epsilon must lie in [0, 0.5)");
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("failure probability delta must lie in (0, 1)");
    if (m == 1) return 0;
    const double games = static_cast<double>(std::bit_width(m - 1));  // ceil(log2 m)
    const double base = static_cast<double>(level) + 1.0 / delta;
    const double gap = form == RepetitionForm::half_gap ? 0.5 - epsilon : 1.0 - epsilon;
    const double value = 2.0 * std::log(base * base * games) / (gap * gap);
    auto k = static_cast<std::uint64_t>(std::ceil(value));
    if (k % 2 == 0) ++k;
    return k;
}

ChampionScan::ChampionScan(std::vector<ItemId> members) : members_(std::move(members)) {
    if (members_.empty()) throw Error("champion scan over an empty net");
    champion_ = members_.front();
}

std::optional<Query> ChampionScan::pending() const {
    if (done()) return std::nullopt;
    return Query{members_[next_], champion_};
}

void ChampionScan::submit(Answer a) {
    if (done()) throw ProtocolError("champion scan already finished");
    if (a == Answer::plus) champion_ = members_[next_];
    ++next_;
}

Tournament::Tournament(std::vector<ItemId> players, std::uint64_t k) : round_(std::move(players)), k_(k) {
    if (round_.empty()) throw Error("tournament without players");
    if (round_.size() > 1 && k_ == 0) throw Error("tournament needs at least one game per match");
}

std::optional<Query> Tournament::pending() const {
    if (done()) return std::nullopt;
    return Query{round_[2 * match_], round_[2 * match_ + 1]};
}

void Tournament::submit(Answer a) {
    if (done()) throw ProtocolError("tournament already finished");
    if (a == Answer::plus) ++first_wins_;
    if (++played_ == k_) finish_match();
}

void Tournament::finish_match() {
    const ItemId first = round_[2 * match_];
    const ItemId second = round_[2 * match_ + 1];
    const std::uint64_t second_wins = played_ - first_wins_;
    next_round_.push_back(second_wins > first_wins_ ? second : first);
    played_ = 0;
    first_wins_ = 0;
    ++match_;
    if (2 * match_ + 1 >= round_.size()) {
        if (round_.size() % 2 == 1) next_round_.push_back(round_.back());
        round_ = std::move(next_round_);
        next_round_.clear();
        match_ = 0;
    }
}

ItemId nearest_in_net(Oracle& oracle, std::span<const ItemId> members) {
    ChampionScan scan({members.begin(), members.end()});
    while (auto q = scan.pending()) scan.submit(oracle.ask(q->first, q->second));
    return scan.winner();
}

ItemId tournament(Oracle& oracle, std::span<const ItemId> members, std::uint64_t k) {
    Tournament t({members.begin(), members.end()}, k);
    while (auto q = t.pending()) t.submit(oracle.ask(q->first, q->second));
    return t.winner();
}

SearchContext SearchContext::prepare(std::shared_ptr<const RankTable> table, GreedyOrder order) {
    SearchContext ctx;
    ctx.table = std::move(table);
    ctx.order = order;
    auto tree = std::make_shared<const RankNetTree>(build_tree(*ctx.table, {order, true}));
    ctx.same_net_pairs = std::make_shared<const PairSet>(PairSet::same_net(*tree));
    ctx.tree = std::move(tree);
    return ctx;
}

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

const PairSet& pairs_for(const SearchContext& ctx, GbsVariant v, const PairSet& all, const PairSet& within) {
    switch (v) {
        case GbsVariant::full: return all;
        case GbsVariant::fast: return within;
        case GbsVariant::sparse:
            if (!ctx.same_net_pairs) throw Error("s-gbs needs the same-net pair set");
            return *ctx.same_net_pairs;
    }
    return within;
}

}  // namespace

void SearchSession::select_for_current_node(detail::TreeEngine& e) {
    const auto& net = ctx_.tree->node(e.node).net;
    if (algorithm_ == Algorithm::noisy) {
        const auto k = repetition_factor(static_cast<std::uint64_t>(e.level), net.members.size(), params_.epsilon,
                                         params_.delta, params_.form);
        e.selector = Tournament(net.members, k);
    } else {
        e.selector = ChampionScan(net.members);
    }
}

void SearchSession::prepare_gbs(detail::GbsEngine& e) {
    const auto& table = *ctx_.table;
    cost_.table_lookups += e.v.size();
    if (is_resolved(table, e.v)) {
        e.pending.reset();
        e.result = resolved_item(table, e.v);
        return;
    }
    static const PairSet all = PairSet::all();
    static const PairSet within = PairSet::within_version_space();
    e.pending = select_query(table, e.v, pairs_for(ctx_, e.variant, all, within), &cost_);
    if (!e.pending) throw Error("no informative query for an unresolved version space");
}

namespace {

bool selector_done(const std::variant<ChampionScan, Tournament>& s) {
    return std::visit([](const auto& x) { return x.done(); }, s);
}

ItemId selector_winner(const std::variant<ChampionScan, Tournament>& s) {
    return std::visit([](const auto& x) { return x.winner(); }, s);
}

}  // namespace

SearchSession SearchSession::start(const SearchContext& ctx, Algorithm algorithm, const SessionParams& params) {
    if (!ctx.table) throw Error("search context has no rank table");
    SearchSession s;
    s.algorithm_ = algorithm;
    s.ctx_ = ctx;
    s.params_ = params;
    const auto& table = *ctx.table;
    switch (algorithm) {
        case Algorithm::ranknet: {
            const auto all = Domain::all(table, &s.cost_);
            detail::RankNetEngine e{build_rank_net(table, all.items.front(), all, ctx.order, &s.cost_),
                                    ChampionScan({0}), std::nullopt, 1};
            e.scan = ChampionScan(e.net.members);
            s.engine_ = std::move(e);
            break;
        }
        case Algorithm::tree:
        case Algorithm::noisy: {
            if (!ctx.tree) throw Error("tree search needs a precomputed rank-net tree");
            if (algorithm == Algorithm::noisy) {
                // Validates epsilon and delta up front.
                (void)repetition_factor(1, 1, params.epsilon, params.delta, params.form);
            }
            detail::TreeEngine e{0, ChampionScan({0}), std::nullopt, 1};
            s.select_for_current_node(e);
            s.engine_ = std::move(e);
            break;
        }
        case Algorithm::gbs:
        case Algorithm::fgbs:
        case Algorithm::sgbs: {
            detail::GbsEngine e;
            e.variant = algorithm == Algorithm::gbs    ? GbsVariant::full
                        : algorithm == Algorithm::fgbs ? GbsVariant::fast
                                                       : GbsVariant::sparse;
            e.v.resize(table.size());
            for (ItemId i = 0; i < e.v.size(); ++i) e.v[i] = i;
            s.prepare_gbs(e);
            s.engine_ = std::move(e);
            break;
        }
    }
    // A single-member net needs no query; descend right away.
    s.descend_while_decided();
    return s;
}

void SearchSession::descend_while_decided() {
    std::visit(overloaded{
                   [&](detail::RankNetEngine& e) {
                       const auto& table = *ctx_.table;
                       while (!e.result && e.scan.done()) {
                           const ItemId w = e.scan.winner();
                           const Ball* ball = e.net.ball_of(w);
                           ++cost_.table_lookups;
                           if (ball->zero_radius()) {
                               e.result = w;
                               break;
                           }
                           auto domain = Domain::of(table, ball->members, &cost_);
                           if (!(domain.mass > 0.0)) {
                               e.result = w;
                               break;
                           }
                           e.net = build_rank_net(table, w, domain, ctx_.order, &cost_);
                           e.scan = ChampionScan(e.net.members);
                           ++e.level;
                       }
                   },
                   [&](detail::TreeEngine& e) {
                       while (!e.result && selector_done(e.selector)) {
                           const ItemId w = selector_winner(e.selector);
                           const Ball* ball = ctx_.tree->node(e.node).net.ball_of(w);
                           ++cost_.table_lookups;
                           if (ball->child < 0) {
                               e.result = w;
                               break;
                           }
                           e.node = ball->child;
                           ++e.level;
                           select_for_current_node(e);
                       }
                   },
                   [&](detail::GbsEngine&) {},
               },
               engine_);
}

std::optional<Query> SearchSession::next() const {
    return std::visit(overloaded{
                          [](const detail::RankNetEngine& e) -> std::optional<Query> {
                              if (e.result) return std::nullopt;
                              return e.scan.pending();
                          },
                          [](const detail::TreeEngine& e) -> std::optional<Query> {
                              if (e.result) return std::nullopt;
                              return std::visit([](const auto& s) { return s.pending(); }, e.selector);
                          },
                          [](const detail::GbsEngine& e) -> std::optional<Query> {
                              if (e.result || !e.pending) return std::nullopt;
                              return Query{e.pending->x, e.pending->y};
                          },
                      },
                      engine_);
}

bool SearchSession::finished() const {
    return std::visit([](const auto& e) { return e.result.has_value(); }, engine_);
}

ItemId SearchSession::result() const {
    auto r = std::visit([](const auto& e) { return e.result; }, engine_);
    if (!r) throw ProtocolError("search session has not finished");
    return *r;
}

int SearchSession::level() const {
    return std::visit(overloaded{
                          [](const detail::RankNetEngine& e) { return e.level; },
                          [](const detail::TreeEngine& e) { return e.level; },
                          [this](const detail::GbsEngine&) { return static_cast<int>(log_.query_count()) + 1; },
                      },
                      engine_);
}

void SearchSession::answer(Answer a) {
    const auto q = next();
    if (!q) throw ProtocolError("search session has already finished");
    if (auto* g = std::get_if<detail::GbsEngine>(&engine_)) {
        CostCounters update_cost;
        auto v = update_version_space(*ctx_.table, g->v, q->first, q->second, a, &update_cost);
        if (v.empty()) throw ProtocolError("answer history is inconsistent with every hypothesis");
        log_.append(q->first, q->second, a);
        ++cost_.oracle_queries;
        cost_ += update_cost;
        g->v = std::move(v);
        prepare_gbs(*g);
        return;
    }
    log_.append(q->first, q->second, a);
    ++cost_.oracle_queries;
    ++cost_.table_lookups;
    std::visit(overloaded{
                   [&](detail::RankNetEngine& e) { e.scan.submit(a); },
                   [&](detail::TreeEngine& e) { std::visit([&](auto& s) { s.submit(a); }, e.selector); },
                   [](detail::GbsEngine&) {},
               },
               engine_);
    descend_while_decided();
}

std::string SearchSession::transcript() const {
    if (finished()) {
        const ItemId r = result();
        return transcript_jsonl(log_, &r);
    }
    return transcript_jsonl(log_, nullptr);
}

nlohmann::json SearchSession::state_json() const {
    nlohmann::json j;
    j["status"] = finished() ? "finished" : "awaiting";
    if (auto q = next()) j["pair"] = {q->first, q->second};
    if (finished()) j["result"] = result();
    j["queries_so_far"] = log_.query_count();
    j["level"] = level();
    j["algorithm"] = to_string(algorithm_);
    return j;
}

bool SearchSession::same_state(const SearchSession& other) const {
    return algorithm_ == other.algorithm_ && ctx_.table == other.ctx_.table && ctx_.tree == other.ctx_.tree &&
           engine_ == other.engine_ && log_ == other.log_ && cost_ == other.cost_;
}

ItemId run_session(SearchSession& session, Oracle& oracle) {
    while (auto q = session.next()) session.answer(oracle.ask(q->first, q->second));
    return session.result();
}

ItemId rank_net_search(Oracle& oracle, const SearchContext& ctx) {
    auto s = SearchSession::start(ctx, Algorithm::ranknet);
    return run_session(s, oracle);
}

ItemId tree_search(Oracle& oracle, const SearchContext& ctx) {
    auto s = SearchSession::start(ctx, Algorithm::tree);
    return run_session(s, oracle);
}

ItemId noisy_search(Oracle& noisy_oracle, const SearchContext& ctx, double epsilon, double delta) {
    auto s = SearchSession::start(ctx, Algorithm::noisy, {epsilon, delta, RepetitionForm::half_gap});
    return run_session(s, noisy_oracle);
}

}  // namespace cmpsearch
