#include "cmpsearch/gbs.hpp"

#include "cmpsearch/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace cmpsearch {

PairSet PairSet::same_net(const RankNetTree& tree) {
    std::vector<std::pair<ItemId, ItemId>> pairs;
    for (const auto& node : tree.nodes())
        for (ItemId a : node.net.members)
            for (ItemId b : node.net.members)
                if (a != b) pairs.emplace_back(a, b);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return PairSet(PairProvenance::same_net, std::move(pairs));
}

bool PairSet::contains(ItemId x, ItemId y) const {
    if (provenance_ != PairProvenance::same_net) return true;
    return std::binary_search(pairs_.begin(), pairs_.end(), std::make_pair(x, y));
}

std::string to_string(GbsVariant v) {
    switch (v) {
        case GbsVariant::full: return "gbs";
        case GbsVariant::fast: return "fgbs";
        case GbsVariant::sparse: return "sgbs";
    }
    return "?";
}

double gbs_objective(const RankTable& table, const VersionSpace& v, ItemId x, ItemId y, CostCounters* cost) {
    double sum = 0.0;
    for (ItemId z : v) sum += table.mass(z) * to_int(table.answer(z, x, y));
    if (cost) {
        cost->table_lookups += v.size();
        cost->mass_additions += v.size();
        ++cost->pair_evaluations;
    }
    return std::abs(sum);
}

namespace {

struct Best {
    double f = std::numeric_limits<double>::infinity();
    ItemId x = 0;
    ItemId y = 0;
    bool found = false;

    // Smaller objective first, then lexicographic (x, y).
    bool beats(const Best& o) const {
        if (!found) return false;
        if (!o.found) return true;
        if (f != o.f) return f < o.f;
        return std::make_pair(x, y) < std::make_pair(o.x, o.y);
    }
};

std::uint64_t pair_count(const PairSet& pairs, std::size_t n, std::size_t v) {
    switch (pairs.provenance()) {
        case PairProvenance::all: return static_cast<std::uint64_t>(n) * n;
        case PairProvenance::within_v: return static_cast<std::uint64_t>(v) * v;
        case PairProvenance::same_net: return pairs.pairs().size();
    }
    return 0;
}

// Scores every pair of the set over the positive-mass part of V. Zero-mass
// hypotheses add nothing to either side, so dropping them leaves both sums
// bit-identical.
Best score_pairs(const RankTable& table, const VersionSpace& v, const PairSet& pairs) {
    std::vector<ItemId> positive;
    std::vector<double> w;
    for (ItemId z : v)
        if (table.mass(z) > 0.0) {
            positive.push_back(z);
            w.push_back(table.mass(z));
        }
    const std::size_t m = positive.size();

    std::vector<ItemId> candidates;
    switch (pairs.provenance()) {
        case PairProvenance::all:
            candidates.resize(table.size());
            for (ItemId i = 0; i < candidates.size(); ++i) candidates[i] = i;
            break;
        case PairProvenance::within_v: candidates = v; break;
        case PairProvenance::same_net:
            for (const auto& [a, b] : pairs.pairs()) {
                candidates.push_back(a);
                candidates.push_back(b);
            }
            std::sort(candidates.begin(), candidates.end());
            candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
            break;
    }
    std::vector<std::int32_t> row_of(table.size(), -1);
    for (std::size_t c = 0; c < candidates.size(); ++c) row_of[candidates[c]] = static_cast<std::int32_t>(c);

    // ranks[c * m + k] = rank of candidate c as seen from positive[k]
    std::vector<ClassIndex> ranks(candidates.size() * m);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < candidates.size(); ++c)
        for (std::size_t k = 0; k < m; ++k) ranks[c * m + k] = table.rank_of(positive[k], candidates[c]);

    auto score = [&](std::size_t ca, std::size_t cb, Best& best) {
        const ClassIndex* ra = ranks.data() + ca * m;
        const ClassIndex* rb = ranks.data() + cb * m;
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (ra[k] < rb[k])
                plus += w[k];
            else
                minus += w[k];
        }
        if (!(plus > 0.0 && minus > 0.0)) return;
        Best cand{std::abs(plus - minus), candidates[ca], candidates[cb], true};
        if (cand.beats(best)) best = cand;
    };

    Best best;
    const bool implicit = pairs.provenance() != PairProvenance::same_net;
    const std::size_t outer = implicit ? candidates.size() : pairs.pairs().size();
#pragma omp parallel
    {
        Best local;
        // Dynamic chunks reach each thread in increasing order, so once a
        // thread holds f = 0 none of its later pairs can win.
#pragma omp for schedule(dynamic, 4)
        for (std::size_t i = 0; i < outer; ++i) {
            if (local.found && local.f == 0.0) continue;
            if (implicit) {
                for (std::size_t j = 0; j < candidates.size(); ++j)
                    if (j != i) score(i, j, local);
            } else {
                const auto& [a, b] = pairs.pairs()[i];
                score(static_cast<std::size_t>(row_of[a]), static_cast<std::size_t>(row_of[b]), local);
            }
        }
#pragma omp critical
        if (local.beats(best)) best = local;
    }
    return best;
}

void charge(CostCounters* cost, std::uint64_t pairs, std::size_t v) {
    if (!cost) return;
    cost->pair_evaluations += pairs;
    cost->table_lookups += pairs * v;
    cost->mass_additions += pairs * v;
}

}  // namespace

std::optional<QueryChoice> select_query(const RankTable& table, const VersionSpace& v, const PairSet& pairs,
                                        CostCounters* cost) {
    Best best = score_pairs(table, v, pairs);
    charge(cost, pair_count(pairs, table.size(), v.size()), v.size());
    if (!best.found && pairs.provenance() != PairProvenance::within_v) {
        const auto within = PairSet::within_version_space();
        best = score_pairs(table, v, within);
        charge(cost, pair_count(within, table.size(), v.size()), v.size());
    }
    if (!best.found) return std::nullopt;
    return QueryChoice{best.x, best.y, best.f};
}

namespace serial {

std::optional<QueryChoice> select_query(const RankTable& table, const VersionSpace& v, const PairSet& pairs) {
    auto scan = [&](const std::vector<std::pair<ItemId, ItemId>>& list) {
        std::optional<QueryChoice> best;
        for (const auto& [x, y] : list) {
            double plus = 0.0;
            double minus = 0.0;
            for (ItemId z : v) {
                if (table.answer(z, x, y) == Answer::plus)
                    plus += table.mass(z);
                else
                    minus += table.mass(z);
            }
            if (!(plus > 0.0 && minus > 0.0)) continue;
            const double f = std::abs(plus - minus);
            if (!best || f < best->objective) best = QueryChoice{x, y, f};
        }
        return best;
    };
    auto square = [](const std::vector<ItemId>& ids) {
        std::vector<std::pair<ItemId, ItemId>> out;
        for (ItemId x : ids)
            for (ItemId y : ids) out.emplace_back(x, y);
        return out;
    };
    std::vector<ItemId> everyone(table.size());
    for (ItemId i = 0; i < everyone.size(); ++i) everyone[i] = i;

    std::optional<QueryChoice> best;
    switch (pairs.provenance()) {
        case PairProvenance::all: best = scan(square(everyone)); break;
        case PairProvenance::within_v: best = scan(square(v)); break;
        case PairProvenance::same_net: best = scan(pairs.pairs()); break;
    }
    if (!best && pairs.provenance() != PairProvenance::within_v) best = scan(square(v));
    return best;
}

}  // namespace serial

VersionSpace update_version_space(const RankTable& table, const VersionSpace& v, ItemId x, ItemId y, Answer a,
                                  CostCounters* cost) {
    VersionSpace out;
    for (ItemId z : v)
        if (table.answer(z, x, y) == a) out.push_back(z);
    if (cost) cost->table_lookups += v.size();
    return out;
}

bool is_resolved(const RankTable& table, const VersionSpace& v) {
    const ItemId* anchor = nullptr;
    for (const ItemId& z : v) {
        if (!(table.mass(z) > 0.0)) continue;
        if (!anchor)
            anchor = &z;
        else if (!table.indistinguishable(*anchor, z))
            return false;
    }
    return true;
}

ItemId resolved_item(const RankTable& table, const VersionSpace& v) {
    for (ItemId z : v)
        if (table.mass(z) > 0.0) return z;
    if (v.empty()) throw ProtocolError("empty version space");
    return v.front();
}

ItemId gbs_search(Oracle& oracle, const RankTable& table, GbsVariant variant, const PairSet* same_net_pairs) {
    SearchContext ctx;
    ctx.table = std::shared_ptr<const RankTable>(std::shared_ptr<void>(), &table);
    if (same_net_pairs) ctx.same_net_pairs = std::shared_ptr<const PairSet>(std::shared_ptr<void>(), same_net_pairs);
    const Algorithm algo = variant == GbsVariant::full   ? Algorithm::gbs
                           : variant == GbsVariant::fast ? Algorithm::fgbs
                                                         : Algorithm::sgbs;
    auto session = SearchSession::start(ctx, algo);
    return run_session(session, oracle);
}

double exact_opt(const RankTable& table, std::size_t max_n) {
    const std::size_t n = table.size();
    if (n > max_n || n > 24) throw InputError("exact_opt: n = " + std::to_string(n) + " exceeds the limit of " +
                                              std::to_string(std::min<std::size_t>(max_n, 24)));
    using Mask = std::uint32_t;
    std::unordered_map<Mask, double> memo;

    auto members = [&](Mask s) {
        VersionSpace v;
        for (ItemId i = 0; i < n; ++i)
            if (s & (Mask{1} << i)) v.push_back(i);
        return v;
    };
    auto positive_mass = [&](Mask s) {
        double m = 0.0;
        for (ItemId i = 0; i < n; ++i)
            if (s & (Mask{1} << i)) m += table.mass(i);
        return m;
    };

    auto solve = [&](auto&& self, Mask s) -> double {
        if (auto it = memo.find(s); it != memo.end()) return it->second;
        const auto v = members(s);
        double best = 0.0;
        if (!is_resolved(table, v)) {
            best = std::numeric_limits<double>::infinity();
            const double total = positive_mass(s);
            for (ItemId x = 0; x < n; ++x)
                for (ItemId y = 0; y < n; ++y) {
                    Mask plus = 0;
                    for (ItemId z : v)
                        if (table.answer(z, x, y) == Answer::plus) plus |= Mask{1} << z;
                    const Mask minus = s & ~plus;
                    const double mp = positive_mass(plus);
                    const double mm = positive_mass(minus);
                    if (!(mp > 0.0 && mm > 0.0)) continue;
                    best = std::min(best, 1.0 + (mp / total) * self(self, plus) + (mm / total) * self(self, minus));
                }
        }
        memo.emplace(s, best);
        return best;
    };
    const Mask all = n == 32 ? ~Mask{0} : (Mask{1} << n) - 1;
    return solve(solve, all);
}

}  // namespace cmpsearch
