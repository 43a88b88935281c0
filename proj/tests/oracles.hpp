#pragma once

// Brute-force reimplementations that work straight from coordinates, with no
// rank table, plus the random instances they are checked on.
//
// Instance priors are integer weights summing to 1024, so every mass and
// every partial sum is a dyadic rational and exact in double in any order.

#include "cmpsearch/dataset.hpp"
#include "cmpsearch/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using cmpsearch::ItemId;

struct Instance {
    cmpsearch::Dataset data;
    cmpsearch::Prior prior;
    cmpsearch::Metric metric;
};

// Points on a small integer grid (ties and duplicates are common), a random
// nonempty support and integer weights summing to 1024.
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_n, std::size_t min_n = 1) {
    std::uniform_int_distribution<std::size_t> pick_n(min_n, max_n), pick_dim(1, 3);
    const std::size_t n = pick_n(rng), dim = pick_dim(rng);
    std::uniform_int_distribution<int> coord(0, 4);
    std::vector<double> f(n * dim);
    for (auto& v : f) v = coord(rng);

    std::vector<ItemId> support;
    std::bernoulli_distribution keep(0.8);
    for (ItemId i = 0; i < n; ++i)
        if (keep(rng)) support.push_back(i);
    if (support.empty()) support.push_back(static_cast<ItemId>(rng() % n));
    std::vector<double> w(n, 0.0);
    std::uniform_int_distribution<std::size_t> who(0, support.size() - 1);
    for (int unit = 0; unit < 1024; ++unit) w[support[who(rng)]] += 1.0;

    cmpsearch::Metric m;
    m.kind = std::bernoulli_distribution(0.5)(rng) ? cmpsearch::MetricKind::euclidean : cmpsearch::MetricKind::manhattan;
    return {cmpsearch::Dataset("random", dim, std::move(f)), cmpsearch::Prior(std::move(w)), m};
}

inline double dist(const Instance& in, ItemId a, ItemId b) {
    const auto p = in.data.point(a), q = in.data.point(b);
    double s = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double d = p[c] - q[c];
        s += in.metric.kind == cmpsearch::MetricKind::manhattan ? std::abs(d) : d * d;
    }
    return in.metric.kind == cmpsearch::MetricKind::manhattan ? s : std::sqrt(s);
}

// +1 iff x is strictly closer to z than y is.
inline int answer(const Instance& in, ItemId z, ItemId x, ItemId y) { return dist(in, x, z) < dist(in, y, z) ? 1 : -1; }

// 1-based index of x among the distinct distances seen from z.
inline std::uint32_t rank(const Instance& in, ItemId z, ItemId x) {
    std::set<double> ds;
    for (ItemId y = 0; y < in.data.size(); ++y) ds.insert(dist(in, z, y));
    return static_cast<std::uint32_t>(std::distance(ds.begin(), ds.find(dist(in, z, x))) + 1);
}

inline double ball_mass(const Instance& in, ItemId x, double r) {
    double m = 0.0;
    for (ItemId y = 0; y < in.data.size(); ++y)
        if (dist(in, x, y) <= r) m += in.prior[y];
    return m;
}

// Smallest distinct-distance class around y whose closed ball carries at
// least rho times the domain mass.
inline std::uint32_t radius_rank(const Instance& in, const std::vector<ItemId>& domain, ItemId y, double rho) {
    double dom = 0.0;
    for (ItemId e : domain) dom += in.prior[e];
    std::set<double> ds;
    for (ItemId z = 0; z < in.data.size(); ++z) ds.insert(dist(in, y, z));
    std::uint32_t k = 0;
    for (double r : ds) {
        ++k;
        if (ball_mass(in, y, r) >= rho * dom) return k;
    }
    return k;
}

inline double gbs_objective(const Instance& in, const std::vector<ItemId>& v, ItemId x, ItemId y) {
    double s = 0.0;
    for (ItemId z : v) s += in.prior[z] * answer(in, z, x, y);
    return std::abs(s);
}

// sup over R > 0 and x in the support of mu(B_x(2R)) / mu(B_x(R)). The ratio
// only changes where R or 2R crosses a distance, so those radii suffice.
inline double doubling_constant(const Instance& in) {
    double c = 1.0;
    for (ItemId x = 0; x < in.data.size(); ++x) {
        if (!(in.prior[x] > 0.0)) continue;
        for (ItemId y = 0; y < in.data.size(); ++y) {
            const double d = dist(in, x, y);
            for (double r : {d, d / 2}) c = std::max(c, ball_mass(in, x, 2 * r) / ball_mass(in, x, r));
        }
    }
    return c;
}

// Item that a noiseless search must return for target t: t itself or any
// item at distance zero from it.
inline bool acceptable(const Instance& in, ItemId t, ItemId r) { return dist(in, t, r) == 0.0; }

// Minimum expected number of queries over all decision trees, by plain
// recursion on the set of mu-positive hypotheses still consistent.
inline double opt(const Instance& in, std::vector<ItemId> v, std::map<std::vector<ItemId>, double>& memo) {
    v.erase(std::remove_if(v.begin(), v.end(), [&](ItemId z) { return !(in.prior[z] > 0.0); }), v.end());
    bool separable = false;
    for (ItemId a : v)
        for (ItemId b : v)
            if (dist(in, a, b) > 0.0) separable = true;
    if (!separable) return 0.0;
    if (auto it = memo.find(v); it != memo.end()) return it->second;
    double total = 0.0;
    for (ItemId z : v) total += in.prior[z];
    double best = 1e300;
    const auto n = static_cast<ItemId>(in.data.size());
    for (ItemId x = 0; x < n; ++x)
        for (ItemId y = 0; y < n; ++y) {
            std::vector<ItemId> plus, minus;
            double mp = 0.0, mm = 0.0;
            for (ItemId z : v) {
                if (answer(in, z, x, y) > 0) {
                    plus.push_back(z);
                    mp += in.prior[z];
                } else {
                    minus.push_back(z);
                    mm += in.prior[z];
                }
            }
            if (plus.empty() || minus.empty()) continue;
            best = std::min(best, 1.0 + mp / total * opt(in, plus, memo) + mm / total * opt(in, minus, memo));
        }
    memo[v] = best;
    return best;
}

}  // namespace oracle
