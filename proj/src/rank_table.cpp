#include "cmpsearch/rank_table.hpp"

#include <algorithm>

namespace cmpsearch {

std::span<const ItemId> RankTable::class_members(ItemId z, ClassIndex c) const {
    const auto& ends = class_end_[z];
    const std::uint32_t begin = c == 1 ? 0 : ends[c - 2];
    return {order_.data() + static_cast<std::size_t>(z) * n_ + begin, ends[c - 1] - begin};
}

std::span<const ItemId> RankTable::prefix_members(ItemId z, ClassIndex c) const {
    return {order_.data() + static_cast<std::size_t>(z) * n_, c == 0 ? 0u : class_end_[z][c - 1]};
}

ClassIndex RankTable::smallest_prefix_reaching(ItemId z, double threshold, std::uint64_t* lookups) const {
    const auto& cum = cum_[z];
    std::size_t lo = 0;
    std::size_t hi = cum.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (lookups) ++*lookups;
        if (cum[mid] >= threshold)
            hi = mid;
        else
            lo = mid + 1;
    }
    return static_cast<ClassIndex>(std::min(lo + 1, cum.size()));
}

void RankTable::finalize_masses() {
    cum_.assign(n_, {});
    for (ItemId z = 0; z < n_; ++z) {
        const ItemId* row = order_.data() + static_cast<std::size_t>(z) * n_;
        double acc = 0.0;
        std::size_t k = 0;
        for (std::uint32_t end : class_end_[z]) {
            for (; k < end; ++k) acc += mass_[row[k]];
            cum_[z].push_back(acc);
        }
    }
}

RankTable RankTable::build(const Dataset& data, const Metric& metric, const Prior& prior) {
    if (prior.size() != data.size()) throw InputError("prior size does not match dataset size");
    RankTable t;
    t.n_ = data.size();
    t.mass_ = prior.masses();
    t.rank_.assign(t.n_ * t.n_, 0);
    t.order_.assign(t.n_ * t.n_, 0);
    t.class_end_.assign(t.n_, {});
    const std::size_t n = t.n_;
#pragma omp parallel
    {
        std::vector<std::pair<double, ItemId>> row(n);
#pragma omp for schedule(dynamic, 16)
        for (std::size_t zi = 0; zi < n; ++zi) {
            const auto z = static_cast<ItemId>(zi);
            for (ItemId x = 0; x < n; ++x) row[x] = {metric.distance(data.point(z), data.point(x)), x};
            std::sort(row.begin(), row.end());
            auto& ends = t.class_end_[z];
            ClassIndex cls = 0;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == 0 || row[k].first != row[k - 1].first) {
                    if (k > 0) ends.push_back(static_cast<std::uint32_t>(k));
                    ++cls;
                }
                t.order_[zi * n + k] = row[k].second;
                t.rank_[zi * n + row[k].second] = cls;
            }
            ends.push_back(static_cast<std::uint32_t>(n));
        }
    }
    t.finalize_masses();
    return t;
}

RankTable RankTable::from_classes(const std::vector<std::vector<std::vector<ItemId>>>& classes,
                                  std::vector<double> masses) {
    RankTable t;
    t.n_ = classes.size();
    if (masses.size() != t.n_) throw InputError("rank table: mass vector size does not match item count");
    t.mass_ = std::move(masses);
    t.rank_.assign(t.n_ * t.n_, 0);
    t.order_.reserve(t.n_ * t.n_);
    t.class_end_.assign(t.n_, {});
    for (ItemId z = 0; z < t.n_; ++z) {
        std::uint32_t count = 0;
        ClassIndex cls = 0;
        for (const auto& group : classes[z]) {
            if (group.empty()) throw InputError("rank table: empty class in row " + std::to_string(z));
            ++cls;
            for (ItemId x : group) {
                if (x >= t.n_ || t.rank_[static_cast<std::size_t>(z) * t.n_ + x] != 0)
                    throw InputError("rank table: row " + std::to_string(z) + " is not a partition");
                t.rank_[static_cast<std::size_t>(z) * t.n_ + x] = cls;
                t.order_.push_back(x);
            }
            count += static_cast<std::uint32_t>(group.size());
            t.class_end_[z].push_back(count);
        }
        if (count != t.n_) throw InputError("rank table: row " + std::to_string(z) + " does not cover all items");
        if (t.rank_of(z, z) != 1) throw InputError("rank table: item " + std::to_string(z) + " is not in its own first class");
    }
    t.finalize_masses();
    return t;
}

namespace serial {

RankTable build_rank_table(const Dataset& data, const Metric& metric, const Prior& prior) {
    const std::size_t n = data.size();
    std::vector<std::vector<std::vector<ItemId>>> classes(n);
    std::vector<double> d(n);
    std::vector<ClassIndex> rank(n);
    for (ItemId z = 0; z < n; ++z) {
        for (ItemId x = 0; x < n; ++x) d[x] = metric.distance(data.point(z), data.point(x));
        // rank = 1 + number of distinct distance values strictly below d(z, x)
        std::vector<double> distinct(d);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        const auto max_rank = static_cast<ClassIndex>(distinct.size());
        for (ItemId x = 0; x < n; ++x)
            rank[x] = static_cast<ClassIndex>(std::lower_bound(distinct.begin(), distinct.end(), d[x]) - distinct.begin()) + 1;
        classes[z].assign(max_rank, {});
        for (ItemId x = 0; x < n; ++x) classes[z][rank[x] - 1].push_back(x);
    }
    return RankTable::from_classes(classes, prior.masses());
}

}  // namespace serial

nlohmann::json to_json(const RankTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (ItemId z = 0; z < table.size(); ++z) {
        nlohmann::json row = nlohmann::json::array();
        for (ClassIndex c = 1; c <= table.class_count(z); ++c) {
            auto members = table.class_members(z, c);
            row.push_back(std::vector<ItemId>(members.begin(), members.end()));
        }
        rows.push_back(std::move(row));
    }
    return {{"format", "cmpsearch.rank_table"},
            {"version", 1},
            {"n", table.size()},
            {"mass", table.masses()},
            {"classes", std::move(rows)}};
}

RankTable rank_table_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "cmpsearch.rank_table") throw InputError("not a rank table file");
    if (j.value("version", 0) != 1) throw InputError("unsupported rank table version");
    auto classes = j.at("classes").get<std::vector<std::vector<std::vector<ItemId>>>>();
    if (classes.size() != j.at("n").get<std::size_t>()) throw InputError("rank table: n does not match rows");
    return RankTable::from_classes(classes, j.at("mass").get<std::vector<double>>());
}

}  // namespace cmpsearch
