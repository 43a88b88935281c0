#pragma once

#include "cmpsearch/dataset.hpp"
#include "cmpsearch/types.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace cmpsearch {

// For every item z: the other items grouped into classes of equal distance
// from z, in strictly increasing distance order, with cumulative prior mass
// per class prefix and an O(1) rank index. After construction nothing
// downstream needs the metric.
class RankTable {
public:
    RankTable() = default;

    // Sorts every row by (distance, id). Rows are built in parallel.
    static RankTable build(const Dataset& data, const Metric& metric, const Prior& prior);

    // classes[z] lists z's equivalence classes in order; each must partition
    // 0..n-1 and the first class must contain z.
    static RankTable from_classes(const std::vector<std::vector<std::vector<ItemId>>>& classes,
                                  std::vector<double> masses);

    std::size_t size() const { return n_; }
    const std::vector<double>& masses() const { return mass_; }
    double mass(ItemId id) const { return mass_[id]; }

    ClassIndex rank_of(ItemId z, ItemId x) const { return rank_[static_cast<std::size_t>(z) * n_ + x]; }
    std::size_t class_count(ItemId z) const { return class_end_[z].size(); }
    std::span<const ItemId> class_members(ItemId z, ClassIndex c) const;
    // Items in z's classes 1..c, in sorted order.
    std::span<const ItemId> prefix_members(ItemId z, ClassIndex c) const;

    // Global prior mass of z's classes 1..c (0 for c = 0).
    double cum_mass(ItemId z, ClassIndex c) const { return c == 0 ? 0.0 : cum_[z][c - 1]; }

    // Smallest c with cum_mass(z, c) >= threshold, by binary search; adds the
    // probes to `lookups` when given. Returns class_count(z) when no prefix
    // reaches the threshold.
    ClassIndex smallest_prefix_reaching(ItemId z, double threshold, std::uint64_t* lookups = nullptr) const;

    // Comparison oracle of z: plus iff x is strictly closer to z than y.
    Answer answer(ItemId z, ItemId x, ItemId y) const {
        return rank_of(z, x) < rank_of(z, y) ? Answer::plus : Answer::minus;
    }
    // Both orders answer minus exactly when d(x,z) = d(y,z).
    bool is_tie(ItemId z, ItemId x, ItemId y) const {
        return answer(z, x, y) == Answer::minus && answer(z, y, x) == Answer::minus;
    }
    // Zero distance: no comparison oracle can separate the two.
    bool indistinguishable(ItemId a, ItemId b) const { return rank_of(a, b) == 1; }

    bool operator==(const RankTable&) const = default;

private:
    void finalize_masses();

    std::size_t n_ = 0;
    std::vector<double> mass_;
    std::vector<ClassIndex> rank_;                     // n*n, row z
    std::vector<ItemId> order_;                        // n*n, row z sorted by distance
    std::vector<std::vector<std::uint32_t>> class_end_;  // per z: exclusive end offset of each class
    std::vector<std::vector<double>> cum_;             // per z: cumulative mass at each class end
};

namespace serial {
// Counts distinct distance values below d(z, x) for every pair. Independent
// of the sorting path in RankTable::build; used as its test reference.
RankTable build_rank_table(const Dataset& data, const Metric& metric, const Prior& prior);
}  // namespace serial

// Versioned container holding class memberships and prior masses, never
// distances.
nlohmann::json to_json(const RankTable& table);
RankTable rank_table_from_json(const nlohmann::json& j);

}  // namespace cmpsearch
