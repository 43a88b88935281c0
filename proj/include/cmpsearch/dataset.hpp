#pragma once

#include "cmpsearch/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cmpsearch {

enum class MetricKind { euclidean, manhattan };

struct Metric {
    MetricKind kind = MetricKind::euclidean;

    double distance(std::span<const double> a, std::span<const double> b) const;

    static Metric parse(const std::string& name);
    std::string name() const;
};

// Items are the rows of a dense feature matrix. Ids are the row indices.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string name, std::size_t dim, std::vector<double> features,
            std::vector<std::string> columns = {});

    const std::string& name() const { return name_; }
    std::size_t size() const { return dim_ == 0 ? 0 : features_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& columns() const { return columns_; }

    std::span<const double> point(ItemId id) const {
        return {features_.data() + static_cast<std::size_t>(id) * dim_, dim_};
    }
    const std::vector<double>& features() const { return features_; }

    // Points on the real line, one item per value.
    static Dataset from_line(std::string name, const std::vector<double>& positions);

private:
    std::string name_;
    std::size_t dim_ = 0;
    std::vector<double> features_;
    std::vector<std::string> columns_;
};

struct CsvOptions {
    // Columns forced to be treated as categorical (one-hot expanded) even when
    // their first cell parses as a number.
    std::vector<std::string> categorical;
    std::vector<std::string> ignore;
};

// Header row required. An optional `id` column must be a permutation of
// 0..n-1; rows are reordered by it. A column whose first cell is not numeric
// is categorical and gets one binary column per distinct value, in order of
// first appearance. Errors carry 1-based row/column positions.
Dataset parse_csv(std::istream& in, const std::string& name, const CsvOptions& options = {});
Dataset load_csv(const std::string& path, const CsvOptions& options = {});
void write_csv(const Dataset& data, std::ostream& out);

// Uniform samples from the l1 ball of the given radius.
Dataset gen_l1_ball(std::size_t n, std::size_t dim, double radius, std::uint64_t seed);

class Prior {
public:
    Prior() = default;
    explicit Prior(std::vector<double> masses);  // normalizes; throws on negatives

    std::size_t size() const { return mass_.size(); }
    double operator[](ItemId id) const { return mass_[id]; }
    const std::vector<double>& masses() const { return mass_; }
    bool in_support(ItemId id) const { return mass_[id] > 0.0; }
    std::vector<ItemId> support() const;

    static Prior uniform(std::size_t n);
    // mass(rank) proportional to rank^-alpha. The item holding rank r is
    // perm[r-1] for a seeded permutation, or item r-1 when identity is set.
    static Prior powerlaw(std::size_t n, double alpha, std::uint64_t seed, bool identity = false);

private:
    std::vector<double> mass_;
};

// "uniform", "powerlaw:ALPHA" or "powerlaw:ALPHA:identity".
struct PriorSpec {
    enum class Kind { uniform, powerlaw } kind = Kind::powerlaw;
    double alpha = 0.4;
    bool identity = false;

    static PriorSpec parse(const std::string& text);
    std::string str() const;
    Prior make(std::size_t n, std::uint64_t seed) const;
};

double entropy_bits(const Prior& prior);
double hmax_bits(const Prior& prior);

// Exact sup over x in supp(mu) and R >= 0 of mu(B_x(2R)) / mu(B_x(R)).
// The ratio is a step function of R whose steps sit at R = d and R = d/2 for
// the distances d out of x, so enumerating those radii is exhaustive.
double doubling_constant(const Dataset& data, const Metric& metric, const Prior& prior);

namespace serial {
// Direct loop over (x, breakpoint R) with an O(n) membership scan per radius.
// Cubic; kept as the reference for tests and the kernel benchmark.
double doubling_constant(const Dataset& data, const Metric& metric, const Prior& prior);
}  // namespace serial

struct DatasetStats {
    std::size_t n = 0;
    std::size_t dim = 0;
    double entropy_bits = 0.0;
    double hmax_bits = 0.0;
    double doubling_constant = 1.0;
};

DatasetStats compute_stats(const Dataset& data, const Metric& metric, const Prior& prior);
nlohmann::json to_json(const DatasetStats& stats);

}  // namespace cmpsearch
