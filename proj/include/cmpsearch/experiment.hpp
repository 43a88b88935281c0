#pragma once

#include "cmpsearch/dataset.hpp"
#include "cmpsearch/rank_table.hpp"
#include "cmpsearch/search.hpp"
#include "cmpsearch/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cmpsearch {

// Everything a search needs, built once per dataset and shared read-only.
struct Workspace {
    Dataset data;
    Metric metric;
    Prior prior;
    PriorSpec prior_spec;
    std::uint64_t seed = 0;
    std::shared_ptr<const RankTable> table;
    SearchContext context;
    DatasetStats stats;

    static std::shared_ptr<const Workspace> create(Dataset data, const PriorSpec& prior, std::uint64_t seed,
                                                   Metric metric = {}, GreedyOrder order = GreedyOrder::ascending_id);
    static std::shared_ptr<const Workspace> create(Dataset data, Prior prior, Metric metric = {},
                                                   GreedyOrder order = GreedyOrder::ascending_id);
};

struct ExperimentConfig {
    std::string dataset_path;  // CSV; ignored when a workspace is supplied directly
    CsvOptions csv;
    PriorSpec prior;
    Metric metric;
    std::vector<Algorithm> algorithms = {Algorithm::ranknet, Algorithm::fgbs, Algorithm::sgbs};
    std::optional<double> epsilon;  // required for the noisy algorithm
    double delta = 0.1;
    RepetitionForm form = RepetitionForm::half_gap;
    std::uint64_t trials = 0;  // noisy only
    std::uint64_t seed = 0;
    GreedyOrder order = GreedyOrder::ascending_id;
    bool per_target = true;
    std::size_t max_full_gbs_n = 200;

    void validate(std::size_t n) const;
};

struct TargetOutcome {
    ItemId target = 0;
    ItemId result = 0;
    std::uint64_t queries = 0;
    CostCounters cost;
    bool correct = false;
};

// Runs one noiseless algorithm for every target in `targets`. Sessions are
// forked at each query and the targets split by their true answer, which
// visits the same paths as separate runs at a fraction of the work.
// Outcomes come back in target order.
std::vector<TargetOutcome> evaluate_all_targets(const SearchContext& ctx, Algorithm algorithm,
                                                const std::vector<ItemId>& targets);

// Target found, or an item at distance zero from it.
bool found(const RankTable& table, ItemId target, ItemId result);

struct AlgorithmReport {
    Algorithm algorithm = Algorithm::ranknet;
    bool monte_carlo = false;
    double expected_queries = 0.0;  // mu-weighted, or the trial mean
    double stderr_queries = 0.0;    // trials only
    double expected_operations = 0.0;
    double expected_table_lookups = 0.0;
    double expected_mass_additions = 0.0;
    double expected_pair_evaluations = 0.0;
    double success_rate = 0.0;  // mu-weighted, or the trial fraction
    std::uint64_t max_queries = 0;
    std::uint64_t trials = 0;
    std::uint64_t repetitions = 0;  // noisy: k at level 1 of the root net
    std::vector<TargetOutcome> per_target;
};

struct Report {
    nlohmann::json config;
    DatasetStats stats;
    std::size_t tree_nodes = 0;
    std::size_t tree_depth = 0;
    std::vector<AlgorithmReport> algorithms;

    const AlgorithmReport& at(Algorithm a) const;
};

constexpr int kReportVersion = 1;

Report run_bench(const ExperimentConfig& config);
Report run_bench(const ExperimentConfig& config, const Workspace& ws);

nlohmann::json to_json(const Report& report);

}  // namespace cmpsearch
