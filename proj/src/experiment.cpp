#include "cmpsearch/experiment.hpp"

#include "cmpsearch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cmpsearch {

std::shared_ptr<const Workspace> Workspace::create(Dataset data, const PriorSpec& prior, std::uint64_t seed,
                                                   Metric metric, GreedyOrder order) {
    Prior p = prior.make(data.size(), seed);
    auto ws = create(std::move(data), std::move(p), metric, order);
    auto out = std::make_shared<Workspace>(*ws);
    out->prior_spec = prior;
    out->seed = seed;
    return out;
}

std::shared_ptr<const Workspace> Workspace::create(Dataset data, Prior prior, Metric metric, GreedyOrder order) {
    if (prior.size() != data.size())
        throw InputError("prior has " + std::to_string(prior.size()) + " masses for " + std::to_string(data.size()) +
                         " items");
    auto ws = std::make_shared<Workspace>();
    ws->table = std::make_shared<const RankTable>(RankTable::build(data, metric, prior));
    ws->context = SearchContext::prepare(ws->table, order);
    ws->stats = compute_stats(data, metric, prior);
    ws->data = std::move(data);
    ws->metric = metric;
    ws->prior = std::move(prior);
    return ws;
}

void ExperimentConfig::validate(std::size_t n) const {
    if (algorithms.empty()) throw InputError("no algorithms selected");
    for (Algorithm a : algorithms) {
        if (a == Algorithm::gbs && n > max_full_gbs_n)
            throw InputError("full gbs is limited to n <= " + std::to_string(max_full_gbs_n) + " (dataset has n = " +
                             std::to_string(n) + "); use fgbs or sgbs");
        if (is_noisy(a)) {
            if (!epsilon) throw InputError("the noisy algorithm needs a noise rate (--epsilon)");
            if (trials < 1) throw InputError("the noisy algorithm needs at least one trial (--trials)");
            (void)repetition_factor(1, 1, *epsilon, delta, form);
        }
    }
}

bool found(const RankTable& table, ItemId target, ItemId result) {
    return result == target || table.indistinguishable(target, result);
}

std::vector<TargetOutcome> evaluate_all_targets(const SearchContext& ctx, Algorithm algorithm,
                                                const std::vector<ItemId>& targets) {
    const RankTable& table = *ctx.table;
    std::vector<TargetOutcome> out;
    out.reserve(targets.size());

    struct Branch {
        SearchSession session;
        std::vector<ItemId> targets;
    };
    std::vector<Branch> stack;
    stack.push_back({SearchSession::start(ctx, algorithm), targets});
    while (!stack.empty()) {
        Branch b = std::move(stack.back());
        stack.pop_back();
        if (b.session.finished()) {
            const ItemId r = b.session.result();
            for (ItemId t : b.targets)
                out.push_back({t, r, b.session.log().query_count(), b.session.cost(), found(table, t, r)});
            continue;
        }
        const Query q = *b.session.next();
        std::vector<ItemId> plus, minus;
        for (ItemId t : b.targets) (table.answer(t, q.first, q.second) == Answer::plus ? plus : minus).push_back(t);
        if (!minus.empty()) {
            if (plus.empty()) {
                b.session.answer(Answer::minus);
                stack.push_back({std::move(b.session), std::move(minus)});
                continue;
            }
            SearchSession fork = b.session;
            fork.answer(Answer::minus);
            stack.push_back({std::move(fork), std::move(minus)});
        }
        if (!plus.empty()) {
            b.session.answer(Answer::plus);
            stack.push_back({std::move(b.session), std::move(plus)});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.target < b.target; });
    return out;
}

namespace {

AlgorithmReport exact_report(const Workspace& ws, Algorithm a, bool per_target) {
    AlgorithmReport r;
    r.algorithm = a;
    auto outcomes = evaluate_all_targets(ws.context, a, ws.prior.support());
    for (const auto& o : outcomes) {
        const double w = ws.prior[o.target];
        r.expected_queries += w * static_cast<double>(o.queries);
        r.expected_operations += w * static_cast<double>(o.cost.operations());
        r.expected_table_lookups += w * static_cast<double>(o.cost.table_lookups);
        r.expected_mass_additions += w * static_cast<double>(o.cost.mass_additions);
        r.expected_pair_evaluations += w * static_cast<double>(o.cost.pair_evaluations);
        if (o.correct) r.success_rate += w;
        r.max_queries = std::max(r.max_queries, o.queries);
    }
    if (per_target) r.per_target = std::move(outcomes);
    return r;
}

struct Trial {
    ItemId target = 0;
    ItemId result = 0;
    std::uint64_t queries = 0;
    CostCounters cost;
    bool correct = false;
};

AlgorithmReport noisy_report(const Workspace& ws, const ExperimentConfig& cfg, std::size_t algo_index) {
    AlgorithmReport r;
    r.algorithm = Algorithm::noisy;
    r.monte_carlo = true;
    r.trials = cfg.trials;
    const SessionParams params{*cfg.epsilon, cfg.delta, cfg.form};
    r.repetitions = repetition_factor(1, ws.context.tree->root().net.members.size(), params.epsilon, params.delta,
                                      params.form);

    const auto& masses = ws.prior.masses();
    std::vector<Trial> trials(cfg.trials);
#pragma omp parallel for schedule(dynamic)
    for (std::uint64_t i = 0; i < cfg.trials; ++i) {
        // One stream per trial, so results do not depend on the thread count.
        std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(algo_index), i};
        std::mt19937_64 rng(seq);
        std::discrete_distribution<ItemId> pick(masses.begin(), masses.end());
        const ItemId t = pick(rng);
        TableOracle exact(*ws.table, t);
        NoisyOracle noisy(exact, params.epsilon, rng());
        auto session = SearchSession::start(ws.context, Algorithm::noisy, params);
        const ItemId res = run_session(session, noisy);
        trials[i] = {t, res, session.log().query_count(), session.cost(), found(*ws.table, t, res)};
    }

    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t ok = 0;
    for (const auto& t : trials) {
        const double q = static_cast<double>(t.queries);
        sum += q;
        sum_sq += q * q;
        r.expected_operations += static_cast<double>(t.cost.operations());
        r.expected_table_lookups += static_cast<double>(t.cost.table_lookups);
        r.expected_mass_additions += static_cast<double>(t.cost.mass_additions);
        r.expected_pair_evaluations += static_cast<double>(t.cost.pair_evaluations);
        r.max_queries = std::max(r.max_queries, t.queries);
        ok += t.correct;
        if (cfg.per_target) r.per_target.push_back({t.target, t.result, t.queries, t.cost, t.correct});
    }
    const double m = static_cast<double>(cfg.trials);
    r.expected_queries = sum / m;
    r.expected_operations /= m;
    r.expected_table_lookups /= m;
    r.expected_mass_additions /= m;
    r.expected_pair_evaluations /= m;
    r.success_rate = static_cast<double>(ok) / m;
    if (cfg.trials > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / m) / (m - 1.0));
        r.stderr_queries = std::sqrt(var / m);
    }
    return r;
}

std::string order_name(GreedyOrder o) { return o == GreedyOrder::ascending_id ? "ascending_id" : "descending_id"; }

}  // namespace

const AlgorithmReport& Report::at(Algorithm a) const {
    for (const auto& r : algorithms)
        if (r.algorithm == a) return r;
    throw InputError("report has no entry for " + to_string(a));
}

Report run_bench(const ExperimentConfig& config) {
    if (config.dataset_path.empty()) throw InputError("no dataset given");
    auto data = load_csv(config.dataset_path, config.csv);
    auto ws = Workspace::create(std::move(data), config.prior, config.seed, config.metric, config.order);
    return run_bench(config, *ws);
}

Report run_bench(const ExperimentConfig& config, const Workspace& ws) {
    config.validate(ws.data.size());
    Report rep;
    rep.stats = ws.stats;
    rep.tree_nodes = ws.context.tree->size();
    rep.tree_depth = ws.context.tree->depth();

    nlohmann::json algos = nlohmann::json::array();
    for (Algorithm a : config.algorithms) algos.push_back(to_string(a));
    rep.config = {{"dataset", ws.data.name()},
                  {"n", ws.data.size()},
                  {"dim", ws.data.dim()},
                  {"metric", ws.metric.name()},
                  {"prior", config.prior.str()},
                  {"seed", config.seed},
                  {"order", order_name(config.order)},
                  {"algorithms", algos}};
    if (config.epsilon) {
        rep.config["epsilon"] = *config.epsilon;
        rep.config["delta"] = config.delta;
        rep.config["trials"] = config.trials;
        rep.config["repetition_form"] = config.form == RepetitionForm::half_gap ? "half_gap" : "unit_gap";
    }

    for (std::size_t i = 0; i < config.algorithms.size(); ++i) {
        const Algorithm a = config.algorithms[i];
        rep.algorithms.push_back(is_noisy(a) ? noisy_report(ws, config, i) : exact_report(ws, a, config.per_target));
    }
    return rep;
}

nlohmann::json to_json(const Report& report) {
    nlohmann::json algos = nlohmann::json::array();
    for (const auto& r : report.algorithms) {
        nlohmann::json j = {{"algorithm", to_string(r.algorithm)},
                            {"evaluation", r.monte_carlo ? "monte_carlo" : "exact"},
                            {"expected_queries", r.expected_queries},
                            {"max_queries", r.max_queries},
                            {"success_rate", r.success_rate},
                            {"expected_cost",
                             {{"operations", r.expected_operations},
                              {"table_lookups", r.expected_table_lookups},
                              {"mass_additions", r.expected_mass_additions},
                              {"pair_evaluations", r.expected_pair_evaluations}}}};
        if (r.monte_carlo) {
            j["stderr_queries"] = r.stderr_queries;
            j["trials"] = r.trials;
            j["root_repetitions"] = r.repetitions;
        }
        if (!r.per_target.empty()) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& o : r.per_target)
                rows.push_back({{"target", o.target},
                                {"result", o.result},
                                {"queries", o.queries},
                                {"operations", o.cost.operations()},
                                {"correct", o.correct}});
            j[r.monte_carlo ? "per_trial" : "per_target"] = std::move(rows);
        }
        algos.push_back(std::move(j));
    }
    return {{"format", "cmpsearch.report"},
            {"version", kReportVersion},
            {"config", report.config},
            {"stats", to_json(report.stats)},
            {"tree", {{"nodes", report.tree_nodes}, {"depth", report.tree_depth}}},
            {"algorithms", std::move(algos)}};
}

}  // namespace cmpsearch
