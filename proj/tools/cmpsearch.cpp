// Command-line front end: dataset generation, statistics, precomputation,
// single searches, benchmarks and the HTTP session service.

#include "cmpsearch/dataset.hpp"
#include "cmpsearch/experiment.hpp"
#include "cmpsearch/oracle.hpp"
#include "cmpsearch/rank_table.hpp"
#include "cmpsearch/ranknet.hpp"
#include "cmpsearch/search.hpp"
#include "cmpsearch/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace cmpsearch;

namespace {

struct DataFlags {
    std::string path;
    std::string prior = "powerlaw:0.4";
    std::string metric = "euclidean";
    std::uint64_t seed = 0;
    std::vector<std::string> categorical;
    std::vector<std::string> ignore;

    void add(CLI::App& app, bool positional = true) {
        if (positional) app.add_option("dataset", path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
        app.add_option("--prior", prior, "uniform | powerlaw:ALPHA[:identity]")->capture_default_str();
        app.add_option("--metric", metric, "euclidean | manhattan")->capture_default_str();
        app.add_option("--seed", seed, "seed for the prior permutation and any sampling")->capture_default_str();
        app.add_option("--categorical", categorical, "columns to one-hot encode");
        app.add_option("--ignore", ignore, "columns to drop");
    }
    CsvOptions csv() const { return {categorical, ignore}; }
    Dataset load() const { return load_csv(path, csv()); }
    std::shared_ptr<const Workspace> workspace(GreedyOrder order = GreedyOrder::ascending_id) const {
        return Workspace::create(load(), PriorSpec::parse(prior), seed, Metric::parse(metric), order);
    }
};

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw InputError("cannot write " + out);
    f << text;
}

GreedyOrder parse_order(const std::string& s) {
    if (s == "ascending") return GreedyOrder::ascending_id;
    if (s == "descending") return GreedyOrder::descending_id;
    throw InputError("order must be ascending or descending");
}

RepetitionForm parse_form(const std::string& s) {
    if (s == "half_gap") return RepetitionForm::half_gap;
    if (s == "unit_gap") return RepetitionForm::unit_gap;
    throw InputError("repetition form must be half_gap or unit_gap");
}

std::vector<Algorithm> parse_algorithms(const std::string& list) {
    std::vector<Algorithm> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(parse_algorithm(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Comparison-based search over a dataset"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_kind = "l1-ball", gen_out;
    std::size_t gen_n = 1000, gen_dim = 3;
    double gen_radius = 1.0;
    std::uint64_t gen_seed = 0;
    gen->add_option("--kind", gen_kind, "l1-ball")->capture_default_str();
    gen->add_option("--n", gen_n)->capture_default_str();
    gen->add_option("--dim", gen_dim)->capture_default_str();
    gen->add_option("--radius", gen_radius)->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("-o,--out", gen_out, "output CSV (stdout if omitted)");

    // stats
    auto* stats = app.add_subcommand("stats", "entropy, H_max and doubling constant");
    DataFlags stats_data;
    std::string stats_out;
    stats_data.add(*stats);
    stats->add_option("-o,--out", stats_out);

    // table
    auto* table = app.add_subcommand("table", "precompute the rank table");
    DataFlags table_data;
    std::string table_out;
    table_data.add(*table);
    table->add_option("-o,--out", table_out);

    // tree
    auto* tree = app.add_subcommand("tree", "precompute the rank-net tree");
    DataFlags tree_data;
    std::string tree_out, tree_order = "ascending";
    tree_data.add(*tree);
    tree->add_option("--order", tree_order, "greedy scan order: ascending | descending")->capture_default_str();
    tree->add_option("-o,--out", tree_out);

    // search
    auto* search = app.add_subcommand("search", "search for one target with a simulated oracle");
    DataFlags search_data;
    ItemId search_target = 0;
    std::string search_algo = "tree", search_transcript, search_form = "half_gap";
    std::optional<double> search_eps;
    double search_delta = 0.1;
    search_data.add(*search);
    search->add_option("--target", search_target)->required();
    search->add_option("--algo", search_algo, "ranknet | tree | noisy | gbs | fgbs | sgbs")->capture_default_str();
    search->add_option("--epsilon", search_eps, "oracle noise rate (flips each answer with this probability)");
    search->add_option("--delta", search_delta, "noisy search failure budget")->capture_default_str();
    search->add_option("--form", search_form, "repetition form: half_gap | unit_gap")->capture_default_str();
    search->add_option("--transcript", search_transcript, "write the JSON-lines transcript here");

    // bench
    auto* bench = app.add_subcommand("bench", "expected query and computational cost");
    DataFlags bench_data;
    std::string bench_algos = "ranknet,fgbs,sgbs", bench_out, bench_order = "ascending", bench_form = "half_gap";
    std::optional<double> bench_eps;
    double bench_delta = 0.1;
    std::uint64_t bench_trials = 0;
    bool bench_summary = false;
    bench_data.add(*bench);
    bench->add_option("--algos", bench_algos, "comma-separated algorithms")->capture_default_str();
    bench->add_option("--epsilon", bench_eps, "noise rate for the noisy algorithm");
    bench->add_option("--delta", bench_delta)->capture_default_str();
    bench->add_option("--trials", bench_trials, "Monte-Carlo trials for the noisy algorithm");
    bench->add_option("--form", bench_form, "repetition form: half_gap | unit_gap")->capture_default_str();
    bench->add_option("--order", bench_order)->capture_default_str();
    bench->add_flag("--summary", bench_summary, "omit per-target rows");
    bench->add_option("-o,--out", bench_out);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "HTTP session service");
    std::vector<std::string> serve_sets;
    DataFlags serve_data;
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    int serve_ttl = 3600;
    serve_cmd->add_option("--dataset", serve_sets, "NAME=PATH, repeatable")->required();
    serve_data.add(*serve_cmd, false);
    serve_cmd->add_option("--host", serve_host)->capture_default_str();
    serve_cmd->add_option("--port", serve_port)->capture_default_str();
    serve_cmd->add_option("--ttl", serve_ttl, "idle session lifetime in seconds")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            if (gen_kind != "l1-ball") throw InputError("unknown dataset kind '" + gen_kind + "'");
            std::ostringstream os;
            write_csv(gen_l1_ball(gen_n, gen_dim, gen_radius, gen_seed), os);
            emit(os.str(), gen_out);
        } else if (*stats) {
            const auto data = stats_data.load();
            const auto prior = PriorSpec::parse(stats_data.prior).make(data.size(), stats_data.seed);
            emit(to_json(compute_stats(data, Metric::parse(stats_data.metric), prior)).dump(2) + "\n", stats_out);
        } else if (*table) {
            const auto data = table_data.load();
            const auto prior = PriorSpec::parse(table_data.prior).make(data.size(), table_data.seed);
            emit(to_json(RankTable::build(data, Metric::parse(table_data.metric), prior)).dump() + "\n", table_out);
        } else if (*tree) {
            const auto ws = tree_data.workspace(parse_order(tree_order));
            emit(to_json(*ws->context.tree).dump() + "\n", tree_out);
        } else if (*search) {
            const auto ws = search_data.workspace();
            if (search_target >= ws->data.size())
                throw InputError("target " + std::to_string(search_target) + " is not an item id");
            const Algorithm algo = parse_algorithm(search_algo);
            SessionParams params{search_eps.value_or(0.0), search_delta, parse_form(search_form)};
            auto session = SearchSession::start(ws->context, algo, params);
            TableOracle exact(*ws->table, search_target);
            std::optional<NoisyOracle> noisy;
            if (search_eps && *search_eps > 0.0) noisy.emplace(exact, *search_eps, search_data.seed);
            Oracle& oracle = noisy ? static_cast<Oracle&>(*noisy) : exact;
            const ItemId result = run_session(session, oracle);
            const auto& c = session.cost();
            nlohmann::json out = {{"algorithm", to_string(algo)},
                                  {"target", search_target},
                                  {"result", result},
                                  {"found", found(*ws->table, search_target, result)},
                                  {"queries", session.log().query_count()},
                                  {"cost",
                                   {{"operations", c.operations()},
                                    {"table_lookups", c.table_lookups},
                                    {"mass_additions", c.mass_additions},
                                    {"pair_evaluations", c.pair_evaluations}}}};
            std::cout << out.dump(2) << "\n";
            if (!search_transcript.empty()) emit(session.transcript(), search_transcript);
        } else if (*bench) {
            ExperimentConfig cfg;
            cfg.dataset_path = bench_data.path;
            cfg.csv = bench_data.csv();
            cfg.prior = PriorSpec::parse(bench_data.prior);
            cfg.metric = Metric::parse(bench_data.metric);
            cfg.seed = bench_data.seed;
            cfg.algorithms = parse_algorithms(bench_algos);
            cfg.epsilon = bench_eps;
            cfg.delta = bench_delta;
            cfg.trials = bench_trials;
            cfg.form = parse_form(bench_form);
            cfg.order = parse_order(bench_order);
            cfg.per_target = !bench_summary;
            emit(to_json(run_bench(cfg)).dump(2) + "\n", bench_out);
        } else if (*serve_cmd) {
            SessionService::Options opts;
            opts.idle_timeout = std::chrono::seconds(serve_ttl);
            SessionService service(opts);
            for (const auto& spec : serve_sets) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos || eq == 0) throw InputError("--dataset expects NAME=PATH, got '" + spec + "'");
                auto data = load_csv(spec.substr(eq + 1), serve_data.csv());
                service.add_dataset(spec.substr(0, eq),
                                    Workspace::create(std::move(data), PriorSpec::parse(serve_data.prior),
                                                      serve_data.seed, Metric::parse(serve_data.metric)));
            }
            std::cerr << "listening on http://" << serve_host << ":" << serve_port << "\n";
            serve(service, serve_host, serve_port);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
