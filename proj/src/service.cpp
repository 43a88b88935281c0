#include "cmpsearch/service.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdio>
#include <vector>

namespace cmpsearch {

namespace {

HttpResponse json_response(int status, const nlohmann::json& j) { return {status, j.dump()}; }

HttpResponse error(int status, const std::string& message) {
    return json_response(status, {{"error", message}, {"status", status}});
}

// Top principal axes by power iteration with deflation on the covariance.
std::vector<std::vector<double>> principal_axes(const Dataset& data, std::size_t k) {
    const std::size_t n = data.size(), d = data.dim();
    std::vector<double> mean(d, 0.0);
    for (ItemId i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += data.point(i)[c] / static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (ItemId i = 0; i < n; ++i) {
        auto p = data.point(i);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += (p[a] - mean[a]) * (p[b] - mean[b]);
    }
    std::vector<std::vector<double>> axes;
    for (std::size_t r = 0; r < k; ++r) {
        std::vector<double> v(d);
        for (std::size_t c = 0; c < d; ++c) v[c] = 1.0 + static_cast<double>(c == r);
        double lambda = 0.0;
        for (int it = 0; it < 200; ++it) {
            std::vector<double> w(d, 0.0);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) w[a] += cov[a * d + b] * v[b];
            double norm = 0.0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) break;
            for (std::size_t c = 0; c < d; ++c) v[c] = w[c] / norm;
            lambda = norm;
        }
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= lambda * v[a] * v[b];
        axes.push_back(std::move(v));
    }
    return axes;
}

}  // namespace

nlohmann::json dataset_payload(const std::string& name, const Workspace& ws) {
    const Dataset& data = ws.data;
    std::vector<std::vector<double>> axes;
    if (data.dim() == 2)
        axes = {{1.0, 0.0}, {0.0, 1.0}};
    else if (data.dim() > 2)
        axes = principal_axes(data, 2);

    nlohmann::json items = nlohmann::json::array();
    for (ItemId i = 0; i < data.size(); ++i) {
        auto p = data.point(i);
        nlohmann::json item = {{"id", i}, {"features", std::vector<double>(p.begin(), p.end())}, {"mass", ws.prior[i]}};
        if (!axes.empty()) {
            nlohmann::json xy = nlohmann::json::array();
            for (const auto& axis : axes) {
                double s = 0.0;
                for (std::size_t c = 0; c < data.dim(); ++c) s += axis[c] * p[c];
                xy.push_back(s);
            }
            item["projection"] = std::move(xy);
        }
        items.push_back(std::move(item));
    }
    return {{"name", name},
            {"n", data.size()},
            {"dim", data.dim()},
            {"columns", data.columns()},
            {"metric", ws.metric.name()},
            {"stats", to_json(ws.stats)},
            {"tree_nodes", ws.context.tree->size()},
            {"items", std::move(items)}};
}

SessionService::SessionService() : SessionService(Options{}) {}

SessionService::SessionService(Options options) : options_(std::move(options)), id_rng_(options_.id_seed) {}

void SessionService::add_dataset(const std::string& name, std::shared_ptr<const Workspace> ws) {
    datasets_[name] = std::move(ws);
    nlohmann::json all = nlohmann::json::array();
    for (const auto& [n, w] : datasets_) all.push_back(dataset_payload(n, *w));
    datasets_body_ = nlohmann::json{{"datasets", std::move(all)}}.dump();
}

HttpResponse SessionService::list_datasets() const { return {200, datasets_body_}; }

std::string SessionService::new_id() {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
    return buf;
}

HttpResponse SessionService::create_session(const std::string& body) {
    nlohmann::json req;
    try {
        req = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        return error(400, std::string("malformed JSON: ") + e.what());
    }
    if (!req.is_object() || !req.contains("dataset") || !req["dataset"].is_string())
        return error(400, "body needs a string field 'dataset'");
    const std::string name = req["dataset"];
    auto ds = datasets_.find(name);
    if (ds == datasets_.end()) return error(404, "unknown dataset '" + name + "'");

    Algorithm algo = Algorithm::tree;
    SessionParams params;
    try {
        if (req.contains("algorithm")) algo = parse_algorithm(req.at("algorithm").get<std::string>());
        if (req.contains("params")) {
            const auto& p = req.at("params");
            if (!p.is_object()) return error(400, "'params' must be an object");
            params.epsilon = p.value("epsilon", params.epsilon);
            params.delta = p.value("delta", params.delta);
        }
        if (algo == Algorithm::gbs && ds->second->data.size() > ExperimentConfig{}.max_full_gbs_n)
            return error(400, "full gbs is not offered for datasets this large");
    } catch (const nlohmann::json::exception& e) {
        return error(400, std::string("bad field: ") + e.what());
    } catch (const InputError& e) {
        return error(400, e.what());
    }

    std::shared_ptr<Entry> entry;
    try {
        entry = std::make_shared<Entry>(SearchSession::start(ds->second->context, algo, params));
    } catch (const InputError& e) {
        return error(400, e.what());
    }
    entry->dataset = name;
    entry->last_used = options_.now();

    expire();
    std::string id;
    {
        std::lock_guard lock(store_mutex_);
        if (sessions_.size() >= options_.max_sessions) return error(503, "session store is full");
        do id = new_id();
        while (sessions_.count(id));
        sessions_.emplace(id, entry);
    }
    nlohmann::json state = entry->session.state_json();
    state["dataset"] = name;
    return json_response(201, {{"session_id", id}, {"state", std::move(state)}});
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) {
    std::lock_guard lock(store_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    if (options_.now() - it->second->last_used > options_.idle_timeout) {
        sessions_.erase(it);
        return nullptr;
    }
    return it->second;
}

HttpResponse SessionService::get_session(const std::string& id) {
    auto e = find(id);
    if (!e) return error(404, "unknown session '" + id + "'");
    std::lock_guard lock(e->mutex);
    e->last_used = options_.now();
    auto state = e->session.state_json();
    state["dataset"] = e->dataset;
    return json_response(200, state);
}

HttpResponse SessionService::answer(const std::string& id, const std::string& body) {
    auto e = find(id);
    if (!e) return error(404, "unknown session '" + id + "'");

    Answer a;
    try {
        const auto req = nlohmann::json::parse(body);
        const std::string choice = req.at("choice").get<std::string>();
        if (choice == "first")
            a = Answer::plus;
        else if (choice == "second")
            a = Answer::minus;
        else
            return error(400, "choice must be \"first\" or \"second\"");
    } catch (const nlohmann::json::exception& ex) {
        return error(400, std::string("malformed body: ") + ex.what());
    }

    std::lock_guard lock(e->mutex);
    e->last_used = options_.now();
    if (e->session.finished()) return error(409, "session has already finished");
    try {
        e->session.answer(a);
    } catch (const ProtocolError& ex) {
        return error(422, ex.what());
    }
    auto state = e->session.state_json();
    state["dataset"] = e->dataset;
    return json_response(200, state);
}

HttpResponse SessionService::transcript(const std::string& id) {
    auto e = find(id);
    if (!e) return error(404, "unknown session '" + id + "'");
    std::lock_guard lock(e->mutex);
    e->last_used = options_.now();
    return {200, e->session.transcript(), "application/x-ndjson"};
}

std::size_t SessionService::expire() {
    const auto now = options_.now();
    std::lock_guard lock(store_mutex_);
    return std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > options_.idle_timeout; });
}

std::size_t SessionService::session_count() const {
    std::lock_guard lock(store_mutex_);
    return sessions_.size();
}

void SessionService::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server.Get("/datasets", [this, send](const httplib::Request&, httplib::Response& res) { send(res, list_datasets()); });
    server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, create_session(req.body));
    });
    server.Get(R"(/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_session(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/answer)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, answer(req.matches[1], req.body));
    });
    server.Get(R"(/sessions/([^/]+)/transcript)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, transcript(req.matches[1]));
    });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& ex) {
            send(res, error(500, ex.what()));
        }
    });
}

void serve(SessionService& service, const std::string& host, int port) {
    httplib::Server server;
    service.mount(server);
    if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace cmpsearch
