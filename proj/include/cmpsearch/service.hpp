#pragma once

#include "cmpsearch/experiment.hpp"
#include "cmpsearch/search.hpp"

#include <json.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>

namespace httplib {
class Server;
}

namespace cmpsearch {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

// Item cards for clients: raw features plus the top two principal
// components when dim >= 2.
nlohmann::json dataset_payload(const std::string& name, const Workspace& ws);

// In-memory session store behind the HTTP API. Each handler takes the raw
// request body and returns status and body, so it can be driven without a
// socket. Datasets are shared read-only; answers to one session are
// serialized by that session's mutex.
class SessionService {
public:
    using Clock = std::chrono::steady_clock;

    struct Options {
        std::chrono::seconds idle_timeout{3600};
        std::size_t max_sessions = 10000;
        std::function<Clock::time_point()> now = [] { return Clock::now(); };
        std::uint64_t id_seed = std::random_device{}();
    };

    SessionService();
    explicit SessionService(Options options);

    void add_dataset(const std::string& name, std::shared_ptr<const Workspace> ws);

    HttpResponse list_datasets() const;                          // GET  /datasets
    HttpResponse create_session(const std::string& body);        // POST /sessions
    HttpResponse get_session(const std::string& id);             // GET  /sessions/{id}
    HttpResponse answer(const std::string& id, const std::string& body);  // POST /sessions/{id}/answer
    HttpResponse transcript(const std::string& id);              // GET  /sessions/{id}/transcript

    // Drops sessions idle longer than the timeout; returns how many.
    std::size_t expire();
    std::size_t session_count() const;

    void mount(httplib::Server& server);

private:
    struct Entry {
        std::mutex mutex;
        SearchSession session;
        std::string dataset;
        Clock::time_point last_used;
        explicit Entry(SearchSession s) : session(std::move(s)) {}
    };

    std::shared_ptr<Entry> find(const std::string& id);
    std::string new_id();

    Options options_;
    std::map<std::string, std::shared_ptr<const Workspace>> datasets_;
    std::string datasets_body_;
    mutable std::mutex store_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mt19937_64 id_rng_;
};

// Blocks serving the API until the process is stopped.
void serve(SessionService& service, const std::string& host, int port);

}  // namespace cmpsearch
