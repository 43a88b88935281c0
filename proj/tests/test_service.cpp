#include "cmpsearch/service.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace cmpsearch;

namespace {

std::shared_ptr<const Workspace> l4() { return Workspace::create(Dataset::from_line("l4", {0, 1, 3, 7}), Prior::uniform(4)); }

std::string truthful(const Workspace& ws, ItemId target, const nlohmann::json& state) {
    const ItemId x = state["pair"][0], y = state["pair"][1];
    return ws.table->answer(target, x, y) == Answer::plus ? R"({"choice":"first"})" : R"({"choice":"second"})";
}

}  // namespace

TEST_CASE("truthful session on the four-point line") {
    SessionService svc;
    const auto ws = l4();
    svc.add_dataset("l4", ws);
    auto created = svc.create_session(R"({"dataset":"l4","algorithm":"tree"})");
    REQUIRE(created.status == 201);
    const std::string id = created.json()["session_id"];
    auto state = created.json()["state"];
    CHECK(state["status"] == "awaiting");
    CHECK(state["queries_so_far"] == 0);
    while (state["status"] == "awaiting") {
        auto r = svc.answer(id, truthful(*ws, 3, state));
        REQUIRE(r.status == 200);
        state = r.json();
    }
    CHECK(state["result"] == 3);
    CHECK(state["queries_so_far"] == 2);
    CHECK(svc.get_session(id).json() == state);

    auto late = svc.answer(id, R"({"choice":"first"})");
    CHECK(late.status == 409);

    auto tr = svc.transcript(id);
    CHECK(tr.status == 200);
    CHECK(tr.content_type == "application/x-ndjson");
    CHECK(tr.body.find(R"({"queries":2,"result":3})") != std::string::npos);
}

TEST_CASE("error statuses") {
    SessionService svc;
    svc.add_dataset("l4", l4());
    CHECK(svc.get_session("nope").status == 404);
    CHECK(svc.answer("nope", R"({"choice":"first"})").status == 404);
    CHECK(svc.transcript("nope").status == 404);
    CHECK(svc.create_session("{").status == 400);
    CHECK(svc.create_session(R"({"algorithm":"tree"})").status == 400);
    CHECK(svc.create_session(R"({"dataset":"iris"})").status == 404);
    CHECK(svc.create_session(R"({"dataset":"l4","algorithm":"bfs"})").status == 400);
    CHECK(svc.create_session(R"({"dataset":"l4","algorithm":"noisy","params":{"epsilon":0.7}})").status == 400);
    const std::string id = svc.create_session(R"({"dataset":"l4"})").json()["session_id"];
    CHECK(svc.answer(id, "not json").status == 400);
    CHECK(svc.answer(id, R"({"choice":"left"})").status == 400);
    CHECK(svc.answer(id, R"({"pick":"first"})").status == 400);
    CHECK(svc.get_session(id).json()["queries_so_far"] == 0);
}

TEST_CASE("concurrent sessions are independent") {
    SessionService svc;
    const auto ws = l4();
    svc.add_dataset("l4", ws);
    std::vector<std::thread> threads;
    std::vector<nlohmann::json> finals(8);
    for (int k = 0; k < 8; ++k)
        threads.emplace_back([&, k] {
            auto r = svc.create_session(R"({"dataset":"l4","algorithm":"ranknet"})").json();
            const std::string id = r["session_id"];
            auto state = r["state"];
            while (state["status"] == "awaiting") state = svc.answer(id, truthful(*ws, k % 4, state)).json();
            finals[k] = state;
        });
    for (auto& t : threads) t.join();
    for (int k = 0; k < 8; ++k) CHECK(finals[k]["result"] == k % 4);
    CHECK(svc.session_count() == 8);
}

TEST_CASE("idle sessions expire") {
    auto now = SessionService::Clock::now();
    SessionService::Options opts;
    opts.idle_timeout = std::chrono::seconds(10);
    opts.now = [&] { return now; };
    SessionService svc(opts);
    svc.add_dataset("l4", l4());
    const std::string id = svc.create_session(R"({"dataset":"l4"})").json()["session_id"];
    now += std::chrono::seconds(5);
    CHECK(svc.get_session(id).status == 200);
    now += std::chrono::seconds(9);
    CHECK(svc.get_session(id).status == 200);
    now += std::chrono::seconds(11);
    CHECK(svc.expire() == 1);
    CHECK(svc.get_session(id).status == 404);
}

TEST_CASE("dataset registry") {
    SessionService svc;
    svc.add_dataset("l4", l4());
    svc.add_dataset("cloud", Workspace::create(gen_l1_ball(30, 3, 1.0, 1), Prior::uniform(30)));
    const auto j = svc.list_datasets().json();
    REQUIRE(j["datasets"].size() == 2);
    const auto& cloud = j["datasets"][0];
    CHECK(cloud["name"] == "cloud");
    CHECK(cloud["items"].size() == 30);
    CHECK(cloud["items"][0]["features"].size() == 3);
    CHECK(cloud["items"][0]["projection"].size() == 2);
    CHECK(!j["datasets"][1]["items"][0].contains("projection"));
}

TEST_CASE("http round trip") {
    SessionService svc;
    const auto ws = l4();
    svc.add_dataset("l4", ws);
    httplib::Server server;
    svc.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto ds = cli.Get("/datasets");
    REQUIRE(ds);
    CHECK(ds->status == 200);
    auto created = cli.Post("/sessions", R"({"dataset":"l4","algorithm":"fgbs"})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    auto body = nlohmann::json::parse(created->body);
    const std::string id = body["session_id"];
    auto state = body["state"];
    while (state["status"] == "awaiting") {
        auto r = cli.Post("/sessions/" + id + "/answer", truthful(*ws, 1, state), "application/json");
        REQUIRE(r);
        state = nlohmann::json::parse(r->body);
    }
    CHECK(state["result"] == 1);
    auto got = cli.Get("/sessions/" + id);
    CHECK(nlohmann::json::parse(got->body) == state);
    CHECK(cli.Post("/sessions/" + id + "/answer", R"({"choice":"first"})", "application/json")->status == 409);
    CHECK(cli.Get("/sessions/zzz")->status == 404);
    CHECK(cli.Post("/sessions", "{oops", "application/json")->status == 400);
    auto tr = cli.Get("/sessions/" + id + "/transcript");
    CHECK(tr->body == svc.transcript(id).body);
    server.stop();
    th.join();
}
