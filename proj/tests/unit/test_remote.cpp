#include "doctest.h"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "tapsynth/embedding.hpp"
#include "tapsynth/error.hpp"
#include "tapsynth/llm.hpp"
#include "tapsynth/vector_index.hpp"
#include "test_support.hpp"

using namespace tapsynth;

namespace {

class LocalServer {
public:
    LocalServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
    }
    ~LocalServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    httplib::Server& server() { return server_; }
    void start() {
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

// An address nothing listens on.
std::string dead_url(const std::string& path) {
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    return "http://127.0.0.1:" + std::to_string(port) + path;
}

}  // namespace

TEST_CASE("remote embedding provider") {
    LocalServer srv;
    std::atomic<int> in_flight{0}, peak{0}, calls{0};
    std::string last_auth, last_role, last_model;
    std::mutex mu;
    std::size_t reply_dim = 8;
    srv.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        const int now = ++in_flight;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {}
        ++calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        const auto body = nlohmann::json::parse(req.body);
        {
            std::lock_guard<std::mutex> lock(mu);
            last_auth = req.get_header_value("Authorization");
            last_role = body["role"];
            last_model = body["model"];
        }
        nlohmann::json vectors = nlohmann::json::array();
        for (const auto& t : body["texts"]) {
            std::vector<float> v(reply_dim, 0.f);
            v[t.get<std::string>().size() % reply_dim] = 2.f;
            vectors.push_back(v);
        }
        res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
        --in_flight;
    });
    srv.server().Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    srv.server().Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "text/plain");
    });
    srv.start();

    RemoteEmbeddingOptions o;
    o.url = srv.url("/embed");
    o.model = "enc";
    o.token = "secret";
    o.dim = 8;
    o.max_parallel = 2;
    o.batch_size = 1;

    SUBCASE("single embed is normalized and carries auth, role and model") {
        RemoteEmbeddingProvider p(o);
        const auto v = p.embed("abc", EmbedRole::Query);
        CHECK(v.dim() == 8);
        CHECK(v.values[3] == doctest::Approx(1.0));
        CHECK(last_auth == "Bearer secret");
        CHECK(last_role == "query");
        CHECK(last_model == "enc");
    }
    SUBCASE("batches keep order and respect the parallelism cap") {
        RemoteEmbeddingProvider p(o);
        std::vector<std::string> texts;
        for (int i = 1; i <= 10; ++i) texts.push_back(std::string(std::size_t(i), 'x'));
        const auto vs = p.embed_batch(texts, EmbedRole::Document);
        REQUIRE(vs.size() == 10);
        for (int i = 0; i < 10; ++i) CHECK(vs[std::size_t(i)].values[std::size_t(i + 1) % 8] == doctest::Approx(1.0));
        CHECK(calls == 10);
        CHECK(peak <= 2);
        CHECK(last_role == "document");
    }
    SUBCASE("build_index through the remote provider") {
        const Catalog c = tstest::make_catalog({tstest::trigger("t.a"), tstest::trigger("t.b")}, {tstest::action("a.a")});
        o.batch_size = 4;
        RemoteEmbeddingProvider p(o);
        const auto idx = build_index(c, FunctionKind::Trigger, p);
        CHECK(idx.records.size() == 2);
        CHECK(idx.dim == 8);
    }
    SUBCASE("512-dim replies into a 768-dim index") {
        reply_dim = 512;
        o.dim = 768;
        RemoteEmbeddingProvider p(o);
        CHECK(code_of([&] { p.embed("hello", EmbedRole::Query); }) == ErrorCode::DimMismatch);
    }
    SUBCASE("HTTP failure and malformed body") {
        o.url = srv.url("/fail");
        CHECK(code_of([&] { RemoteEmbeddingProvider(o).embed("x", EmbedRole::Query); }) == ErrorCode::Provider);
        o.url = srv.url("/garbage");
        CHECK(code_of([&] { RemoteEmbeddingProvider(o).embed("x", EmbedRole::Query); }) == ErrorCode::Provider);
    }
    SUBCASE("bad configuration") {
        o.url = "no-scheme";
        CHECK(code_of([&] { RemoteEmbeddingProvider p(o); }) == ErrorCode::Config);
    }
}

TEST_CASE("remote embedding provider offline") {
    RemoteEmbeddingOptions o;
    o.url = dead_url("/embed");
    o.dim = 4;
    o.timeout_seconds = 2;
    RemoteEmbeddingProvider p(o);
    CHECK(code_of([&] { p.embed("x", EmbedRole::Query); }) == ErrorCode::Provider);
}

TEST_CASE("remote chat backend") {
    LocalServer srv;
    nlohmann::json last;
    std::string last_auth;
    srv.server().Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        last = nlohmann::json::parse(req.body);
        last_auth = req.get_header_value("Authorization");
        nlohmann::json reply;
        reply["choices"] = {{{"message", {{"role", "assistant"}, {"content", "DECISION: {\"ok\": true}"}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    srv.server().Post("/broken", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices": []})", "application/json");
    });
    srv.server().Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    srv.start();

    RemoteChatOptions o;
    o.url = srv.url("/v1/chat");
    o.model = "judge";
    o.token = "tok";
    RemoteChatBackend backend(o);
    const LlmRequest req{"verifier", "system text", "user text", "{\"type\":\"object\"}"};
    const auto reply = backend.start()->complete(req);
    CHECK(reply == "DECISION: {\"ok\": true}");
    CHECK(last["model"] == "judge");
    CHECK(last["temperature"] == 0);
    REQUIRE(last["messages"].size() == 2);
    CHECK(last["messages"][0]["role"] == "system");
    CHECK(last["messages"][1]["content"] == "user text");
    CHECK(last_auth == "Bearer tok");

    o.url = srv.url("/broken");
    CHECK(RemoteChatBackend(o).complete(req).empty());
    o.url = srv.url("/down");
    CHECK(code_of([&] { RemoteChatBackend(o).complete(req); }) == ErrorCode::Backend);
    o.url = dead_url("/v1/chat");
    o.timeout_seconds = 2;
    CHECK(code_of([&] { RemoteChatBackend(o).complete(req); }) == ErrorCode::Backend);
}
