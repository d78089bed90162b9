#include <doctest.h>

#include <atomic>
#include <mutex>

#include "local_server.hpp"
#include "scenenoise/chat.hpp"
#include "scenenoise/error.hpp"
#include "support.hpp"

using namespace scenenoise;
using nlohmann::json;

TEST_SUITE("chat") {
  TEST_CASE("backend kinds") {
    CHECK(parse_backend_kind("http-dual") == BackendKind::http_dual);
    CHECK(to_string(BackendKind::http_single) == "http-single");
    CHECK_THROWS_AS(parse_backend_kind("carrier-pigeon"), InvalidArgument);
    ChatBackend b;
    b.kind = BackendKind::http_single;
    CHECK_THROWS_AS(b.check(), InvalidArgument);
  }

  TEST_CASE("synthesized fixture scenes are valid and deterministic") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const std::string a = synthesize_scene_response("Noisy balcony", seed);
      CHECK(a == synthesize_scene_response("Noisy balcony", seed));
      const FilterReport r = validate(a);
      CHECK(r.passed);
      CHECK(parse_scene_info(a).scene_type == "balcony");
    }
    CHECK(synthesize_scene_response("Noisy balcony", 1) != synthesize_scene_response("Noisy balcony", 2));
  }

  TEST_CASE("scripted fixture retries until a valid scene") {
    auto corpus = std::make_shared<FixtureCorpus>();
    corpus->add("Noisy balcony", "no structure at all");
    corpus->add("Noisy balcony", testsupport::kBalconySingleNoise);
    corpus->add("Noisy balcony", testsupport::kBalconyResponse);
    ChatBackend backend;
    auto transport = make_transport(backend, corpus);
    const ScenePrompt task("Noisy", "balcony");
    const auto outcome = generate_scene_info(task, default_template(task), backend, *transport);
    CHECK(outcome.attempts == 3);
    REQUIRE(outcome.rejected.size() == 2);
    CHECK(outcome.rejected[0].report.response_error);
    CHECK(outcome.rejected[1].report.types_less_than_target);
    CHECK(outcome.scene.noise_count() == 2);

    backend.max_retries = 1;
    CHECK_THROWS_AS(generate_scene_info(task, default_template(task), backend, *transport), ExhaustedRetries);
  }

  TEST_CASE("fixture corpus file") {
    testsupport::TempDir tmp("chat_corpus");
    {
      std::ofstream out(tmp.path() / "c.jsonl");
      out << json{{"key", "Busy cafe"}, {"response", "hello"}}.dump() << "\n\n";
    }
    const auto c = FixtureCorpus::load(tmp.path() / "c.jsonl");
    CHECK(c.contains("Busy cafe"));
    CHECK(fixture_lookup(c, "Busy cafe", 0, 5) == "hello");
    {
      std::ofstream out(tmp.path() / "bad.jsonl");
      out << "{\"key\": 1}\n";
    }
    CHECK_THROWS_AS(FixtureCorpus::load(tmp.path() / "bad.jsonl"), InvalidArgument);
  }

  TEST_CASE("http wire formats") {
    std::mutex m;
    std::vector<json> bodies;
    std::string auth;
    testsupport::LocalServer server([&](httplib::Server& s) {
      s.Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(m);
        bodies.push_back(json::parse(req.body));
        auth = req.get_header_value("Authorization");
        res.set_content(json{{"content", testsupport::kBalconyResponse}}.dump(), "application/json");
      });
      s.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"text\": 1}", "application/json");
      });
      s.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    });
    ::setenv("SCENENOISE_API_KEY", "sekrit", 1);

    const ScenePrompt task("Noisy", "balcony");
    ChatBackend single;
    single.kind = BackendKind::http_single;
    single.endpoint = server.url("/chat");
    single.model_name = "m1";
    auto t1 = make_transport(single);
    const auto o1 = generate_scene_info(task, default_template(task), single, *t1, {}, 11);
    CHECK(o1.attempts == 1);

    ChatBackend dual = single;
    dual.kind = BackendKind::http_dual;
    auto t2 = make_transport(dual);
    generate_scene_info(task, default_template(task), dual, *t2, {}, 12);

    REQUIRE(bodies.size() == 2);
    CHECK(bodies[0]["model"] == "m1");
    CHECK(bodies[0]["seed"] == 11);
    CHECK_FALSE(bodies[0].contains("history"));
    CHECK(bodies[0]["prompt"].get<std::string>().find("### Background") != std::string::npos);
    CHECK(bodies[1]["history"].size() == 7);
    CHECK(bodies[1]["history"][0]["role"] == "user");
    CHECK(bodies[1]["history"][2]["role"] == "assistant");
    CHECK(auth == "Bearer sekrit");
    ::unsetenv("SCENENOISE_API_KEY");

    ChatBackend broken = single;
    broken.endpoint = server.url("/broken");
    CHECK_THROWS_AS(make_transport(broken)->complete({}), TransportError);
    broken.endpoint = server.url("/fail");
    CHECK_THROWS_AS(make_transport(broken)->complete({}), TransportError);
  }
}
