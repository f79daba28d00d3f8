#include "doctest.h"

#include <cmath>
#include <functional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "emosem/agreement.hpp"
#include "emosem/backends.hpp"
#include "emosem/rng.hpp"
#include "emosem/segmenter.hpp"
#include "emosem/text.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace emosem;

namespace {

/// Replays scripted outcomes: an HTTP status, or status 0 for a connection
/// failure and -1 for a timeout.
class ScriptedTransport final : public HttpTransport {
 public:
  explicit ScriptedTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}

  HttpResponse post_json(const std::string&, const std::string& body,
                         const std::map<std::string, std::string>& headers,
                         double) const override {
    bodies.push_back(body);
    last_headers = headers;
    const auto& r = script_[std::min(calls++, script_.size() - 1)];
    if (r.status == 0) throw TransportFailure{"connection refused", false};
    if (r.status == -1) throw TransportFailure{"read timeout", true};
    return r;
  }

  mutable std::size_t calls = 0;
  mutable std::vector<std::string> bodies;
  mutable std::map<std::string, std::string> last_headers;

 private:
  std::vector<HttpResponse> script_;
};

BackendConfig http_cfg(int retries = 3) {
  BackendConfig c;
  c.kind = BackendKind::http;
  c.endpoint_url = "http://127.0.0.1:1/v1";
  c.model_name = "m";
  c.max_retries = retries;
  c.timeout_seconds = 5;
  return c;
}

const HttpResponse kOk{200, R"({"text":"I felt scared."})"};

}  // namespace

TEST_CASE("mock transcriber passes fixtures through") {
  FixtureTranscriber t(std::map<std::string, std::string>{{"f1.wav", "I felt scared"}});
  const auto r = t.transcribe("f1.wav");
  CHECK(r.text == "I felt scared");
  CHECK(r.backend_id == "mock-fixture");
  CHECK_THROWS_CODE(t.transcribe("f2.wav"), ErrorCode::unresolvable_locator);
}

TEST_CASE("fixture file through the config entry point") {
  const auto dir = testing::scratch_dir("backends_fixture");
  testing::write_text(dir / "fx.json", R"({"f1.wav": "I felt scared"})");
  BackendConfig cfg;
  cfg.model_name = "fixture";
  cfg.fixture_path = (dir / "fx.json").string();
  CHECK(transcribe("f1.wav", cfg).text == "I felt scared");
  cfg.fixture_path = (dir / "missing.json").string();
  CHECK_THROWS_CODE(transcribe("f1.wav", cfg), ErrorCode::io);
}

TEST_CASE("two transient failures then success with max_retries = 3") {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector<HttpResponse>{{503, ""}, {0, ""}, kOk});
  std::vector<double> sleeps;
  HttpTranscriber asr(HttpClient(http_cfg(3), transport, [&](double s) { sleeps.push_back(s); }));
  CHECK(asr.transcribe("f1.wav").text == "I felt scared.");
  CHECK(transport->calls == 3);
  CHECK(sleeps == std::vector<double>{1.0, 2.0});
  const auto body = nlohmann::json::parse(transport->bodies.front());
  CHECK(body["audio"] == "f1.wav");
  CHECK(body["model_name"] == "m");
}

TEST_CASE("retry policy") {
  const auto no_sleep = [](double) {};
  SUBCASE("exhausted retries raise a transport error") {
    auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{500, ""}});
    HttpClient c(http_cfg(2), t, no_sleep);
    int attempts = 0;
    CHECK_THROWS_CODE(c.post("{}", &attempts), ErrorCode::transport);
    CHECK(t->calls == 3);
  }
  SUBCASE("429 is retried") {
    auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{429, ""}, kOk});
    HttpClient c(http_cfg(1), t, no_sleep);
    int attempts = 0;
    CHECK_NOTHROW(c.post("{}", &attempts));
    CHECK(attempts == 2);
  }
  SUBCASE("401 fails immediately") {
    auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{401, ""}, kOk});
    HttpClient c(http_cfg(3), t, no_sleep);
    CHECK_THROWS_CODE(c.post("{}"), ErrorCode::authentication);
    CHECK(t->calls == 1);
  }
  SUBCASE("other 4xx are not retried") {
    auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{400, "bad"}, kOk});
    HttpClient c(http_cfg(3), t, no_sleep);
    CHECK_THROWS_CODE(c.post("{}"), ErrorCode::transport);
    CHECK(t->calls == 1);
  }
  SUBCASE("backoff doubles and is capped at the timeout") {
    auto cfg = http_cfg(4);
    cfg.timeout_seconds = 3;
    auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{0, ""}});
    std::vector<double> sleeps;
    HttpClient c(cfg, t, [&](double s) { sleeps.push_back(s); });
    CHECK_THROWS_CODE(c.post("{}"), ErrorCode::transport);
    CHECK(sleeps == std::vector<double>{1.0, 2.0, 3.0, 3.0});
  }
  SUBCASE("timeouts are named in the error") {
    auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{{-1, ""}});
    HttpClient c(http_cfg(0), t, no_sleep);
    const auto msg = testing::error_message_of([&] { c.post("{}"); });
    CHECK(msg.find("timed out after 5") != std::string::npos);
    CHECK(msg.find("timeout_seconds") != std::string::npos);
  }
}

TEST_CASE("API keys come from the named environment variable") {
  auto cfg = http_cfg(0);
  cfg.api_key_env = "EMOSEM_TEST_KEY_THAT_IS_UNSET";
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{kOk});
  CHECK_THROWS_CODE(HttpClient(cfg, t).post("{}"), ErrorCode::authentication);

  setenv("EMOSEM_TEST_KEY", "sekret", 1);
  cfg.api_key_env = "EMOSEM_TEST_KEY";
  HttpClient(cfg, t).post("{}");
  CHECK(t->last_headers.at("Authorization") == "Bearer sekret");
}

TEST_CASE("http language model sends temperature and returns completions verbatim") {
  const std::string malformed = "<answer><descriptive>oops";
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{
      {200, nlohmann::json{{"text", malformed}}.dump()}, {200, R"({"text":""})"}});
  HttpLanguageModel llm(HttpClient(http_cfg(0), t));
  CHECK(llm.complete("prompt") == malformed);
  CHECK(nlohmann::json::parse(t->bodies.front())["temperature"] == 0.0);
  CHECK_THROWS_CODE(llm.complete("prompt"), ErrorCode::empty_completion);
  CHECK(llm.id() == "http:m");
}

TEST_CASE("http embedder normalizes and pins the dimension") {
  auto t = std::make_shared<ScriptedTransport>(std::vector<HttpResponse>{
      {200, R"({"embedding":[3,4]})"}, {200, R"({"embedding":[1,2,3]})"}});
  HttpEmbedder emb(HttpClient(http_cfg(0), t));
  const auto v = emb.embed("x");
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));
  CHECK(emb.dimension() == 2);
  CHECK_THROWS_CODE(emb.embed("y"), ErrorCode::dimension_mismatch);
}

TEST_CASE("retries against a local HTTP server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 503;
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"text", "echo:" + body["prompt"].get<std::string>()}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig cfg;
  cfg.kind = BackendKind::http;
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
  cfg.model_name = "local";
  cfg.max_retries = 3;
  cfg.backoff_initial_seconds = 0.01;
  cfg.timeout_seconds = 5;
  const std::string out = complete("hello", cfg);
  server.stop();
  worker.join();
  CHECK(out == "echo:hello");
  CHECK(hits == 3);
}

TEST_CASE("connection failures against a closed port") {
  BackendConfig cfg;
  cfg.kind = BackendKind::http;
  cfg.endpoint_url = "http://127.0.0.1:9/none";
  cfg.max_retries = 1;
  cfg.backoff_initial_seconds = 0.0;
  cfg.timeout_seconds = 1;
  CHECK_THROWS_CODE(complete("x", cfg), ErrorCode::transport);
}

TEST_CASE("rule mock answers in the prompt format") {
  const std::string completion =
      RuleMockLanguageModel{}.complete(build_prompt("The dog died. I was devastated."));
  const auto seg = parse_segmentation(completion);
  CHECK(seg.descriptive == "The dog died.");
  CHECK(seg.expressive == "I was devastated.");
  CHECK(RuleMockLanguageModel{}.complete(build_prompt("The dog died. I was devastated.")) ==
        completion);
}

TEST_CASE("hashing embedder") {
  HashingEmbedder e;
  const auto zero = e.embed("");
  CHECK(zero.size() == kHashEmbeddingDim);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));
  CHECK(e.embed("...") == zero);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    std::string t;
    for (int k = 0; k < 1 + static_cast<int>(rng.below(8)); ++k) t += "w" + std::to_string(rng.below(40)) + " ";
    const auto v = e.embed(t);
    double n = 0;
    for (double x : v) n += x * x;
    CHECK(std::abs(std::sqrt(n) - 1.0) <= 1e-9);
    CHECK(cosine_similarity(v, e.embed(t)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(e.embed("the cat") == e.embed("The  cat!"));
  // Bucket of a single word is its seeded FNV hash mod 512.
  const auto v = e.embed("cat");
  const auto bucket = text::fnv1a64("cat", text::kFnvOffsetBasis ^ kHashEmbeddingSeed) % 512;
  CHECK(v[bucket] == doctest::Approx(1.0));
}

TEST_CASE("word error rate") {
  CHECK(word_error_rate("the cat sat", "the cat sat") == 0.0);
  CHECK(word_error_rate("a b x d e", "a b c d e") == doctest::Approx(0.2));
  CHECK(word_error_rate("The, CAT sat!", "the cat sat") == 0.0);
  // Denominator is the reference length.
  CHECK(word_error_rate("a b", "a b c d") == doctest::Approx(0.5));
  CHECK(word_error_rate("a b c d", "a b") == doctest::Approx(1.0));
  // Insertions can push WER above 1.
  CHECK(word_error_rate("x y z w", "a") == doctest::Approx(4.0));
  CHECK_THROWS_CODE(word_error_rate("a", " ,. "), ErrorCode::empty_reference);
}

TEST_CASE("word edit distance matches a recursive oracle") {
  Rng rng(5);
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> h, r;
    for (auto n = rng.below(7); n > 0; --n) h.push_back(alphabet[rng.below(4)]);
    for (auto n = 1 + rng.below(6); n > 0; --n) r.push_back(alphabet[rng.below(4)]);
    const auto expected = oracle::edit_distance(h, 0, r, 0);
    CHECK(word_edit_distance(h, r) == expected);
    const double wer = word_error_rate(text::join(h, " "), text::join(r, " "));
    CHECK(wer == doctest::Approx(static_cast<double>(expected) / r.size()).epsilon(1e-12));
    CHECK(wer <= std::max(1.0, static_cast<double>(h.size()) / r.size()) + 1e-12);
  }
}

TEST_CASE("backend config") {
  CHECK(backend_from_shorthand("mock-rule").model_name == "rule");
  CHECK(backend_from_shorthand("http").kind == BackendKind::http);
  CHECK_THROWS_CODE(backend_from_shorthand("carrier-pigeon"), ErrorCode::config);
  BackendConfig c;
  CHECK(c.temperature == 0.0);
  c.timeout_seconds = 0;
  CHECK_THROWS_CODE(validate(c), ErrorCode::config);
  c = {};
  c.max_retries = -1;
  CHECK_THROWS_CODE(validate(c), ErrorCode::config);
  c = {};
  c.kind = BackendKind::http;
  CHECK_THROWS_CODE(validate(c), ErrorCode::config);
  c.model_name = "nope";
  c.kind = BackendKind::mock;
  CHECK_THROWS_CODE(make_language_model(c), ErrorCode::config);
}
