#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "helpers.hpp"
#include "tip/embed.hpp"
#include "tip/rng.hpp"

using Catch::Approx;

TEST_CASE("truncate returns short text unchanged") {
  CHECK(tip::truncate_abstract("short text", 100) == "short text");
}

TEST_CASE("truncate cuts at a whitespace boundary within budget") {
  std::string text;
  tip::Rng rng(4);
  while (text.size() < 35000) {
    const int len = rng.uniform_int(2, 12);
    for (int i = 0; i < len; ++i) text += static_cast<char>('a' + rng.below(26));
    text += ' ';
  }
  const auto cut = tip::truncate_abstract(text, 30000);
  CHECK(cut.size() <= 30000);
  CHECK(text[cut.size()] == ' ');  // the cut fell on a boundary
}

TEST_CASE("truncate hard-cuts text without whitespace") {
  const std::string text(100, 'x');
  CHECK(tip::truncate_abstract(text, 30) == std::string(30, 'x'));
}

TEST_CASE("truncate is idempotent over random inputs") {
  tip::Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const int len = rng.uniform_int(0, 200);
    for (int i = 0; i < len; ++i) {
      const int c = rng.uniform_int(0, 10);
      text += c == 0 ? ' ' : static_cast<char>('a' + c);
    }
    const std::size_t budget = static_cast<std::size_t>(rng.uniform_int(1, 150));
    const auto once = tip::truncate_abstract(text, budget);
    CHECK(tip::truncate_abstract(once, budget) == once);
    CHECK(once.size() <= budget);
  }
}

TEST_CASE("local embedding is deterministic") {
  const auto a = tip::local_embed("amyloid beta plaques in cortex", 256, 7);
  const auto b = tip::local_embed("amyloid beta plaques in cortex", 256, 7);
  CHECK(a == b);
  const auto c = tip::local_embed("amyloid beta plaques in cortex", 256, 8);
  CHECK(a != c);
}

TEST_CASE("local embedding of non-empty text has unit norm") {
  const auto v = tip::local_embed("one two three", 512, 3);
  double norm2 = 0;
  for (const double x : v) norm2 += x * x;
  CHECK(std::sqrt(norm2) == Approx(1.0).margin(1e-9));
}

TEST_CASE("empty text maps to the zero vector") {
  const auto v = tip::local_embed("", 64, 1);
  for (const double x : v) CHECK(x == 0.0);
}

TEST_CASE("local embedding ignores separators and case") {
  const auto a = tip::local_embed("Tau Protein,  aggregation!!", 128, 5);
  const auto b = tip::local_embed("tau protein aggregation   ", 128, 5);
  CHECK(a == b);
}

TEST_CASE("disjoint vocabularies are near-orthogonal") {
  tip::Rng rng(31);
  auto make_text = [&rng](const char* prefix) {
    std::string text;
    for (int w = 0; w < 50; ++w)
      text += std::string(prefix) + std::to_string(rng.uniform_int(0, 400)) + " ";
    return text;
  };
  for (int pair = 0; pair < 100; ++pair) {
    const auto a = tip::local_embed(make_text("alpha"), 1536, 11);
    const auto b = tip::local_embed(make_text("beta"), 1536, 11);
    double dot = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    CHECK(std::fabs(dot) < 0.15);
  }
}

TEST_CASE("embed_batch of an empty list is empty") {
  tip::EmbedderConfig cfg;
  CHECK(tip::embed_batch({}, cfg).empty());
}

TEST_CASE("embed_batch in local mode matches local_embed after truncation") {
  tip::EmbedderConfig cfg;
  cfg.dimension = 64;
  cfg.seed = 21;
  cfg.max_chars = 10;
  const auto out = tip::embed_batch({"alpha beta gamma"}, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == tip::local_embed(tip::truncate_abstract("alpha beta gamma", 10), 64, 21));
}

namespace {

// In-process embeddings endpoint. Answers each request's data array in
// reverse index order; optionally fails the first `fail_first` requests with
// the given status.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> requests{0};
  std::atomic<int> fail_first{0};
  int fail_status = 429;
  int dimension = 8;
  std::atomic<bool> saw_auth{false};

  StubServer() {
    server.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      requests.fetch_add(1);
      if (req.get_header_value("Authorization").rfind("Bearer ", 0) == 0) saw_auth = true;
      if (fail_first.load() > 0) {
        fail_first.fetch_sub(1);
        res.status = fail_status;
        res.set_content("try later", "text/plain");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const auto& input = body.at("input");
      nlohmann::json data = nlohmann::json::array();
      for (int i = static_cast<int>(input.size()) - 1; i >= 0; --i) {
        // embedding encodes (index, text length) so alignment is checkable
        std::vector<double> v(static_cast<std::size_t>(dimension), 0.0);
        v[0] = static_cast<double>(i);
        v[1] = static_cast<double>(input[static_cast<std::size_t>(i)].get<std::string>().size());
        data.push_back({{"index", i}, {"embedding", v}});
      }
      nlohmann::json reply = {{"data", data}};
      res.set_content(reply.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }

  tip::EmbedderConfig config() const {
    tip::EmbedderConfig cfg;
    cfg.mode = tip::EmbedMode::Remote;
    cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
    cfg.dimension = dimension;
    cfg.request_batch = 4;
    cfg.max_in_flight = 2;
    cfg.retry.max_attempts = 4;
    cfg.retry.base_backoff_ms = 2;
    return cfg;
  }
};

struct TokenGuard {
  TokenGuard() { setenv("EMBED_API_TOKEN", "test-token", 1); }
  ~TokenGuard() { unsetenv("EMBED_API_TOKEN"); }
};

}  // namespace

TEST_CASE("remote embedding aligns out-of-order responses to input order") {
  TokenGuard token;
  StubServer stub;
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back(std::string("text-") + std::string(i + 1, 'x'));
  const auto out = tip::embed_batch(texts, stub.config());
  REQUIRE(out.size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CHECK(out[i][0] == Approx(static_cast<double>(i % 4)));  // index within its batch
    CHECK(out[i][1] == Approx(static_cast<double>(texts[i].size())));
  }
  CHECK(stub.saw_auth.load());
}

TEST_CASE("remote embedding retries rate-limit failures then succeeds") {
  TokenGuard token;
  StubServer stub;
  stub.fail_first = 2;
  const auto out = tip::embed_batch({"only text"}, stub.config());
  REQUIRE(out.size() == 1);
  CHECK(stub.requests.load() == 3);  // two 429s, one success
}

TEST_CASE("remote embedding gives up after max_attempts") {
  TokenGuard token;
  StubServer stub;
  stub.fail_first = 100;
  auto cfg = stub.config();
  cfg.retry.max_attempts = 3;
  CHECK_THROWS_AS(tip::embed_batch({"text"}, cfg), tip::EmbeddingServiceError);
  CHECK(stub.requests.load() == 3);
}

TEST_CASE("non-retryable status fails immediately") {
  TokenGuard token;
  StubServer stub;
  stub.fail_first = 100;
  stub.fail_status = 403;
  auto cfg = stub.config();
  try {
    tip::embed_batch({"text"}, cfg);
    FAIL("expected EmbeddingServiceError");
  } catch (const tip::EmbeddingServiceError& e) {
    CHECK(e.status == 403);
  }
  CHECK(stub.requests.load() == 1);
}

TEST_CASE("unexpected vector width raises DimensionMismatch") {
  TokenGuard token;
  StubServer stub;
  auto cfg = stub.config();
  cfg.dimension = 16;  // stub answers with 8
  CHECK_THROWS_AS(tip::embed_batch({"text"}, cfg), tip::DimensionMismatch);
}

TEST_CASE("remote mode requires the token env var") {
  StubServer stub;
  unsetenv("EMBED_API_TOKEN");
  CHECK_THROWS_AS(tip::embed_batch({"text"}, stub.config()), tip::ConfigError);
}

TEST_CASE("embedding cache round-trips and the hits skip recomputation") {
  tiptest::ScratchDir dir("cache");
  const auto path = dir.path() / "cache.jsonl";
  tip::EmbedderConfig cfg;
  cfg.dimension = 32;
  cfg.seed = 2;
  tip::EmbeddingCache cache;
  const auto first = tip::embed_batch_cached({"alpha", "beta"}, cfg, cache);
  CHECK(cache.size() == 2);
  cache.save(path);

  tip::EmbeddingCache reloaded;
  reloaded.load(path);
  CHECK(reloaded.size() == 2);
  const auto second = tip::embed_batch_cached({"alpha", "beta"}, cfg, reloaded);
  CHECK(first == second);
}
