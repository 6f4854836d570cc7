#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <random>
#include <thread>

#include "finer/core/error.hpp"
#include "finer/providers/cache.hpp"
#include "finer/providers/http_backend.hpp"
#include "finer/providers/mock_backend.hpp"
#include "finer/providers/providers.hpp"
#include "finer/providers/wire_server.hpp"
#include "support.hpp"

using namespace finer;
using namespace finer::providers;
using finer::testkit::TempDir;
using nlohmann::json;

namespace {

std::unique_ptr<Providers> mock_providers(MockScript script = {}, std::shared_ptr<ResponseCache> cache = nullptr,
                                          int max_concurrency = 4) {
  return make_providers(std::make_shared<MockBackend>(std::move(script)), std::move(cache), true,
                        max_concurrency);
}

std::unique_ptr<Providers> http_providers(const std::string& base_url, std::shared_ptr<ResponseCache> cache = nullptr,
                                          RetryPolicy retry = {3, std::chrono::milliseconds(1)}) {
  std::array<std::unique_ptr<RoleClient>, 5> clients;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    ProviderEndpoint ep;
    ep.role = kAllRoles[i];
    ep.base_url = base_url;
    ep.model_name = "mock";
    ep.timeout = std::chrono::milliseconds(5000);
    clients[i] = std::make_unique<RoleClient>(ep, std::make_shared<HttpBackend>(ep, retry), cache);
  }
  return std::make_unique<Providers>(std::move(clients));
}

// A minimal httplib server whose handler the test controls.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post(R"(/.*)", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~StubServer() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

ProviderEndpoint endpoint_for(const std::string& url) {
  ProviderEndpoint ep;
  ep.role = Role::llm;
  ep.base_url = url;
  ep.timeout = std::chrono::milliseconds(2000);
  return ep;
}

const json kChatBody = {{"prompt", "hi"}, {"temperature", 0.0}, {"n", 1}};

// The black-box client battery; run identically against in-process mocks and
// against the same mock behind the HTTP wire contract.
void client_battery(Providers& p) {
  const Bytes img = testkit::solid_png(200, 10, 10);
  const Bytes img2 = testkit::solid_png(10, 200, 10);

  EXPECT_EQ(p.vqa_answer(img, "Question: What is this? Answer:"), "object");
  EXPECT_EQ(p.vqa_answer(img, "Question: What is this? Answer:"), p.vqa_answer(img, "Question: What is this? Answer:"));

  const auto c1 = p.llm_complete("Say something", 0.0, 1);
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_EQ(c1, p.llm_complete("Say something", 0.0, 1));
  const auto c10 = p.llm_complete("List attributes", 0.9, 10);
  EXPECT_EQ(c10.size(), 10u);
  const auto j = p.llm_complete("Output a JSON object", 0.9, 1);
  EXPECT_TRUE(json::parse(j.front()).contains("names"));

  const auto t1 = p.embed_text("Dark-eyed Junco");
  EXPECT_EQ(t1, p.embed_text("Dark-eyed Junco"));
  EXPECT_EQ(t1.dim(), 64u);
  EXPECT_NE(t1, p.embed_text("Slate-colored Junco"));
  const auto i1 = p.embed_image(img);
  EXPECT_EQ(i1, p.embed_image(img));
  EXPECT_NE(i1, p.embed_image(img2));
  EXPECT_EQ(cosine(p.embed_sentence("lotus"), p.embed_sentence("lotus")), 1.0);

  EXPECT_THROW(p.vqa_answer(img, ""), Error);
  EXPECT_THROW(p.llm_complete("x", 2.5, 1), Error);
  EXPECT_THROW(p.llm_complete("x", 0.5, 0), Error);
  EXPECT_THROW(p.embed_text(""), Error);
}

}  // namespace

TEST(CacheKey, StableAndCanonical) {
  const auto a = json::parse(R"({"prompt":"p","image_sha256":"00","temperature":0.9})");
  const auto b = json::parse(R"({"temperature":0.9, "image_sha256":"00",   "prompt":"p"})");
  EXPECT_EQ(cache_key(Role::vqa, "m", a), cache_key(Role::vqa, "m", b));
  EXPECT_EQ(cache_key(Role::vqa, "m", a).size(), 64u);
  EXPECT_NE(cache_key(Role::vqa, "m", a), cache_key(Role::llm, "m", a));
  EXPECT_NE(cache_key(Role::vqa, "m", a), cache_key(Role::vqa, "m2", a));
}

TEST(CacheKey, GoldenValueIsPlatformStable) {
  // Pure function of its inputs; pinned so a change in canonicalization is noticed.
  const auto k = cache_key(Role::text_embed, "mock", json{{"kind", "text"}, {"payload", "lotus"}});
  EXPECT_EQ(k, sha256_hex(std::string_view(
                   R"({"body":{"kind":"text","payload":"lotus"},"model":"mock","role":"text_embed"})")));
}

TEST(CacheKey, ImageByteChangesKey) {
  auto p = mock_providers();
  Bytes a = testkit::solid_png(1, 2, 3);
  Bytes b = a;
  b.back() ^= 1;
  EXPECT_NE(cache_key(Role::vqa, "m", json{{"image_sha256", sha256_hex(a)}, {"prompt", "q"}}),
            cache_key(Role::vqa, "m", json{{"image_sha256", sha256_hex(b)}, {"prompt", "q"}}));
}

TEST(ResponseCache, PutGetAndEnvOverride) {
  TempDir dir;
  ResponseCache cache(dir.path() / "c");
  EXPECT_FALSE(cache.get("ab12").has_value());
  cache.put("ab12", "value");
  EXPECT_EQ(cache.get("ab12").value(), "value");

  ::setenv("FINER_CACHE_DIR", (dir.path() / "env").c_str(), 1);
  EXPECT_EQ(ResponseCache::from_env(dir.path() / "fallback")->dir(), dir.path() / "env");
  ::unsetenv("FINER_CACHE_DIR");
  EXPECT_EQ(ResponseCache::from_env(dir.path() / "fallback")->dir(), dir.path() / "fallback");
}

TEST(MockProviders, ClientBattery) {
  auto p = mock_providers();
  client_battery(*p);
}

TEST(WireProviders, ClientBatteryOverHttp) {
  WireServer server(std::make_shared<MockBackend>(), {{"roles", json::array()}, {"dim", 64}});
  const int port = server.start();
  auto p = http_providers("http://127.0.0.1:" + std::to_string(port));
  client_battery(*p);
}

TEST(WireProviders, LiveShimBatteryWhenConfigured) {
  const char* url = std::getenv("FINER_SHIM_URL");
  if (!url) GTEST_SKIP() << "FINER_SHIM_URL not set";
  httplib::Client c(url);
  auto res = c.Get("/healthz");
  ASSERT_TRUE(res);
  const auto health = json::parse(res->body);
  auto p = http_providers(url);
  EXPECT_EQ(p->embed_text("lotus").dim(), health.at("dim").get<std::size_t>());
}

TEST(WireServer, HealthAndErrors) {
  WireServer server(std::make_shared<MockBackend>(), {{"roles", {"vqa"}}, {"dim", 64}});
  const int port = server.start();
  httplib::Client c("127.0.0.1", port);
  auto h = c.Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  EXPECT_EQ(json::parse(h->body).at("dim"), 64);
  auto bad = c.Post("/v1/chat", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto missing = c.Post("/v1/embed", R"({"kind":"text"})", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 400);
  EXPECT_TRUE(json::parse(missing->body).contains("error"));
}

TEST(MockProviders, VqaAnswerTrimmedAndEmptyRejected) {
  MockScript s;
  s.vqa = {{"identify", "  Bird \n"}, {"blank", "   "}};
  auto p = mock_providers(s);
  const Bytes img = testkit::solid_png(0, 0, 255);
  EXPECT_EQ(p->vqa_answer(img, "identify"), "Bird");
  try {
    p->vqa_answer(img, "blank");
    FAIL();
  } catch (const EmptyAnswer& e) {
    EXPECT_NE(std::string(e.what()).find("provider returned empty"), std::string::npos);
  }
}

TEST(MockProviders, ColorSubstitution) {
  MockScript s;
  s.vqa = {{"colour", "a {color} bird"}};
  auto p = mock_providers(s);
  EXPECT_EQ(p->vqa_answer(testkit::solid_png(240, 240, 0), "colour"), "a yellow bird");
  EXPECT_EQ(p->vqa_answer(testkit::solid_png(0, 0, 0), "colour"), "a black bird");
}

TEST(MockProviders, HashEmbeddingsNeverCollide) {
  auto p = mock_providers();
  std::mt19937_64 rng(11);
  std::vector<Embedding> seen;
  std::set<std::string> strings;
  while (strings.size() < 1000) {
    std::string s(1 + rng() % 12, ' ');
    for (auto& ch : s) ch = static_cast<char>('a' + rng() % 26);
    if (strings.insert(s).second) seen.push_back(p->embed_text(s));
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    EXPECT_NEAR(seen[i].norm(), 1.0, 1e-6);
    for (std::size_t j = i + 1; j < seen.size(); ++j) ASSERT_LT(cosine(seen[i], seen[j]), 1.0 - 1e-9);
  }
}

TEST(MockProviders, ImageHashEmbeddingsDistinct) {
  auto p = mock_providers();
  std::vector<Embedding> v;
  for (int i = 0; i < 50; ++i) v.push_back(p->embed_image(testkit::noise_png(i)));
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_LT(cosine(v[i], v[j]), 1.0 - 1e-9);
  }
}

TEST(MockProviders, HashEmbeddingPinned) {
  // Pure function of (payload, seed, dim) across processes and platforms.
  const auto a = hash_embedding("lotus", 0, 4);
  const auto b = hash_embedding("lotus", 0, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, hash_embedding("lotus", 1, 4));
}

TEST(MockProviders, ScriptedEmbeddings) {
  MockScript s;
  s.dim = 2;
  s.text_embeddings["A"] = {3, 4};
  auto p = mock_providers(s);
  EXPECT_EQ(p->embed_text("A"), (Embedding{3, 4}));
}

TEST(MockProviders, ScriptRejectsWrongDim) {
  EXPECT_THROW(MockScript::from_json(json::parse(R"({"dim":3,"embeddings":{"text":{"A":[1,2]}}})")), InputError);
}

TEST(Providers, CacheServesRepeatsWithoutBackendCalls) {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  const Bytes img = testkit::solid_png(9, 9, 9);
  {
    auto p = mock_providers({}, cache);
    p->vqa_answer(img, "q");
    p->embed_text("x");
    p->llm_complete("prompt", 0.9, 3);
    EXPECT_EQ(p->backend_calls(), 3u);
    p->vqa_answer(img, "q");
    EXPECT_EQ(p->backend_calls(), 3u);
  }
  auto warm = mock_providers({}, cache);
  warm->vqa_answer(img, "q");
  warm->embed_text("x");
  warm->llm_complete("prompt", 0.9, 3);
  EXPECT_EQ(warm->backend_calls(), 0u);
}

TEST(Providers, LlmSamplesCachedPerIndex) {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  auto p = mock_providers({}, cache);
  const auto two = p->llm_complete("prompt", 0.9, 2);
  const auto four = p->llm_complete("prompt", 0.9, 4);
  EXPECT_EQ(p->backend_calls(), 2u);
  EXPECT_EQ(four[0], two[0]);
  EXPECT_EQ(four[1], two[1]);
  // Different temperature is a different cache entry.
  p->llm_complete("prompt", 0.5, 1);
  EXPECT_EQ(p->backend_calls(), 3u);
}

TEST(Providers, ForceBypassesCacheReads) {
  TempDir dir;
  auto cache = std::make_shared<ResponseCache>(dir.path());
  mock_providers({}, cache)->embed_text("x");
  auto forced = make_providers(std::make_shared<MockBackend>(), cache, false);
  forced->embed_text("x");
  EXPECT_EQ(forced->backend_calls(), 1u);
}

namespace {

class DriftingBackend : public Backend {
 public:
  json post(const std::string&, const json&) override {
    const std::size_t dim = ++calls_ == 1 ? 4 : 5;
    return {{"vector", std::vector<float>(dim, 1.0f)}, {"dim", dim}};
  }

 private:
  int calls_ = 0;
};

class SlowBackend : public Backend {
 public:
  json post(const std::string&, const json& body) override {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return {{"vector", {1.0f, static_cast<float>(body.at("payload").get<std::string>().size())}}, {"dim", 2}};
  }
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
};

}  // namespace

TEST(Providers, DimDriftDetected) {
  auto p = make_providers(std::make_shared<DriftingBackend>(), nullptr);
  p->embed_text("a");
  try {
    p->embed_text("b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("provider dim drift"), std::string::npos);
  }
}

TEST(Providers, InFlightNeverExceedsMaxConcurrency) {
  for (int cap : {1, 3}) {
    auto backend = std::make_shared<SlowBackend>();
    auto p = make_providers(backend, nullptr, true, cap);
    std::vector<std::jthread> threads;
    for (int t = 0; t < 12; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 4; ++i) p->embed_text(std::string(1 + t * 4 + i, 'x'));
      });
    }
    threads.clear();
    EXPECT_LE(backend->peak.load(), cap);
    EXPECT_LE(p->client(Role::text_embed).peak_in_flight(), cap);
    EXPECT_EQ(p->client(Role::text_embed).backend_calls(), 48u);
  }
}

TEST(HttpBackend, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 503;
      res.set_content("busy", "text/plain");
    } else {
      res.set_content(R"({"choices":["ok"]})", "application/json");
    }
  });
  HttpBackend b(endpoint_for(stub.url()), {3, std::chrono::milliseconds(1)});
  EXPECT_EQ(b.post(kChatRoute, kChatBody).at("choices")[0], "ok");
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpBackend, GivesUpAfterThreeRetries) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  HttpBackend b(endpoint_for(stub.url()), {3, std::chrono::milliseconds(1)});
  try {
    b.post(kChatRoute, kChatBody);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_EQ(hits.load(), 4);
}

TEST(HttpBackend, ClientErrorsAreTerminal) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 404;
  });
  HttpBackend b(endpoint_for(stub.url()), {3, std::chrono::milliseconds(1)});
  EXPECT_THROW(b.post(kChatRoute, kChatBody), TransportError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpBackend, RateLimitIsRetried) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 429;
    } else {
      res.set_content(R"({"choices":["ok"]})", "application/json");
    }
  });
  HttpBackend b(endpoint_for(stub.url()), {3, std::chrono::milliseconds(1)});
  EXPECT_NO_THROW(b.post(kChatRoute, kChatBody));
  EXPECT_EQ(hits.load(), 2);
}

TEST(HttpBackend, BackoffDoubles) {
  std::vector<std::chrono::steady_clock::time_point> at;
  std::mutex m;
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(m);
    at.push_back(std::chrono::steady_clock::now());
    res.status = 502;
  });
  HttpBackend b(endpoint_for(stub.url()), {3, std::chrono::milliseconds(40)});
  EXPECT_THROW(b.post(kChatRoute, kChatBody), TransportError);
  ASSERT_EQ(at.size(), 4u);
  const auto ms = [&](int i) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(at[i + 1] - at[i]).count();
  };
  EXPECT_GE(ms(0), 40);
  EXPECT_GE(ms(1), 80);
  EXPECT_GE(ms(2), 160);
}

TEST(HttpBackend, NonJsonBodyIsTerminal) {
  std::atomic<int> hits{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content("<html>", "text/html");
  });
  HttpBackend b(endpoint_for(stub.url()), {3, std::chrono::milliseconds(1)});
  EXPECT_THROW(b.post(kChatRoute, kChatBody), TransportError);
  EXPECT_EQ(hits.load(), 1);
}

TEST(HttpBackend, SendsBearerTokenAndPathPrefix) {
  std::string auth, path;
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    path = req.path;
    res.set_content(R"({"choices":["ok"]})", "application/json");
  });
  auto ep = endpoint_for(stub.url() + "/api/");
  ep.bearer_token = "s3cret";
  HttpBackend b(ep, {0, std::chrono::milliseconds(1)});
  b.post(kChatRoute, kChatBody);
  EXPECT_EQ(auth, "Bearer s3cret");
  EXPECT_EQ(path, "/api/v1/chat");
}

TEST(HttpBackend, ConnectionRefusedIsRetriedThenFails) {
  int port;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  HttpBackend b(endpoint_for("http://127.0.0.1:" + std::to_string(port)), {2, std::chrono::milliseconds(1)});
  try {
    b.post(kChatRoute, kChatBody);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.retryable());
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos);
  }
}

TEST(ProviderEndpoint, Validation) {
  ProviderEndpoint ep;
  ep.max_concurrency = 0;
  EXPECT_THROW(ep.validate(), Error);
  ep.max_concurrency = 1;
  ep.timeout = std::chrono::milliseconds(0);
  EXPECT_THROW(ep.validate(), Error);
  EXPECT_THROW(HttpBackend(endpoint_for("ftp://x")), InputError);
}
