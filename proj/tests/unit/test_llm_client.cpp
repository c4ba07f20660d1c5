// Copyright 2026 The guidegen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "guidegen/error.hpp"
#include "guidegen/llm_client.hpp"
#include "testing.hpp"

using namespace guidegen;
using json = nlohmann::json;

namespace {

// Local chat-completions endpoint whose behaviour is set per test.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const json& body, httplib::Response& res)>;

  explicit FakeEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      const int now = ++active_;
      int prev = max_active_.load();
      while (now > prev && !max_active_.compare_exchange_weak(prev, now)) {
      }
      handler_(json::parse(req.body), res);
      --active_;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits() const { return hits_; }
  int max_active() const { return max_active_; }
  std::string last_auth() const { return last_auth_; }

  static void reply(httplib::Response& res, const std::string& text,
                    const std::string& finish = "stop") {
    const json body = {
        {"choices", {{{"message", {{"role", "assistant"}, {"content", text}}},
                      {"finish_reason", finish}}}},
        {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 5}}}};
    res.set_content(body.dump(), "application/json");
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::atomic<int> active_{0};
  std::atomic<int> max_active_{0};
  std::string last_auth_;
};

HttpOptions fast(const std::string& url) {
  HttpOptions o;
  o.base_url = url;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(10);
  return o;
}

std::string last_user_message(const json& body) {
  return body.at("messages").back().at("content").get<std::string>();
}

}  // namespace

TEST_CASE("generation defaults") {
  const GenerationParams p;
  CHECK(p.temperature == 0.7);
  CHECK(p.top_p == 0.95);
  CHECK(p.max_new_tokens == 1024);
}

TEST_CASE("request validation") {
  CHECK_THROWS_AS(ChatRequest({}, {}), Error);
  CHECK_THROWS_AS(ChatRequest({{Role::kAssistant, "hi"}}, {}), Error);
  CHECK_NOTHROW(ChatRequest({{Role::kSystem, "s"}, {Role::kUser, "u"}}, {}));
  GenerationParams bad;
  bad.top_p = 0.0;
  CHECK_THROWS_AS(ChatRequest::user("x", bad), Error);
  bad = {};
  bad.temperature = -0.1;
  CHECK_THROWS_AS(ChatRequest::user("x", bad), Error);
}

TEST_CASE("request key is a stable content hash") {
  const auto a = ChatRequest::user("Summarize this.");
  const auto b = ChatRequest::user("Summarize this.");
  CHECK(a.key() == b.key());
  CHECK(a.key().size() == 64);
  GenerationParams p;
  p.temperature = 0.2;
  CHECK(ChatRequest::user("Summarize this.", p).key() != a.key());
  CHECK(ChatRequest::user("Summarize that.").key() != a.key());
  CHECK(ChatRequest({{Role::kSystem, "Summarize this."}}, {}).key() != a.key());
  const std::string frozen = a.key() + "\n";
  CHECK(frozen == ggtest::golden("request_key.txt", frozen));
}

TEST_CASE("finish reasons") {
  CHECK(finish_reason_from_string("stop") == FinishReason::kStop);
  CHECK(finish_reason_from_string("") == FinishReason::kStop);
  CHECK(finish_reason_from_string("length") == FinishReason::kLength);
  CHECK(finish_reason_from_string("content_filter") == FinishReason::kError);
  ChatResponse r;
  r.finish_reason = FinishReason::kLength;
  CHECK(r.truncated());
}

TEST_CASE("http: wire format and bearer token") {
  json seen;
  FakeEndpoint ep([&](const json& body, httplib::Response& res) {
    seen = body;
    FakeEndpoint::reply(res, "echo: " + last_user_message(body));
  });
  HttpOptions o = fast(ep.url());
  o.api_key = "sk-test";
  HttpBackend http(o);
  const ChatResponse r = http.complete(ChatRequest::user("hello"));
  CHECK(r.text == "echo: hello");
  CHECK(r.finish_reason == FinishReason::kStop);
  REQUIRE(r.usage.has_value());
  CHECK(r.usage->completion_tokens == 5);
  CHECK(seen["model"] == GenerationParams{}.model_name);
  CHECK(seen["temperature"] == 0.7);
  CHECK(seen["top_p"] == 0.95);
  CHECK(seen["max_tokens"] == 1024);
  CHECK(seen["messages"] == json::array({{{"role", "user"}, {"content", "hello"}}}));
  CHECK(ep.last_auth() == "Bearer sk-test");
}

TEST_CASE("http: retries 5xx and 429, then succeeds") {
  std::atomic<int> n{0};
  FakeEndpoint ep([&](const json&, httplib::Response& res) {
    const int i = n++;
    if (i == 0) {
      res.status = 503;
    } else if (i == 1) {
      res.status = 429;
    } else {
      FakeEndpoint::reply(res, "ok");
    }
  });
  HttpBackend http(fast(ep.url()));
  CHECK(http.complete(ChatRequest::user("x")).text == "ok");
  CHECK(ep.hits() == 3);
  CHECK(http.requests_sent() == 3);
}

TEST_CASE("http: gives up after three attempts") {
  FakeEndpoint ep([](const json&, httplib::Response& res) { res.status = 500; });
  HttpBackend http(fast(ep.url()));
  try {
    http.complete(ChatRequest::user("x"));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTransport);
  }
  CHECK(ep.hits() == 3);
}

TEST_CASE("http: other 4xx are not retried") {
  FakeEndpoint ep([](const json&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  HttpBackend http(fast(ep.url()));
  CHECK_THROWS_AS(http.complete(ChatRequest::user("x")), Error);
  CHECK(ep.hits() == 1);
}

TEST_CASE("http: malformed response") {
  FakeEndpoint ep([](const json&, httplib::Response& res) {
    res.set_content(R"({"choices": []})", "application/json");
  });
  HttpBackend http(fast(ep.url()));
  try {
    http.complete(ChatRequest::user("x"));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("malformed") != std::string::npos);
  }
  CHECK(ep.hits() == 1);
}

TEST_CASE("http: connection refused is retried then reported") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  HttpOptions o = fast("http://127.0.0.1:" + std::to_string(port));
  o.timeout = std::chrono::milliseconds(200);
  HttpBackend http(o);
  CHECK_THROWS_AS(http.complete(ChatRequest::user("x")), Error);
  CHECK(http.requests_sent() == 3);
}

TEST_CASE("http: truncation is passed through") {
  FakeEndpoint ep([](const json&, httplib::Response& res) {
    FakeEndpoint::reply(res, "partial", "length");
  });
  HttpBackend http(fast(ep.url()));
  CHECK(http.complete(ChatRequest::user("x")).truncated());
}

TEST_CASE("batch: aligned output and bounded in-flight requests") {
  FakeEndpoint ep([](const json& body, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    FakeEndpoint::reply(res, "re:" + last_user_message(body));
  });
  ChatClient client(std::make_shared<HttpBackend>(fast(ep.url())), 3);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 12; ++i) reqs.push_back(ChatRequest::user("q" + std::to_string(i)));
  const auto out = client.complete_batch(reqs);
  REQUIRE(out.size() == 12);
  for (int i = 0; i < 12; ++i) {
    REQUIRE(out[i].ok());
    CHECK(out[i].response->text == "re:q" + std::to_string(i));
  }
  CHECK(ep.max_active() <= 3);
  CHECK(ep.max_active() >= 2);
}

TEST_CASE("batch: 32 requests at parallelism 32") {
  std::atomic<int> active{0}, peak{0};
  auto fn = std::make_shared<FunctionBackend>([&](const ChatRequest& r) {
    const int now = ++active;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return ChatResponse{r.messages().back().content, FinishReason::kStop, std::nullopt};
  });
  ChatClient client(fn, 32);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 32; ++i) reqs.push_back(ChatRequest::user(std::to_string(i)));
  const auto out = client.complete_batch(reqs);
  REQUIRE(out.size() == 32);
  for (int i = 0; i < 32; ++i) CHECK(out[i].response->text == std::to_string(i));
  CHECK(peak <= 32);
  CHECK(client.complete_batch({}).empty());
  CHECK(client.complete_batch(reqs, 4).size() == 32);
}

TEST_CASE("record then replay is byte-identical and offline") {
  ggtest::TempDir tmp;
  const auto cache_path = tmp / "cache.jsonl";
  FakeEndpoint ep([](const json& body, httplib::Response& res) {
    FakeEndpoint::reply(res, "answer to " + last_user_message(body) + " \xc3\xa9\n\"q\"",
                        last_user_message(body) == "cut" ? "length" : "stop");
  });
  std::vector<ChatRequest> reqs = {ChatRequest::user("a"), ChatRequest::user("b"),
                                   ChatRequest::user("cut")};
  std::vector<ChatResponse> recorded;
  {
    auto cache = std::make_shared<ReplayCache>(cache_path);
    ChatClient client(std::make_shared<RecordBackend>(
                          std::make_shared<HttpBackend>(fast(ep.url())), cache),
                      2);
    for (const auto& r : reqs) recorded.push_back(client.complete(r));
    CHECK(cache->size() == 3);
  }
  const int hits = ep.hits();
  auto loaded = std::make_shared<ReplayCache>(cache_path);
  CHECK(loaded->size() == 3);
  ChatClient replay(std::make_shared<ReplayBackend>(loaded), 2);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const ChatResponse r = replay.complete(reqs[i]);
    CHECK(r.text == recorded[i].text);
    CHECK(r.finish_reason == recorded[i].finish_reason);
  }
  CHECK(ep.hits() == hits);
  CHECK(replay.complete(reqs[2]).truncated());

  for (const auto& line : {std::string(guidegen::read_file(cache_path))}) {
    const json first = json::parse(line.substr(0, line.find('\n')));
    CHECK(first.contains("request_key"));
    CHECK(first.contains("response_text"));
    CHECK(first.contains("finish_reason"));
  }
}

TEST_CASE("replay: misses name the key and stay per slot") {
  ggtest::TempDir tmp;
  auto cache = std::make_shared<ReplayCache>(tmp / "c.jsonl");
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 5; ++i) {
    reqs.push_back(ChatRequest::user("p" + std::to_string(i)));
    if (i != 3) cache->store(reqs.back().key(), {"r" + std::to_string(i), FinishReason::kStop});
  }
  ChatClient client(std::make_shared<ReplayBackend>(cache), 2);
  const auto out = client.complete_batch(reqs);
  for (int i = 0; i < 5; ++i) {
    if (i == 3) {
      CHECK_FALSE(out[i].ok());
      CHECK(out[i].error.find(reqs[3].key()) != std::string::npos);
    } else {
      REQUIRE(out[i].ok());
      CHECK(out[i].response->text == "r" + std::to_string(i));
    }
  }
  try {
    client.complete(reqs[3]);
    FAIL("expected a miss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotFound);
  }
}

TEST_CASE("replay cache: later lines win and corrupt lines are rejected") {
  ggtest::TempDir tmp;
  const auto p = tmp / "c.jsonl";
  guidegen::write_file(p,
                       R"({"request_key":"k","response_text":"old","finish_reason":"stop"})"
                       "\n"
                       R"({"request_key":"k","response_text":"new","finish_reason":"length"})"
                       "\n");
  ReplayCache c(p);
  CHECK(c.size() == 1);
  CHECK(c.lookup("k")->response_text == "new");
  CHECK(c.lookup("k")->finish_reason == FinishReason::kLength);
  CHECK_FALSE(c.lookup("other").has_value());

  guidegen::write_file(p, "{not json\n");
  CHECK_THROWS_AS(ReplayCache{p}, Error);
}
