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

#include "guidegen/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "guidegen/error.hpp"
#include "guidegen/text.hpp"

namespace guidegen {

using json = nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

FinishReason finish_reason_from_string(std::string_view s) {
  if (s == "length") return FinishReason::kLength;
  if (s == "stop" || s == "eos" || s == "end_turn" || s.empty()) return FinishReason::kStop;
  return FinishReason::kError;
}

void GenerationParams::check() const {
  if (!(temperature >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "temperature must be >= 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "top_p must be in (0, 1]");
  }
  if (max_new_tokens == 0) {
    throw Error(ErrorKind::kInvalidArgument, "max_new_tokens must be positive");
  }
  if (model_name.empty()) throw Error(ErrorKind::kInvalidArgument, "model name is empty");
}

ChatRequest::ChatRequest(std::vector<ChatMessage> messages, GenerationParams params)
    : messages_(std::move(messages)), params_(std::move(params)) {
  if (messages_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "chat request has no messages");
  }
  if (messages_.front().role == Role::kAssistant) {
    throw Error(ErrorKind::kInvalidArgument,
                "first chat message must have role system or user");
  }
  params_.check();
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  json canon;
  json msgs = json::array();
  for (const auto& m : messages_) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  canon["messages"] = std::move(msgs);
  canon["params"] = {{"model", params_.model_name},
                     {"temperature", params_.temperature},
                     {"top_p", params_.top_p},
                     {"max_new_tokens", params_.max_new_tokens}};
  key_ = sha256_hex(canon.dump());
}

ChatRequest ChatRequest::user(std::string prompt, GenerationParams params) {
  return ChatRequest({{Role::kUser, std::move(prompt)}}, std::move(params));
}

// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
  std::string url = options_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kConfig, "base_url must start with http:// or https://: " + url);
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  if (options_.max_attempts < 1) options_.max_attempts = 1;
}

std::size_t HttpBackend::requests_sent() const {
  std::lock_guard lock(mu_);
  return sent_;
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  json body;
  body["model"] = req.params().model_name;
  body["temperature"] = req.params().temperature;
  body["top_p"] = req.params().top_p;
  body["max_tokens"] = req.params().max_new_tokens;
  body["messages"] = json::array();
  for (const auto& m : req.messages()) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/v1/chat/completions";

  httplib::Client cli(scheme_host_port_);
  cli.set_connection_timeout(options_.timeout);
  cli.set_read_timeout(options_.timeout);
  cli.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    {
      std::lock_guard lock(mu_);
      ++sent_;
    }
    auto res = cli.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorKind::kTransport,
                  "HTTP " + std::to_string(res->status) + " from " + scheme_host_port_ +
                      path + ": " + res->body.substr(0, 512));
    }
    try {
      const json j = json::parse(res->body);
      const json& choice = j.at("choices").at(0);
      ChatResponse out;
      out.text = choice.at("message").at("content").get<std::string>();
      const auto& fr = choice.contains("finish_reason") ? choice["finish_reason"] : json();
      out.finish_reason =
          finish_reason_from_string(fr.is_string() ? fr.get<std::string>() : std::string());
      if (j.contains("usage") && j["usage"].is_object()) {
        Usage u;
        u.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
        u.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
        out.usage = u;
      }
      return out;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kTransport,
                  std::string("malformed endpoint response: ") + e.what());
    }
  }
  throw Error(ErrorKind::kTransport, "request failed after " +
                                         std::to_string(options_.max_attempts) +
                                         " attempts: " + last_error);
}

// ---------------------------------------------------------------------------

ReplayCache::ReplayCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      CacheEntry e;
      e.response_text = j.at("response_text").get<std::string>();
      e.finish_reason = finish_reason_from_string(j.value("finish_reason", std::string("stop")));
      // Later lines win, so re-recorded entries replace stale ones.
      entries_[j.at("request_key").get<std::string>()] = std::move(e);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, path_.string() + ":" + std::to_string(lineno) +
                                         ": bad replay cache line: " + e.what());
    }
  }
}

std::optional<CacheEntry> ReplayCache::lookup(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ReplayCache::store(const std::string& key, const CacheEntry& entry) {
  std::unique_lock lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot append to replay cache " + path_.string());
  const json j = {{"request_key", key},
                  {"response_text", entry.response_text},
                  {"finish_reason", to_string(entry.finish_reason)}};
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "error writing replay cache " + path_.string());
  entries_[key] = entry;
}

std::size_t ReplayCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(std::shared_ptr<const ReplayCache> cache)
    : cache_(std::move(cache)) {}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
  auto hit = cache_->lookup(req.key());
  if (!hit) {
    throw Error(ErrorKind::kNotFound, "replay cache miss for request_key " + req.key());
  }
  return {std::move(hit->response_text), hit->finish_reason, std::nullopt};
}

RecordBackend::RecordBackend(std::shared_ptr<ChatBackend> upstream,
                             std::shared_ptr<ReplayCache> cache)
    : upstream_(std::move(upstream)), cache_(std::move(cache)) {}

ChatResponse RecordBackend::complete(const ChatRequest& req) {
  ChatResponse resp = upstream_->complete(req);
  cache_->store(req.key(), {resp.text, resp.finish_reason});
  return resp;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, std::size_t parallelism,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, std::size_t parallelism)
    : backend_(std::move(backend)), parallelism_(parallelism) {
  if (!backend_) throw Error(ErrorKind::kInvalidArgument, "chat client needs a backend");
  if (parallelism_ == 0) throw Error(ErrorKind::kInvalidArgument, "parallelism must be >= 1");
}

ChatResponse ChatClient::complete(const ChatRequest& req) const {
  return backend_->complete(req);
}

std::vector<BatchSlot> ChatClient::complete_batch(std::span<const ChatRequest> reqs,
                                                  std::size_t parallelism) const {
  std::vector<BatchSlot> out(reqs.size());
  parallel_for(reqs.size(), parallelism == 0 ? parallelism_ : parallelism,
               [&](std::size_t i) {
                 try {
                   out[i].response = backend_->complete(reqs[i]);
                 } catch (const std::exception& e) {
                   out[i].error = e.what();
                 }
               });
  return out;
}

}  // namespace guidegen
