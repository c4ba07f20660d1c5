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

// Chat-completion access over the de-facto /v1/chat/completions protocol,
// with a JSONL record/replay cache for offline, deterministic runs.

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace guidegen {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
};

// Defaults follow the generation settings used for dataset construction.
struct GenerationParams {
  double temperature = 0.7;
  double top_p = 0.95;
  std::size_t max_new_tokens = 1024;
  std::string model_name = "meta-llama/Llama-3.1-70B-Instruct";

  void check() const;
};

class ChatRequest {
 public:
  // Throws Error(kInvalidArgument) on an empty message list, a leading
  // assistant message, or out-of-range parameters.
  ChatRequest(std::vector<ChatMessage> messages, GenerationParams params);

  static ChatRequest user(std::string prompt, GenerationParams params = {});

  const std::vector<ChatMessage>& messages() const { return messages_; }
  const GenerationParams& params() const { return params_; }

  // SHA-256 of the canonical JSON serialization of messages and params.
  const std::string& key() const { return key_; }

 private:
  std::vector<ChatMessage> messages_;
  GenerationParams params_;
  std::string key_;
};

enum class FinishReason { kStop, kLength, kError };

std::string_view to_string(FinishReason reason);
FinishReason finish_reason_from_string(std::string_view s);

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  std::optional<Usage> usage;

  bool truncated() const { return finish_reason == FinishReason::kLength; }
};

// A completion source. Implementations must be safe to call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

struct HttpOptions {
  std::string base_url = "http://localhost:8000";
  std::string api_key;  // sent as a bearer token when non-empty
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds timeout{300000};
};

// POSTs to <base_url>/v1/chat/completions. Transport errors, 5xx and 429
// are retried with exponential backoff; other 4xx fail immediately.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpOptions options);
  ChatResponse complete(const ChatRequest& req) override;

  // Number of HTTP requests actually sent, retries included.
  std::size_t requests_sent() const;

 private:
  HttpOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  mutable std::mutex mu_;
  std::size_t sent_ = 0;
};

struct CacheEntry {
  std::string response_text;
  FinishReason finish_reason = FinishReason::kStop;
};

// request_key -> response map backed by an append-only JSONL file. Reads are
// concurrent; writes are serialized and flushed per entry.
class ReplayCache {
 public:
  // Loads `path` if it exists. A missing file is an empty cache.
  explicit ReplayCache(std::filesystem::path path);

  std::optional<CacheEntry> lookup(const std::string& key) const;
  void store(const std::string& key, const CacheEntry& entry);
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, CacheEntry> entries_;
};

// Serves responses from the cache only; never touches the network.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<const ReplayCache> cache);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  std::shared_ptr<const ReplayCache> cache_;
};

// Forwards to an upstream backend and persists every successful response.
class RecordBackend : public ChatBackend {
 public:
  RecordBackend(std::shared_ptr<ChatBackend> upstream,
                std::shared_ptr<ReplayCache> cache);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  std::shared_ptr<ChatBackend> upstream_;
  std::shared_ptr<ReplayCache> cache_;
};

// Adapts a callable, mainly for tests and fixture generation.
class FunctionBackend : public ChatBackend {
 public:
  using Fn = std::function<ChatResponse(const ChatRequest&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  ChatResponse complete(const ChatRequest& req) override { return fn_(req); }

 private:
  Fn fn_;
};

struct BatchSlot {
  std::optional<ChatResponse> response;
  std::string error;  // set iff response is empty

  bool ok() const { return response.has_value(); }
};

// Runs fn(i) for i in [0, n) on at most `parallelism` threads.
void parallel_for(std::size_t n, std::size_t parallelism,
                  const std::function<void(std::size_t)>& fn);

class ChatClient {
 public:
  explicit ChatClient(std::shared_ptr<ChatBackend> backend, std::size_t parallelism = 32);

  ChatResponse complete(const ChatRequest& req) const;

  // Output slot i answers request i. At most `parallelism` requests are in
  // flight (0 selects the client default); a failed slot never aborts the
  // rest of the batch.
  std::vector<BatchSlot> complete_batch(std::span<const ChatRequest> reqs,
                                        std::size_t parallelism = 0) const;

  std::size_t parallelism() const { return parallelism_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  std::size_t parallelism_;
};

}  // namespace guidegen
