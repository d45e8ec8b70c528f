#pragma once

// Abstract embeddings. Two interchangeable modes behind one call:
//
//   Remote — POST {input: [texts], model} to an embeddings endpoint and read
//            {data: [{index, embedding}]}, with bounded in-flight requests
//            and exponential-backoff retries on rate-limit/server errors.
//   Local  — deterministic hash-projection embedder for offline runs: each
//            token contributes a seeded +/-1 pattern, summed and normalized.
//
// Texts are truncated to the configured character budget before dispatch in
// both modes.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "tip/errors.hpp"
#include "tip/rng.hpp"

namespace tip {

enum class EmbedMode { Local, Remote };

struct RetryPolicy {
  int max_attempts = 5;
  int base_backoff_ms = 100;
};

struct EmbedderConfig {
  EmbedMode mode = EmbedMode::Local;
  std::string endpoint_url = "http://127.0.0.1:8080/v1/embeddings";
  std::string model_name = "text-embedding-ada-002";
  std::string token_env = "EMBED_API_TOKEN";  // bearer token variable, Remote mode
  int dimension = 1536;
  int max_chars = 30000;
  int max_in_flight = 4;
  int request_batch = 16;  // texts per request
  RetryPolicy retry;
  std::uint64_t seed = 0;  // Local mode
};

using EmbeddingVector = std::vector<double>;

/// Cut at the last whitespace boundary at or before the budget; hard cut when
/// the prefix has no whitespace. Idempotent.
inline std::string truncate_abstract(std::string_view text, std::size_t max_chars) {
  if (max_chars == 0) throw ConfigError("truncate_abstract: max_chars must be positive");
  if (text.size() <= max_chars) return std::string(text);
  const std::string_view prefix = text.substr(0, max_chars);
  const std::size_t ws = prefix.find_last_of(" \t\n\r\f\v");
  if (ws == std::string_view::npos) return std::string(prefix);
  return std::string(prefix.substr(0, ws));
}

/// Deterministic local embedding: lowercase alphanumeric tokens, each hashed
/// with the seed to a +/-1 sign pattern over the dimension, summed over
/// tokens, L2-normalized. Empty text maps to the zero vector.
inline EmbeddingVector local_embed(std::string_view text, int dimension, std::uint64_t seed) {
  if (dimension < 1) throw ConfigError("local_embed: dimension must be >= 1");
  EmbeddingVector acc(static_cast<std::size_t>(dimension), 0.0);
  std::string token;
  auto flush = [&acc, &token, dimension, seed] {
    if (token.empty()) return;
    std::uint64_t state = fnv1a64(token) ^ (seed + 0x9e3779b97f4a7c15ULL);
    int d = 0;
    while (d < dimension) {
      std::uint64_t bits = splitmix64(state);
      for (int b = 0; b < 64 && d < dimension; ++b, ++d)
        acc[static_cast<std::size_t>(d)] += (bits >> b) & 1 ? 1.0 : -1.0;
    }
    token.clear();
  };
  for (char ch : text) {
    const bool alnum = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9');
    if (alnum)
      token.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    else
      flush();
  }
  flush();
  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : acc) v *= inv;
  }
  return acc;
}

namespace embed_detail {

struct SplitUrl {
  std::string base;  // scheme://host:port
  std::string path;
};

inline SplitUrl split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace embed_detail

/// Embed a batch of texts. Output order always matches input order; at most
/// max_in_flight requests are outstanding in Remote mode.
inline std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts,
                                                const EmbedderConfig& cfg) {
  if (cfg.max_chars <= 0) throw ConfigError("embedder: max_chars must be positive");
  if (cfg.dimension <= 0) throw ConfigError("embedder: dimension must be positive");
  if (cfg.max_in_flight < 1) throw ConfigError("embedder: max_in_flight must be >= 1");
  if (cfg.request_batch < 1) throw ConfigError("embedder: request_batch must be >= 1");

  std::vector<EmbeddingVector> out(texts.size());
  if (texts.empty()) return out;

  std::vector<std::string> prepared;
  prepared.reserve(texts.size());
  for (const auto& t : texts)
    prepared.push_back(truncate_abstract(t, static_cast<std::size_t>(cfg.max_chars)));

  if (cfg.mode == EmbedMode::Local) {
    for (std::size_t i = 0; i < prepared.size(); ++i)
      out[i] = local_embed(prepared[i], cfg.dimension, cfg.seed);
    return out;
  }

  const char* token = std::getenv(cfg.token_env.c_str());
  if (token == nullptr || *token == '\0')
    throw ConfigError("embedder: auth token environment variable not set: " + cfg.token_env);
  const auto url = embed_detail::split_endpoint(cfg.endpoint_url);

  const std::size_t batch = static_cast<std::size_t>(cfg.request_batch);
  const std::size_t n_batches = (prepared.size() + batch - 1) / batch;
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_batch = n_batches;
  std::exception_ptr err;

  auto record_error = [&](std::size_t b, std::exception_ptr e) {
    std::lock_guard<std::mutex> lock(err_mutex);
    if (b < err_batch) {
      err_batch = b;
      err = e;
    }
  };

  auto worker = [&] {
    httplib::Client client(url.base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);
    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + token}};
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_batches) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (err) return;
      }
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(prepared.size(), lo + batch);
      nlohmann::json body;
      body["input"] = std::vector<std::string>(prepared.begin() + static_cast<std::ptrdiff_t>(lo),
                                               prepared.begin() + static_cast<std::ptrdiff_t>(hi));
      body["model"] = cfg.model_name;
      const std::string payload = body.dump();

      try {
        for (int attempt = 1;; ++attempt) {
          auto res = client.Post(url.path, headers, payload, "application/json");
          const int status = res ? res->status : 0;
          if (res && status == 200) {
            nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("data") || !reply["data"].is_array())
              throw EmbeddingServiceError(status, "malformed response body");
            for (const auto& item : reply["data"]) {
              const std::size_t idx = item.at("index").get<std::size_t>();
              if (idx >= hi - lo) throw EmbeddingServiceError(status, "response index out of range");
              EmbeddingVector v = item.at("embedding").get<EmbeddingVector>();
              if (v.size() != static_cast<std::size_t>(cfg.dimension))
                throw DimensionMismatch(static_cast<std::size_t>(cfg.dimension), v.size());
              out[lo + idx] = std::move(v);
            }
            break;
          }
          const bool retryable = !res || embed_detail::retryable_status(status);
          if (!retryable || attempt >= cfg.retry.max_attempts)
            throw EmbeddingServiceError(status, res ? res->body : "connection failed");
          const auto delay = std::chrono::milliseconds(
              static_cast<long long>(cfg.retry.base_backoff_ms) << (attempt - 1));
          std::this_thread::sleep_for(delay);
        }
      } catch (...) {
        record_error(b, std::current_exception());
        return;
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_in_flight), n_batches);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

/// Content-addressed embedding cache, persisted as one JSON object per line.
/// Keys combine the text hash, model name and dimension, so switching either
/// invalidates naturally.
class EmbeddingCache {
 public:
  static std::string key_for(std::string_view text, const std::string& model, int dimension) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return model + "|" + std::to_string(dimension) + "|" + hex;
  }

  void load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return;  // absent cache is an empty cache
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("key") || !j.contains("v")) continue;
      entries_[j["key"].get<std::string>()] = j["v"].get<EmbeddingVector>();
    }
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embedding cache: " + path.string());
    for (const auto& [key, vec] : entries_) {
      nlohmann::json j;
      j["key"] = key;
      j["v"] = vec;
      out << j.dump() << '\n';
    }
  }

  std::optional<EmbeddingVector> find(std::string_view text, const std::string& model,
                                      int dimension) const {
    const auto it = entries_.find(key_for(text, model, dimension));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(std::string_view text, const std::string& model, int dimension, EmbeddingVector v) {
    entries_[key_for(text, model, dimension)] = std::move(v);
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, EmbeddingVector> entries_;
};

/// embed_batch with cache fill: only cache misses are dispatched.
inline std::vector<EmbeddingVector> embed_batch_cached(const std::vector<std::string>& texts,
                                                       const EmbedderConfig& cfg,
                                                       EmbeddingCache& cache) {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> misses;
  std::vector<std::size_t> miss_at;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string prepared =
        truncate_abstract(texts[i], static_cast<std::size_t>(cfg.max_chars));
    if (auto hit = cache.find(prepared, cfg.model_name, cfg.dimension)) {
      out[i] = std::move(*hit);
    } else {
      misses.push_back(prepared);
      miss_at.push_back(i);
    }
  }
  if (!misses.empty()) {
    auto produced = embed_batch(misses, cfg);
    for (std::size_t m = 0; m < misses.size(); ++m) {
      cache.put(misses[m], cfg.model_name, cfg.dimension, produced[m]);
      out[miss_at[m]] = std::move(produced[m]);
    }
  }
  return out;
}

}  // namespace tip
