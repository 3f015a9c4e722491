#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dataless/http.hpp"

namespace dataless {

// A sentence embedding h(text). Values are kept as produced by the encoder,
// never normalized.
struct Embedding {
  std::vector<double> values;
  std::string model_id;

  std::size_t dim() const noexcept { return values.size(); }
};

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);

// u.v / (|u| |v|), clamped to [-1, 1]. Throws VectorError on a dimension
// mismatch or a zero-norm argument.
double cosine(std::span<const double> u, std::span<const double> v);
inline double cosine(const Embedding& u, const Embedding& v) {
  return cosine(u.values, v.values);
}

// Encoder interface. Implementations must be safe for concurrent calls and
// deterministic: the same text always maps to the same vector within a run.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual const std::string& model_id() const = 0;
  // 0 while unknown (remote providers learn it from the first reply).
  virtual std::size_t dim() const = 0;
  // One vector per input, in input order.
  virtual std::vector<std::vector<double>> embed(
      std::span<const std::string> texts) = 0;
};

// Seeded feature-hashing bag of words: each lowercase alphanumeric token adds
// +1 or -1 at a hashed coordinate. Order-free and fully determined by
// (text, dim, seed).
class HashingEmbedder final : public EmbeddingProvider {
 public:
  // Throws InputError when dim < 8.
  HashingEmbedder(std::size_t dim, std::uint64_t seed);

  const std::string& model_id() const override { return model_id_; }
  std::size_t dim() const override { return dim_; }
  std::vector<std::vector<double>> embed(
      std::span<const std::string> texts) override;

  std::vector<double> embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::string model_id_;
};

std::unique_ptr<EmbeddingProvider> make_test_embedder(std::size_t dim,
                                                      std::uint64_t seed);

// Offline provider: every request is a miss the cache could not serve.
class CacheOnlyProvider final : public EmbeddingProvider {
 public:
  explicit CacheOnlyProvider(std::string model_id, std::size_t dim = 0)
      : model_id_(std::move(model_id)), dim_(dim) {}

  const std::string& model_id() const override { return model_id_; }
  std::size_t dim() const override { return dim_; }
  // Always throws ProviderError naming the first missing text.
  std::vector<std::vector<double>> embed(
      std::span<const std::string> texts) override;

 private:
  std::string model_id_;
  std::size_t dim_;
};

// OpenAI-style embeddings endpoint: POST {base_url}/embeddings with
// {"model", "input": [...]}, reply {"data": [{"index", "embedding"}]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpSettings settings, std::string model,
                        std::size_t batch_size = 64, std::size_t dim = 0);

  const std::string& model_id() const override { return model_; }
  std::size_t dim() const override;
  std::vector<std::vector<double>> embed(
      std::span<const std::string> texts) override;

 private:
  std::vector<std::vector<double>> embed_batch(
      std::span<const std::string> texts);

  HttpSettings settings_;
  std::string model_;
  std::size_t batch_size_;
  mutable std::mutex dim_mutex_;
  std::size_t dim_;
};

// Persistent JSONL store {"model", "sha256", "dim", "vector"} keyed by
// (model, SHA-256 of the UTF-8 text). Concurrent lookups, single-writer
// appends.
class EmbeddingCache {
 public:
  // In-memory only.
  EmbeddingCache() = default;
  // Loads `path` when it exists; new entries are appended to it.
  explicit EmbeddingCache(std::string path);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<std::vector<double>> lookup(const std::string& model,
                                            const std::string& sha) const;
  // Dimension recorded for a model, if any entry exists.
  std::optional<std::size_t> model_dim(const std::string& model) const;

  // Adds entries and appends them to the backing file. Throws
  // CorruptionError if a vector's dimension disagrees with the model's.
  void insert(const std::string& model,
              std::span<const std::pair<std::string, std::vector<double>>>
                  entries);

  std::size_t size() const;
  const std::string& path() const noexcept { return path_; }

 private:
  using Key = std::pair<std::string, std::string>;

  std::string path_;
  mutable std::shared_mutex mutex_;
  std::map<Key, std::vector<double>> entries_;
  std::map<std::string, std::size_t> dims_;
};

struct EmbedOptions {
  std::size_t batch_size = 64;
};

struct EmbedStats {
  std::size_t requested = 0;
  std::size_t cache_hits = 0;
  std::size_t provider_calls = 0;
  std::size_t provider_texts = 0;
};

// Cache-backed batch embedding. Hits are served from the cache, distinct
// misses are sent to the provider in batches of options.batch_size and
// persisted. Output order matches `texts`.
std::vector<Embedding> embed_all(EmbeddingProvider& provider,
                                 EmbeddingCache& cache,
                                 std::span<const std::string> texts,
                                 const EmbedOptions& options = {},
                                 EmbedStats* stats = nullptr);

}  // namespace dataless
