#include "dataless/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw VectorError("dimension mismatch: " + std::to_string(u.size()) +
                      " vs " + std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw VectorError("cosine: dimension mismatch " + std::to_string(u.size()) +
                      " vs " + std::to_string(v.size()));
  }
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw VectorError("cosine: zero-norm vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim),
      seed_(seed),
      model_id_("hash-bow-d" + std::to_string(dim) + "-s" +
                std::to_string(seed)) {
  if (dim < 8) throw InputError("test embedder needs dim >= 8");
}

std::vector<double> HashingEmbedder::embed_one(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  const std::uint64_t salt = mix64(seed_ ^ 0x5bd1e9955bd1e995ULL);
  for (const auto& token : alnum_words(text)) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : token) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h = mix64(h ^ salt);
    const std::size_t index = static_cast<std::size_t>(h % dim_);
    const double sign = (mix64(h + 0x9e3779b97f4a7c15ULL) >> 63) ? -1.0 : 1.0;
    v[index] += sign;
  }
  return v;
}

std::vector<std::vector<double>> HashingEmbedder::embed(
    std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::unique_ptr<EmbeddingProvider> make_test_embedder(std::size_t dim,
                                                      std::uint64_t seed) {
  return std::make_unique<HashingEmbedder>(dim, seed);
}

std::vector<std::vector<double>> CacheOnlyProvider::embed(
    std::span<const std::string> texts) {
  if (texts.empty()) return {};
  throw ProviderError("no embedding cached for model '" + model_id_ +
                      "' and text \"" + texts.front() + "\" (" +
                      std::to_string(texts.size()) +
                      " misses; run `embed` with a live provider)");
}

// ---------------------------------------------------------------------------

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpSettings settings,
                                             std::string model,
                                             std::size_t batch_size,
                                             std::size_t dim)
    : settings_(std::move(settings)),
      model_(std::move(model)),
      batch_size_(std::max<std::size_t>(1, batch_size)),
      dim_(dim) {}

std::size_t HttpEmbeddingProvider::dim() const {
  std::lock_guard<std::mutex> lock(dim_mutex_);
  return dim_;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(
    std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += batch_size_) {
    auto batch = embed_batch(
        texts.subspan(i, std::min(batch_size_, texts.size() - i)));
    for (auto& v : batch) out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed_batch(
    std::span<const std::string> texts) {
  nlohmann::json body;
  body["model"] = model_;
  body["input"] = nlohmann::json::array();
  for (const auto& t : texts) body["input"].push_back(t);

  const auto reply = post_json(settings_, "/embeddings", body);
  auto data = reply.find("data");
  if (data == reply.end() || !data->is_array() ||
      data->size() != texts.size()) {
    throw ProviderError("embeddings reply must hold one 'data' entry per input");
  }
  std::vector<std::vector<double>> out(texts.size());
  std::vector<bool> filled(texts.size(), false);
  for (const auto& item : *data) {
    if (!item.contains("index") || !item["index"].is_number_integer() ||
        !item.contains("embedding") || !item["embedding"].is_array()) {
      throw ProviderError("malformed embeddings reply entry");
    }
    const auto index = item["index"].get<long long>();
    if (index < 0 || static_cast<std::size_t>(index) >= texts.size() ||
        filled[static_cast<std::size_t>(index)]) {
      throw ProviderError("embeddings reply has a bad or repeated index");
    }
    auto& v = out[static_cast<std::size_t>(index)];
    v = item["embedding"].get<std::vector<double>>();
    filled[static_cast<std::size_t>(index)] = true;
  }
  std::lock_guard<std::mutex> lock(dim_mutex_);
  for (const auto& v : out) {
    if (v.empty()) throw ProviderError("empty embedding in reply");
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) {
      throw ProviderError("embedding dimension changed from " +
                          std::to_string(dim_) + " to " +
                          std::to_string(v.size()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(std::string path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  for_each_jsonl_file(path_, [&](const nlohmann::json& obj, std::size_t line) {
    const auto model = require_string(obj, "model", path_, line);
    const auto sha = require_string(obj, "sha256", path_, line);
    if (!obj.contains("dim") || !obj["dim"].is_number_unsigned() ||
        !obj.contains("vector") || !obj["vector"].is_array()) {
      throw MalformedRecordError("cache entry needs 'dim' and 'vector'", path_,
                                 line);
    }
    const auto dim = obj["dim"].get<std::size_t>();
    auto vec = obj["vector"].get<std::vector<double>>();
    if (dim == 0 || vec.size() != dim) {
      throw CorruptionError(path_ + ":" + std::to_string(line) +
                            ": vector length differs from 'dim'");
    }
    for (double x : vec) {
      if (!std::isfinite(x)) {
        throw CorruptionError(path_ + ":" + std::to_string(line) +
                              ": non-finite value");
      }
    }
    auto [it, fresh] = dims_.emplace(model, dim);
    if (!fresh && it->second != dim) {
      throw CorruptionError(path_ + ":" + std::to_string(line) + ": model '" +
                            model + "' mixes dims " +
                            std::to_string(it->second) + " and " +
                            std::to_string(dim));
    }
    entries_[{model, sha}] = std::move(vec);
  });
}

std::optional<std::vector<double>> EmbeddingCache::lookup(
    const std::string& model, const std::string& sha) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({model, sha});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> EmbeddingCache::model_dim(
    const std::string& model) const {
  std::shared_lock lock(mutex_);
  auto it = dims_.find(model);
  if (it == dims_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void EmbeddingCache::insert(
    const std::string& model,
    std::span<const std::pair<std::string, std::vector<double>>> entries) {
  std::unique_lock lock(mutex_);
  if (entries.empty()) return;
  auto known = dims_.find(model);
  const std::size_t expected =
      known != dims_.end() ? known->second : entries.front().second.size();
  for (const auto& [sha, vec] : entries) {
    if (vec.size() != expected || vec.empty()) {
      throw CorruptionError("cache holds dim " + std::to_string(expected) +
                            " for model '" + model + "', got " +
                            std::to_string(vec.size()));
    }
  }
  std::ofstream out;
  if (!path_.empty()) {
    out = open_for_append(path_);
    if (!out) throw InputError("cannot append to " + path_);
  }
  for (const auto& [sha, vec] : entries) {
    dims_.emplace(model, vec.size());
    if (!entries_.emplace(Key{model, sha}, vec).second) continue;
    if (out.is_open()) {
      nlohmann::json obj;
      obj["model"] = model;
      obj["sha256"] = sha;
      obj["dim"] = vec.size();
      obj["vector"] = vec;
      out << obj.dump() << '\n';
    }
  }
  if (out.is_open() && !out) throw InputError("failed writing " + path_);
}

// ---------------------------------------------------------------------------

std::vector<Embedding> embed_all(EmbeddingProvider& provider,
                                 EmbeddingCache& cache,
                                 std::span<const std::string> texts,
                                 const EmbedOptions& options,
                                 EmbedStats* stats) {
  const std::string& model = provider.model_id();
  if (provider.dim() != 0) {
    if (auto cached = cache.model_dim(model); cached && *cached != provider.dim()) {
      throw CorruptionError("embedding cache holds dim " +
                            std::to_string(*cached) + " for model '" + model +
                            "' but the provider reports " +
                            std::to_string(provider.dim()));
    }
  }

  EmbedStats local;
  local.requested = texts.size();
  std::vector<Embedding> out(texts.size());
  std::vector<std::string> shas(texts.size());
  // Distinct misses in first-seen order.
  std::vector<std::size_t> miss_first;
  std::unordered_map<std::string, std::size_t> miss_slot;

  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) {
      throw InputError("cannot embed an empty string (input " +
                       std::to_string(i) + ")");
    }
    shas[i] = sha256_hex(texts[i]);
    out[i].model_id = model;
    if (auto hit = cache.lookup(model, shas[i])) {
      out[i].values = std::move(*hit);
      ++local.cache_hits;
    } else if (miss_slot.emplace(shas[i], miss_first.size()).second) {
      miss_first.push_back(i);
    }
  }

  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::vector<double>> fetched(miss_first.size());
  for (std::size_t b = 0; b < miss_first.size(); b += batch) {
    const std::size_t n = std::min(batch, miss_first.size() - b);
    std::vector<std::string> request;
    request.reserve(n);
    for (std::size_t j = 0; j < n; ++j) request.push_back(texts[miss_first[b + j]]);
    auto vectors = provider.embed(request);
    ++local.provider_calls;
    local.provider_texts += n;
    if (vectors.size() != n) {
      throw ProviderError("provider returned " + std::to_string(vectors.size()) +
                          " vectors for " + std::to_string(n) + " texts");
    }
    std::vector<std::pair<std::string, std::vector<double>>> entries;
    entries.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (double x : vectors[j]) {
        if (!std::isfinite(x)) throw ProviderError("provider returned non-finite value");
      }
      entries.emplace_back(shas[miss_first[b + j]], vectors[j]);
      fetched[b + j] = std::move(vectors[j]);
    }
    cache.insert(model, entries);
  }

  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (out[i].values.empty()) out[i].values = fetched[miss_slot.at(shas[i])];
  }
  if (stats != nullptr) *stats = local;
  return out;
}

}  // namespace dataless
