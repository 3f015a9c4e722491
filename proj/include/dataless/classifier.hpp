#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataless/augment.hpp"
#include "dataless/corpus.hpp"
#include "dataless/embedding.hpp"
#include "dataless/overlap.hpp"

namespace dataless {

enum class PrototypeMode { tokenized, description, synthetic };

PrototypeMode parse_prototype_mode(std::string_view name);
std::string_view to_string(PrototypeMode mode);

// Class prototypes in schema order. Tokenized and description modes hold one
// embedding per class; synthetic mode holds the sampled example embeddings.
struct PrototypeSet {
  PrototypeMode mode = PrototypeMode::description;
  std::string model_id;
  std::vector<std::vector<Embedding>> classes;

  std::size_t dim() const;
};

// Example utterances per class, schema order.
struct SyntheticPool {
  std::vector<std::vector<std::string>> examples;
};

// JSONL {"label", "examples": [...]}; every schema class needs a non-empty
// entry.
SyntheticPool load_synthetic_pool(const std::string& path,
                                  const IntentSchema& schema);

struct PrototypeOptions {
  const SyntheticPool* pool = nullptr;
  // Examples sampled per class; the whole pool when unset.
  std::optional<std::size_t> synthetic_k;
  std::uint64_t seed = 0;
  std::size_t repetition = 0;
  EmbedOptions embed;
};

PrototypeSet build_prototypes(const IntentSchema& schema, PrototypeMode mode,
                              EmbeddingProvider& provider,
                              EmbeddingCache& cache,
                              const PrototypeOptions& options = {});

// Uniform sampling without replacement of k examples per class from a fully
// embedded synthetic set. One generator seeded from (seed, repetition) walks
// the classes in schema order; sampled examples keep pool order. Throws
// InputError when a class has fewer than k examples.
PrototypeSet sample_synthetic(const PrototypeSet& pool, std::size_t k,
                              std::uint64_t seed, std::size_t repetition);

struct RunConfig {
  bool use_E = true;
  bool use_P = false;
  bool use_M = false;
  bool use_O = false;
  std::size_t k_overlap = kDefaultOverlapK;
  bool normalize_components = false;
  // Whether the paraphrase joins the utterance embedding when ranking the
  // candidates the overlap gate inspects.
  bool gate_uses_paraphrase = true;
  std::optional<std::size_t> synthetic_k;
  std::uint64_t rng_seed = 0;

  // Throws InputError unless one of E/P/M is on, O implies M and k >= 1.
  void validate() const;
  // Active components as a subset of "EPMO", e.g. "EPM".
  std::string components() const;
  // Parses an "EPMO" subset such as "EM" or "E+P+M"; other settings default.
  static RunConfig from_components(std::string_view spec);
};

// The ten component combinations of the ablation grid, in table order.
std::vector<RunConfig> default_ablation_configs();

struct UtteranceEmbeddings {
  Embedding text;
  std::optional<Embedding> paraphrase;
  std::optional<Embedding> masked;
};

// Embeds the text, paraphrase and masked text of every utterance through the
// cache. Output order matches `utterances`.
std::vector<UtteranceEmbeddings> embed_utterances(
    std::span<const AugmentedUtterance> utterances, EmbeddingProvider& provider,
    EmbeddingCache& cache, const EmbedOptions& options = {});

// Per-class score: cosine against the prototype, or the mean cosine over the
// sampled examples in synthetic mode.
std::vector<double> similarities(std::span<const double> h,
                                 const PrototypeSet& prototypes);

// Highest score; ties go to the lowest position.
std::size_t argmax(std::span<const double> scores);
// 1-based rank of `position` under the same ordering as top_k_classes.
std::size_t rank_of(std::span<const double> scores, std::size_t position);

struct CombinedRepresentation {
  Embedding h;
  // Masking component added to h.
  bool mask_applied = false;
  // Overlap gate value; set only when the gate was evaluated.
  std::optional<bool> overlap_gate;
};

// h = [E] h(text) + [P, paraphrase present] h(paraphrase) + M, with
// M = h(masked) * gate * 1_masked when M is on. The gate is overlaps() over
// the ranking vector (active E/P components, or h(text) when neither is on)
// when O is on, else 1. Throws DegradedInputError when h is exactly zero.
CombinedRepresentation combined_representation(
    const AugmentedUtterance& utterance, const UtteranceEmbeddings& embeddings,
    const PrototypeSet& prototypes, const RunConfig& config,
    const OverlapMatrix& matrix);

struct Prediction {
  std::string id;
  std::string gold;  // empty when unknown
  std::string predicted;
  std::size_t predicted_index = 0;
  std::vector<double> similarities;
  std::optional<std::size_t> rank_of_gold;
  bool gated_mask = false;
  bool was_masked = false;
  std::optional<bool> overlap_gate;
  // A component the config asked for was unavailable (no paraphrase/parse).
  bool degraded = false;
};

Prediction predict(const AugmentedUtterance& utterance,
                   const UtteranceEmbeddings& embeddings,
                   const PrototypeSet& prototypes, const RunConfig& config,
                   const OverlapMatrix& matrix, const IntentSchema& schema,
                   const std::optional<std::string>& gold = std::nullopt);

// Predicts every utterance; golds come from `dataset` (same order, may be
// empty). Work is split across `workers` threads; output order and content do
// not depend on the worker count.
std::vector<Prediction> classify_all(
    const IntentSchema& schema, std::span<const LabeledUtterance> dataset,
    std::span<const AugmentedUtterance> utterances,
    std::span<const UtteranceEmbeddings> embeddings,
    const PrototypeSet& prototypes, const RunConfig& config,
    const OverlapMatrix& matrix, std::size_t workers = 1);

// JSONL {"id", "gold", "predicted", "rank_of_gold", "gated_mask"}.
void write_predictions(std::ostream& out, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions(const std::string& path);

// JSONL {"id", "was_masked", "overlaps", "mask_applied"}.
void write_gate_log(std::ostream& out, std::span<const Prediction> predictions);

}  // namespace dataless
