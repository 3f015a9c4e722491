#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataless/evaluate.hpp"

namespace dataless {

inline constexpr char kVersion[] = "0.1.0";

// File locations for one dataset. Empty optional paths are simply absent.
struct DatasetSpec {
  std::string name;
  std::string schema;
  std::string dataset;
  DatasetFormat format = DatasetFormat::jsonl;
  std::string conllu;
  std::string paraphrases;
  std::string synthetic_pool;
};

// JSON {"datasets": [{"name", "schema", "dataset", "format"?, "conllu"?,
// "paraphrases"?, "synthetic_pool"?}]}. Relative paths resolve against the
// suite file's directory.
std::vector<DatasetSpec> load_suite(const std::string& path);

struct BundleOptions {
  PrototypeMode mode = PrototypeMode::description;
  std::set<std::string> mask_relations = default_mask_relations();
  std::optional<std::size_t> synthetic_k;
  std::uint64_t seed = 0;
  EmbedOptions embed;
};

struct LoadedBundle {
  std::unique_ptr<IntentSchema> schema;
  DatasetBundle bundle;
  std::size_t n_parse_issues = 0;
};

// Loads files, masks parses, embeds everything through the cache and builds
// prototypes and the overlap matrix. `completion`, when given, fills
// paraphrases missing from the cache.
LoadedBundle load_bundle(const DatasetSpec& spec, EmbeddingProvider& provider,
                         EmbeddingCache& cache, const BundleOptions& options,
                         CompletionClient* completion = nullptr);

struct ManifestInput {
  std::string role;
  std::string path;
};

// Config snapshot plus SHA-256 of every input file. Contains no timestamps,
// so identical runs produce identical manifests.
nlohmann::ordered_json make_manifest(const std::string& subcommand,
                                     const nlohmann::ordered_json& config,
                                     const std::vector<ManifestInput>& inputs,
                                     const std::string& model_id,
                                     std::uint64_t seed);

}  // namespace dataless
