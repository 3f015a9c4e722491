#include "dataless/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

namespace {

std::string resolve(const std::filesystem::path& base, const nlohmann::json& obj,
                    const char* key, bool required, const std::string& source) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required) throw InputError(source + ": dataset entry lacks '" + key + "'");
    return {};
  }
  if (!it->is_string()) throw InputError(source + ": '" + key + "' must be a string");
  std::filesystem::path p(it->get<std::string>());
  if (p.is_relative()) p = base / p;
  return p.lexically_normal().string();
}

}  // namespace

std::vector<DatasetSpec> load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.contains("datasets") || !doc["datasets"].is_array() ||
      doc["datasets"].empty()) {
    throw InputError(path + ": needs a non-empty 'datasets' array");
  }
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<DatasetSpec> out;
  std::set<std::string> names;
  for (const auto& entry : doc["datasets"]) {
    if (!entry.is_object()) throw InputError(path + ": dataset entries must be objects");
    DatasetSpec spec;
    if (!entry.contains("name") || !entry["name"].is_string()) {
      throw InputError(path + ": dataset entry lacks 'name'");
    }
    spec.name = entry["name"].get<std::string>();
    if (!names.insert(spec.name).second) {
      throw InputError(path + ": duplicate dataset name '" + spec.name + "'");
    }
    spec.schema = resolve(base, entry, "schema", true, path);
    spec.dataset = resolve(base, entry, "dataset", true, path);
    spec.conllu = resolve(base, entry, "conllu", false, path);
    spec.paraphrases = resolve(base, entry, "paraphrases", false, path);
    spec.synthetic_pool = resolve(base, entry, "synthetic_pool", false, path);
    if (entry.contains("format")) {
      spec.format = parse_dataset_format(entry["format"].get<std::string>());
    }
    out.push_back(std::move(spec));
  }
  return out;
}

LoadedBundle load_bundle(const DatasetSpec& spec, EmbeddingProvider& provider,
                         EmbeddingCache& cache, const BundleOptions& options,
                         CompletionClient* completion) {
  LoadedBundle out;
  out.schema = std::make_unique<IntentSchema>(load_schema(spec.schema));
  auto& b = out.bundle;
  b.name = spec.name;
  b.schema = out.schema.get();
  b.dataset = load_dataset(spec.dataset, *out.schema, spec.format);

  std::optional<ConlluDocument> parses;
  if (!spec.conllu.empty()) {
    parses = parse_conllu_file(spec.conllu, /*strict=*/false);
    out.n_parse_issues = parses->issues.size();
  }
  std::unique_ptr<ParaphraseSource> paraphrases;
  if (!spec.paraphrases.empty() || completion != nullptr) {
    std::unique_ptr<CompletionClient> client;
    if (completion != nullptr) {
      // Borrowed: wrap without taking ownership.
      struct Borrowed final : CompletionClient {
        explicit Borrowed(CompletionClient* c) : inner(c) {}
        std::string complete(const std::string& prompt) override {
          return inner->complete(prompt);
        }
        CompletionClient* inner;
      };
      client = std::make_unique<Borrowed>(completion);
    }
    paraphrases = std::make_unique<ParaphraseSource>(spec.paraphrases, std::move(client));
  }
  b.augmented = augment_dataset(b.dataset, paraphrases.get(),
                                parses ? &parses->trees : nullptr,
                                options.mask_relations);
  b.embeddings = embed_utterances(b.augmented, provider, cache, options.embed);

  PrototypeOptions proto;
  std::optional<SyntheticPool> pool;
  if (options.mode == PrototypeMode::synthetic) {
    if (spec.synthetic_pool.empty()) {
      throw InputError("dataset '" + spec.name + "' has no synthetic pool");
    }
    pool = load_synthetic_pool(spec.synthetic_pool, *out.schema);
    proto.pool = &*pool;
  }
  proto.synthetic_k = options.synthetic_k;
  proto.seed = options.seed;
  proto.embed = options.embed;
  b.prototypes = build_prototypes(*out.schema, options.mode, provider, cache, proto);
  b.matrix = OverlapMatrix::build(*out.schema);
  return out;
}

nlohmann::ordered_json make_manifest(const std::string& subcommand,
                                     const nlohmann::ordered_json& config,
                                     const std::vector<ManifestInput>& inputs,
                                     const std::string& model_id,
                                     std::uint64_t seed) {
  nlohmann::ordered_json m;
  m["tool"] = "dataless";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["model_id"] = model_id;
  m["rng_seed"] = seed;
  m["config"] = config;
  m["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : inputs) {
    if (in.path.empty()) continue;
    nlohmann::ordered_json entry;
    entry["role"] = in.role;
    entry["path"] = in.path;
    entry["sha256"] = sha256_file(in.path);
    m["inputs"].push_back(std::move(entry));
  }
  return m;
}

}  // namespace dataless
