// Command-line front end: validate, embed, mask, classify, evaluate, ablate,
// stats. Exit codes: 0 success, 1 input error, 2 provider/transport error,
// 3 internal invariant violation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dataless/dataless.hpp"

namespace fs = std::filesystem;
using namespace dataless;
using ojson = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kProviderError = 2, kInternalError = 3 };

struct Options {
  std::string schema;
  std::string dataset;
  std::string dataset_format = "jsonl";
  std::string conllu;
  std::string paraphrases;
  std::string embed_cache;
  std::string provider = "file";
  std::string endpoint;
  std::string model;
  std::string paraphrase_endpoint;
  std::string paraphrase_model;
  std::string config_path;
  std::string components = "E";
  std::string mode = "description";
  std::string synthetic_pool;
  std::string predictions;
  std::string suite;
  std::string out_dir = ".";
  std::vector<std::string> mask_relations;
  std::size_t k_overlap = kDefaultOverlapK;
  std::size_t dim = 64;
  std::size_t batch_size = 64;
  std::size_t workers = 1;
  std::size_t repetition = 0;
  std::optional<std::size_t> synthetic_k;
  std::optional<std::size_t> max_per_class;
  std::uint64_t seed = 0;
  bool normalize_components = false;
  bool gate_excludes_paraphrase = false;
};

// Optional JSON config: HTTP details that do not belong on the command line.
//   {"embedding":  {"token_env", "timeout_ms", "max_retries", "batch_size"},
//    "completion": {"token_env", "timeout_ms", "max_retries", "max_tokens",
//                   "temperature", "prompt_template_file"}}
nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
}

HttpSettings http_settings(const std::string& url, const nlohmann::json& section) {
  HttpSettings s;
  s.base_url = url;
  s.token_env = section.value("token_env", std::string());
  s.timeout = std::chrono::milliseconds(section.value("timeout_ms", 30000));
  s.max_retries = section.value("max_retries", 3);
  return s;
}

std::unique_ptr<EmbeddingProvider> make_provider(const Options& o,
                                                 const nlohmann::json& config) {
  if (o.provider == "test") return make_test_embedder(o.dim, o.seed);
  if (o.model.empty()) throw InputError("--model is required for provider '" + o.provider + "'");
  if (o.provider == "file") return std::make_unique<CacheOnlyProvider>(o.model);
  if (o.provider == "http") {
    if (o.endpoint.empty()) throw InputError("--endpoint is required for provider 'http'");
    const auto section = config.value("embedding", nlohmann::json::object());
    return std::make_unique<HttpEmbeddingProvider>(
        http_settings(o.endpoint, section), o.model,
        section.value("batch_size", o.batch_size));
  }
  throw InputError("unknown provider '" + o.provider + "'");
}

std::unique_ptr<CompletionClient> make_completion(const Options& o,
                                                  const nlohmann::json& config) {
  if (o.paraphrase_endpoint.empty()) return nullptr;
  if (o.paraphrase_model.empty()) {
    throw InputError("--paraphrase-model is required with --paraphrase-endpoint");
  }
  const auto section = config.value("completion", nlohmann::json::object());
  CompletionSettings s;
  s.http = http_settings(o.paraphrase_endpoint, section);
  s.model = o.paraphrase_model;
  s.max_tokens = section.value("max_tokens", s.max_tokens);
  s.temperature = section.value("temperature", s.temperature);
  if (section.contains("prompt_template_file")) {
    const auto path = section["prompt_template_file"].get<std::string>();
    std::ifstream in(path);
    if (!in) throw InputError("cannot open prompt template " + path);
    s.prompt_template.assign(std::istreambuf_iterator<char>(in), {});
  }
  return std::make_unique<HttpCompletionClient>(std::move(s));
}

std::set<std::string> relations(const Options& o) {
  if (o.mask_relations.empty()) return default_mask_relations();
  std::set<std::string> out;
  for (const auto& r : o.mask_relations) out.insert(to_lower(r));
  return out;
}

RunConfig run_config(const Options& o) {
  RunConfig c = RunConfig::from_components(o.components);
  c.k_overlap = o.k_overlap;
  c.normalize_components = o.normalize_components;
  c.gate_uses_paraphrase = !o.gate_excludes_paraphrase;
  c.synthetic_k = o.synthetic_k;
  c.rng_seed = o.seed;
  c.validate();
  return c;
}

ojson config_json(const Options& o, const RunConfig* c) {
  ojson j;
  j["provider"] = o.provider;
  if (!o.endpoint.empty()) j["endpoint"] = o.endpoint;
  if (o.provider == "test") j["dim"] = o.dim;
  j["mode"] = o.mode;
  if (c != nullptr) {
    j["components"] = c->components();
    j["k_overlap"] = c->k_overlap;
    j["normalize_components"] = c->normalize_components;
    j["gate_uses_paraphrase"] = c->gate_uses_paraphrase;
  }
  if (o.synthetic_k) j["synthetic_k"] = *o.synthetic_k;
  j["repetition"] = o.repetition;
  const auto rels = relations(o);
  j["mask_relations"] = std::vector<std::string>(rels.begin(), rels.end());
  return j;
}

std::string out_path(const Options& o, const std::string& name) {
  return (fs::path(o.out_dir) / name).string();
}

void write_json(const std::string& path, const ojson& j) {
  write_text_file(path, j.dump(2) + "\n");
}

DatasetSpec single_spec(const Options& o) {
  if (o.schema.empty() || o.dataset.empty()) {
    throw InputError("--schema and --dataset are required");
  }
  DatasetSpec s;
  s.name = fs::path(o.dataset).stem().string();
  s.schema = o.schema;
  s.dataset = o.dataset;
  s.format = parse_dataset_format(o.dataset_format);
  s.conllu = o.conllu;
  s.paraphrases = o.paraphrases;
  s.synthetic_pool = o.synthetic_pool;
  return s;
}

std::vector<ManifestInput> spec_inputs(const DatasetSpec& s) {
  return {{s.name + ":schema", s.schema},
          {s.name + ":dataset", s.dataset},
          {s.name + ":conllu", s.conllu},
          {s.name + ":paraphrases", s.paraphrases},
          {s.name + ":synthetic_pool", s.synthetic_pool}};
}

BundleOptions bundle_options(const Options& o) {
  BundleOptions b;
  b.mode = parse_prototype_mode(o.mode);
  b.mask_relations = relations(o);
  b.synthetic_k = o.synthetic_k;
  b.seed = o.seed;
  b.embed.batch_size = o.batch_size;
  return b;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o) {
  if (o.schema.empty()) throw InputError("--schema is required");
  const auto schema = load_schema(o.schema);
  ojson out;
  out["classes"] = ojson::array();
  std::size_t n_warnings = 0;
  for (const auto& cls : schema.classes()) {
    const auto v = validate_description(cls);
    ojson c;
    c["label"] = cls.label;
    c["tokenized"] = cls.tokenized;
    c["prefix_ok"] = v.prefix_ok;
    c["exact_label_tokens_found"] = v.exact_label_tokens_found;
    c["label_token_total"] = v.label_token_total;
    c["warnings"] = v.warnings;
    for (const auto& w : v.warnings) std::cout << "warning: " << w << '\n';
    n_warnings += v.warnings.size();
    out["classes"].push_back(std::move(c));
  }
  const auto stats = description_stats(schema);
  out["stats"] = {{"n_classes", stats.n_classes},
                  {"mean_label_tokens", stats.mean_label_tokens},
                  {"mean_description_tokens", stats.mean_description_tokens},
                  {"mean_added_tokens", stats.mean_added_tokens},
                  {"pct_with_exact_token", stats.pct_with_exact_token},
                  {"pct_label_tokens_preserved", stats.pct_label_tokens_preserved}};
  if (!o.dataset.empty()) {
    const auto data = load_dataset(o.dataset, schema, parse_dataset_format(o.dataset_format));
    out["n_utterances"] = data.size();
  }
  std::cout << "classes: " << stats.n_classes << '\n'
            << "mean added tokens: " << stats.mean_added_tokens << " ("
            << stats.mean_label_tokens << " -> " << stats.mean_description_tokens << ")\n"
            << "descriptions with an exact label token: " << percent(stats.pct_with_exact_token / 100.0) << "%\n"
            << "label tokens preserved: " << percent(stats.pct_label_tokens_preserved / 100.0) << "%\n"
            << "warnings: " << n_warnings << '\n';
  if (out.contains("n_utterances")) {
    std::cout << "utterances: " << out["n_utterances"].get<std::size_t>() << '\n';
  }
  write_json(out_path(o, "validation.json"), out);
  return kOk;
}

int cmd_embed(const Options& o) {
  const auto config = load_config(o.config_path);
  auto provider = make_provider(o, config);
  EmbeddingCache cache(o.embed_cache);
  auto completion = make_completion(o, config);
  const auto spec = single_spec(o);
  const auto before = cache.size();
  auto options = bundle_options(o);

  // Embed prototypes for every mode the inputs allow.
  auto loaded = load_bundle(spec, *provider, cache, options, completion.get());
  PrototypeOptions proto;
  proto.embed = options.embed;
  build_prototypes(*loaded.schema, PrototypeMode::tokenized, *provider, cache, proto);
  build_prototypes(*loaded.schema, PrototypeMode::description, *provider, cache, proto);
  if (!spec.synthetic_pool.empty()) {
    const auto pool = load_synthetic_pool(spec.synthetic_pool, *loaded.schema);
    proto.pool = &pool;
    build_prototypes(*loaded.schema, PrototypeMode::synthetic, *provider, cache, proto);
  }
  std::cout << "model: " << provider->model_id() << '\n'
            << "cache entries: " << before << " -> " << cache.size() << '\n';
  return kOk;
}

int cmd_mask(const Options& o) {
  if (o.conllu.empty()) throw InputError("--conllu is required");
  const auto rels = relations(o);
  const auto doc = parse_conllu_file(o.conllu, /*strict=*/false);

  std::ostringstream masked;
  std::size_t n = 0;
  std::size_t n_masked = 0;
  auto emit = [&](const std::string& id, const std::string& text, const DepTree* tree) {
    ojson j;
    j["id"] = id;
    j["text"] = text;
    MaskResult m;
    if (tree != nullptr) m = mask_tree(*tree, rels);
    j["masked"] = m.masked ? ojson(*m.masked) : ojson(nullptr);
    j["was_masked"] = m.was_masked;
    masked << j.dump() << '\n';
    ++n;
    if (m.was_masked) ++n_masked;
  };

  if (!o.dataset.empty()) {
    if (o.schema.empty()) throw InputError("--schema is required with --dataset");
    const auto schema = load_schema(o.schema);
    const auto data = load_dataset(o.dataset, schema, parse_dataset_format(o.dataset_format));
    for (const auto& u : data) {
      auto it = doc.trees.find(u.id);
      emit(u.id, u.text, it == doc.trees.end() ? nullptr : &it->second);
    }
  } else {
    for (const auto& [id, tree] : doc.trees) emit(id, surface(tree), &tree);
  }

  ojson coverage;
  coverage["n_utterances"] = n;
  coverage["n_masked"] = n_masked;
  coverage["coverage"] = n == 0 ? 0.0 : static_cast<double>(n_masked) / static_cast<double>(n);
  coverage["parse_issues"] = ojson::array();
  for (const auto& issue : doc.issues) {
    coverage["parse_issues"].push_back(
        {{"sent_id", issue.sent_id}, {"line", issue.line}, {"message", issue.message}});
  }
  write_text_file(out_path(o, "masked.jsonl"), masked.str());
  write_json(out_path(o, "coverage.json"), coverage);
  std::cout << "masked " << n_masked << " of " << n << " utterances ("
            << percent(coverage["coverage"].get<double>()) << "%)\n";
  return kOk;
}

int cmd_classify(const Options& o) {
  const auto config = load_config(o.config_path);
  const RunConfig run = run_config(o);
  auto provider = make_provider(o, config);
  EmbeddingCache cache(o.embed_cache);
  const auto spec = single_spec(o);
  auto options = bundle_options(o);
  auto loaded = load_bundle(spec, *provider, cache, options);
  auto& b = loaded.bundle;
  if (o.repetition != 0 && options.mode == PrototypeMode::synthetic && o.synthetic_k) {
    PrototypeOptions proto;
    const auto pool = load_synthetic_pool(spec.synthetic_pool, *loaded.schema);
    proto.pool = &pool;
    proto.embed = options.embed;
    const auto full = build_prototypes(*loaded.schema, PrototypeMode::synthetic,
                                       *provider, cache, proto);
    b.prototypes = sample_synthetic(full, *o.synthetic_k, o.seed, o.repetition);
  }

  const auto predictions = classify_all(*loaded.schema, b.dataset, b.augmented,
                                        b.embeddings, b.prototypes, run, b.matrix,
                                        o.workers);
  std::ostringstream pred;
  write_predictions(pred, predictions);
  write_text_file(out_path(o, "predictions.jsonl"), pred.str());
  if (run.use_M) {
    std::ostringstream gate;
    write_gate_log(gate, predictions);
    write_text_file(out_path(o, "gate_log.jsonl"), gate.str());
  }

  const auto report = score(predictions, *loaded.schema);
  ojson summary;
  summary["components"] = run.components();
  summary["report"] = to_json(report);
  summary["n_parse_issues"] = loaded.n_parse_issues;
  std::size_t n_masked = 0;
  std::size_t n_paraphrased = 0;
  for (const auto& a : b.augmented) {
    n_masked += a.was_masked ? 1 : 0;
    n_paraphrased += a.paraphrase ? 1 : 0;
  }
  summary["masking_coverage"] =
      b.augmented.empty() ? 0.0 : static_cast<double>(n_masked) / static_cast<double>(b.augmented.size());
  summary["paraphrase_coverage"] =
      b.augmented.empty() ? 0.0 : static_cast<double>(n_paraphrased) / static_cast<double>(b.augmented.size());
  if (auto sim = paraphrase_similarity(b.embeddings)) {
    summary["paraphrase_similarity"] = *sim;
  } else {
    summary["paraphrase_similarity"] = nullptr;
  }
  write_json(out_path(o, "run_report.json"), summary);
  write_json(out_path(o, "manifest.json"),
             make_manifest("classify", config_json(o, &run), spec_inputs(spec),
                           provider->model_id(), o.seed));
  std::cout << "accuracy " << percent(report.accuracy) << "  macro-F1 "
            << percent(report.macro_f1) << "  mean " << percent(report.mean_acc_f1)
            << "  degraded " << report.n_degraded << '\n';
  return kOk;
}

int cmd_evaluate(const Options& o) {
  if (o.predictions.empty() || o.schema.empty()) {
    throw InputError("--predictions and --schema are required");
  }
  const auto schema = load_schema(o.schema);
  const auto predictions = read_predictions(o.predictions);
  const auto report = score(predictions, schema);
  write_json(out_path(o, "report.json"), to_json(report));
  const std::vector<std::pair<std::string, EvaluationReport>> rows = {
      {fs::path(o.predictions).stem().string(), report}};
  write_text_file(out_path(o, "report.md"), report_markdown(rows));
  std::cout << "accuracy " << format_double(report.accuracy) << '\n'
            << "macro_f1 " << format_double(report.macro_f1) << '\n'
            << "mean " << format_double(report.mean_acc_f1) << '\n';
  return kOk;
}

std::vector<DatasetSpec> specs_for(const Options& o) {
  if (!o.suite.empty()) return load_suite(o.suite);
  return {single_spec(o)};
}

int cmd_ablate(const Options& o) {
  const auto config = load_config(o.config_path);
  auto provider = make_provider(o, config);
  EmbeddingCache cache(o.embed_cache);
  const auto specs = specs_for(o);
  const auto options = bundle_options(o);

  std::vector<LoadedBundle> loaded;
  std::vector<DatasetBundle> bundles;
  std::vector<ManifestInput> inputs;
  if (!o.suite.empty()) inputs.push_back({"suite", o.suite});
  for (const auto& spec : specs) {
    loaded.push_back(load_bundle(spec, *provider, cache, options));
    for (auto& in : spec_inputs(spec)) inputs.push_back(std::move(in));
  }
  for (auto& l : loaded) bundles.push_back(std::move(l.bundle));

  auto configs = default_ablation_configs();
  for (auto& c : configs) {
    c.k_overlap = o.k_overlap;
    c.normalize_components = o.normalize_components;
    c.gate_uses_paraphrase = !o.gate_excludes_paraphrase;
    c.synthetic_k = o.synthetic_k;
    c.rng_seed = o.seed;
  }
  const auto grid = run_ablation(bundles, configs, o.workers);
  emit_ablation(grid, o.out_dir);
  for (const auto& row : grid.rows) {
    for (const auto& cell : row.cells) {
      if (!cell.report) continue;
      std::ostringstream pred;
      write_predictions(pred, cell.predictions);
      write_text_file(out_path(o, "predictions/" + row.config.components() + "/" +
                                      cell.dataset + ".jsonl"),
                      pred.str());
    }
  }
  write_json(out_path(o, "manifest.json"),
             make_manifest("ablate", config_json(o, nullptr), inputs,
                           provider->model_id(), o.seed));
  std::cout << ablation_markdown(grid);
  std::size_t failed = 0;
  for (const auto& row : grid.rows) failed += row.overall_mean ? 0 : 1;
  if (failed > 0) std::cout << failed << " configuration(s) failed; see warnings\n";
  return kOk;
}

int cmd_stats(const Options& o) {
  const auto config = load_config(o.config_path);
  auto provider = make_provider(o, config);
  EmbeddingCache cache(o.embed_cache);
  const auto specs = specs_for(o);
  const auto options = bundle_options(o);
  const RunConfig run = run_config(o);

  ojson out = ojson::object();
  std::vector<std::pair<std::string, std::map<std::size_t, double>>> topk_rows;
  std::ostringstream sim_md;
  sim_md << "| Dataset | s_in | s_out | delta | %delta |\n|---|---|---|---|---|\n";
  std::vector<ManifestInput> inputs;
  for (const auto& spec : specs) {
    auto loaded = load_bundle(spec, *provider, cache, options);
    const auto& b = loaded.bundle;
    for (auto& in : spec_inputs(spec)) inputs.push_back(std::move(in));

    std::vector<Embedding> text_embeddings;
    for (const auto& e : b.embeddings) text_embeddings.push_back(e.text);
    SimilarityOptions so;
    so.max_per_class = o.max_per_class;
    so.seed = o.seed;
    const auto stats = class_similarity_stats(b.dataset, text_embeddings, *loaded.schema, so);

    std::vector<Prediction> predictions;
    if (!o.predictions.empty() && specs.size() == 1) {
      predictions = read_predictions(o.predictions);
    } else {
      predictions = classify_all(*loaded.schema, b.dataset, b.augmented, b.embeddings,
                                 b.prototypes, run, b.matrix, o.workers);
    }
    const auto recall = topk_recall(predictions);
    topk_rows.emplace_back(spec.name, recall);

    ojson entry;
    entry["similarity"] = to_json(stats);
    entry["topk_recall"] = ojson::object();
    for (const auto& [k, v] : recall) entry["topk_recall"][std::to_string(k)] = v;
    out[spec.name] = std::move(entry);

    char row[256];
    std::snprintf(row, sizeof row, "| %s%s | %.2f | %.2f | %.2f | %s |\n", spec.name.c_str(),
                  stats.approximate ? " (sampled)" : "", stats.s_in, stats.s_out,
                  stats.delta, percent(stats.pct_delta / 100.0).c_str());
    sim_md << row;
  }
  write_json(out_path(o, "stats.json"), out);
  write_text_file(out_path(o, "similarity.md"), sim_md.str());
  write_text_file(out_path(o, "topk.md"), topk_markdown(topk_rows));
  write_json(out_path(o, "manifest.json"),
             make_manifest("stats", config_json(o, &run), inputs, provider->model_id(), o.seed));
  std::cout << sim_md.str() << '\n' << topk_markdown(topk_rows);
  return kOk;
}

// ---------------------------------------------------------------------------

void add_data_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--schema", o.schema, "Intent schema JSONL");
  cmd->add_option("--dataset", o.dataset, "Dataset JSONL (or TSV)");
  cmd->add_option("--dataset-format", o.dataset_format, "jsonl or tsv")
      ->check(CLI::IsMember({"jsonl", "tsv"}));
  cmd->add_option("--conllu", o.conllu, "Dependency parses (CoNLL-U)");
  cmd->add_option("--paraphrases", o.paraphrases, "Paraphrase cache JSONL");
  cmd->add_option("--synthetic-pool", o.synthetic_pool, "Synthetic example pool JSONL");
  cmd->add_option("--mask-relations", o.mask_relations,
                  "Relations whose subtrees are masked (default dobj pobj ccomp obj)");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
}

void add_provider_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--embed-cache", o.embed_cache, "Embedding cache JSONL");
  cmd->add_option("--provider", o.provider, "Embedding provider")
      ->check(CLI::IsMember({"file", "http", "test"}));
  cmd->add_option("--endpoint", o.endpoint, "Embedding service base URL (http provider)");
  cmd->add_option("--model", o.model, "Embedding model id");
  cmd->add_option("--dim", o.dim, "Test embedder dimension")->check(CLI::Range(8, 1 << 20));
  cmd->add_option("--batch-size", o.batch_size, "Texts per provider request")
      ->check(CLI::Range(1, 1 << 20));
  cmd->add_option("--config", o.config_path, "JSON config (HTTP auth/timeouts)");
  cmd->add_option("--seed", o.seed, "Seed for the test embedder and sampling");
  cmd->add_option("--mode", o.mode, "Prototype mode")
      ->check(CLI::IsMember({"tokenized", "description", "synthetic"}));
  cmd->add_option("--synthetic-k", o.synthetic_k, "Synthetic examples sampled per class");
}

void add_run_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--components", o.components, "Subset of EPMO");
  cmd->add_option("--k-overlap", o.k_overlap, "Candidates inspected by the overlap gate")
      ->check(CLI::Range(1, 1 << 20));
  cmd->add_flag("--normalize-components", o.normalize_components,
                "L2-normalize each component before summing");
  cmd->add_flag("--gate-excludes-paraphrase", o.gate_excludes_paraphrase,
                "Rank gate candidates without the paraphrase component");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::Range(1, 1024));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Description-augmented dataless intent classification"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check descriptions and report statistics");
  add_data_flags(validate, o);

  auto* embed = app.add_subcommand("embed", "Populate the embedding cache");
  add_data_flags(embed, o);
  add_provider_flags(embed, o);
  embed->add_option("--paraphrase-endpoint", o.paraphrase_endpoint,
                    "Completion service base URL for missing paraphrases");
  embed->add_option("--paraphrase-model", o.paraphrase_model, "Completion model id");

  auto* mask = app.add_subcommand("mask", "Mask object subtrees of CoNLL-U parses");
  add_data_flags(mask, o);

  auto* classify = app.add_subcommand("classify", "Predict intents for one run config");
  add_data_flags(classify, o);
  add_provider_flags(classify, o);
  add_run_flags(classify, o);
  classify->add_option("--repetition", o.repetition, "Synthetic sampling repetition index");

  auto* evaluate = app.add_subcommand("evaluate", "Score a predictions file");
  evaluate->add_option("--predictions", o.predictions, "Predictions JSONL")->required();
  evaluate->add_option("--schema", o.schema, "Intent schema JSONL")->required();
  evaluate->add_option("--out-dir", o.out_dir, "Output directory");

  auto* ablate = app.add_subcommand("ablate", "Run the ten-row component grid");
  add_data_flags(ablate, o);
  add_provider_flags(ablate, o);
  add_run_flags(ablate, o);
  ablate->add_option("--suite", o.suite, "Suite JSON listing several datasets");

  auto* stats = app.add_subcommand("stats", "In/out-class similarity and top-k recall");
  add_data_flags(stats, o);
  add_provider_flags(stats, o);
  add_run_flags(stats, o);
  stats->add_option("--suite", o.suite, "Suite JSON listing several datasets");
  stats->add_option("--predictions", o.predictions, "Use ranks from this predictions file");
  stats->add_option("--max-per-class", o.max_per_class,
                    "Sample at most this many utterances per class (approximate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*embed) return cmd_embed(o);
    if (*mask) return cmd_mask(o);
    if (*classify) return cmd_classify(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*ablate) return cmd_ablate(o);
    if (*stats) return cmd_stats(o);
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kProviderError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const VectorError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}
