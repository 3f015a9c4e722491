#include "dataless/classifier.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

PrototypeMode parse_prototype_mode(std::string_view name) {
  if (name == "tokenized") return PrototypeMode::tokenized;
  if (name == "description") return PrototypeMode::description;
  if (name == "synthetic") return PrototypeMode::synthetic;
  throw InputError("unknown prototype mode '" + std::string(name) + "'");
}

std::string_view to_string(PrototypeMode mode) {
  switch (mode) {
    case PrototypeMode::tokenized: return "tokenized";
    case PrototypeMode::description: return "description";
    case PrototypeMode::synthetic: return "synthetic";
  }
  return "unknown";
}

std::size_t PrototypeSet::dim() const {
  if (classes.empty() || classes.front().empty()) return 0;
  return classes.front().front().dim();
}

SyntheticPool load_synthetic_pool(const std::string& path,
                                  const IntentSchema& schema) {
  SyntheticPool pool;
  pool.examples.resize(schema.size());
  std::vector<bool> seen(schema.size(), false);
  for_each_jsonl_file(path, [&](const nlohmann::json& obj, std::size_t line) {
    const auto label = require_string(obj, "label", path, line);
    const auto pos = schema.find(label);
    if (!pos) throw UnknownLabelError(label, path, line);
    if (seen[*pos]) {
      throw MalformedRecordError("duplicate pool for '" + label + "'", path,
                                 line);
    }
    auto it = obj.find("examples");
    if (it == obj.end() || !it->is_array() || it->empty()) {
      throw MalformedRecordError("'examples' must be a non-empty array", path,
                                 line);
    }
    for (const auto& e : *it) {
      if (!e.is_string() || trim(e.get<std::string>()).empty()) {
        throw MalformedRecordError("examples must be non-empty strings", path,
                                   line);
      }
      pool.examples[*pos].push_back(e.get<std::string>());
    }
    seen[*pos] = true;
  });
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!seen[i]) {
      throw InputError(path + ": no synthetic examples for '" +
                       schema.at(i).label + "'");
    }
  }
  return pool;
}

PrototypeSet build_prototypes(const IntentSchema& schema, PrototypeMode mode,
                              EmbeddingProvider& provider,
                              EmbeddingCache& cache,
                              const PrototypeOptions& options) {
  PrototypeSet set;
  set.mode = mode;
  set.model_id = provider.model_id();
  set.classes.resize(schema.size());

  if (mode != PrototypeMode::synthetic) {
    std::vector<std::string> texts;
    texts.reserve(schema.size());
    for (const auto& cls : schema.classes()) {
      if (mode == PrototypeMode::tokenized) {
        texts.push_back(cls.tokenized);
      } else {
        if (cls.description.empty()) {
          throw InputError("intent '" + cls.label + "' has no description");
        }
        texts.push_back(cls.description);
      }
    }
    auto embedded = embed_all(provider, cache, texts, options.embed);
    for (std::size_t i = 0; i < embedded.size(); ++i) {
      set.classes[i].push_back(std::move(embedded[i]));
    }
    return set;
  }

  if (options.pool == nullptr) {
    throw InputError("synthetic prototypes need an example pool");
  }
  const auto& pool = options.pool->examples;
  if (pool.size() != schema.size()) {
    throw InputError("synthetic pool does not match the schema");
  }
  std::vector<std::string> texts;
  for (const auto& examples : pool) {
    texts.insert(texts.end(), examples.begin(), examples.end());
  }
  auto embedded = embed_all(provider, cache, texts, options.embed);
  std::size_t next = 0;
  for (std::size_t c = 0; c < pool.size(); ++c) {
    for (std::size_t j = 0; j < pool[c].size(); ++j) {
      set.classes[c].push_back(std::move(embedded[next++]));
    }
  }
  if (options.synthetic_k) {
    return sample_synthetic(set, *options.synthetic_k, options.seed,
                            options.repetition);
  }
  return set;
}

PrototypeSet sample_synthetic(const PrototypeSet& pool, std::size_t k,
                              std::uint64_t seed, std::size_t repetition) {
  if (k == 0) throw InputError("synthetic_k must be at least 1");
  PrototypeSet out;
  out.mode = PrototypeMode::synthetic;
  out.model_id = pool.model_id;
  out.classes.resize(pool.classes.size());
  SplitMix64 rng(mix64(seed) ^ mix64(0x2545f4914f6cdd1dULL + repetition));
  for (std::size_t c = 0; c < pool.classes.size(); ++c) {
    const auto& examples = pool.classes[c];
    if (examples.size() < k) {
      throw InputError("class " + std::to_string(c) + " has " +
                       std::to_string(examples.size()) +
                       " synthetic examples, fewer than k = " +
                       std::to_string(k));
    }
    // Partial Fisher-Yates over positions.
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) out.classes[c].push_back(examples[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (!use_E && !use_P && !use_M) {
    throw InputError("run config needs at least one of E, P, M");
  }
  if (use_O && !use_M) throw InputError("component O requires M");
  if (k_overlap == 0) throw InputError("k_overlap must be at least 1");
}

std::string RunConfig::components() const {
  std::string out;
  if (use_E) out += 'E';
  if (use_P) out += 'P';
  if (use_M) out += 'M';
  if (use_O) out += 'O';
  return out;
}

RunConfig RunConfig::from_components(std::string_view spec) {
  RunConfig c;
  c.use_E = c.use_P = c.use_M = c.use_O = false;
  for (char ch : spec) {
    switch (ch) {
      case 'E': case 'e': c.use_E = true; break;
      case 'P': case 'p': c.use_P = true; break;
      case 'M': case 'm': c.use_M = true; break;
      case 'O': case 'o': c.use_O = true; break;
      case '+': case ',': case ' ': break;
      default:
        throw InputError("unknown component '" + std::string(1, ch) +
                         "' in '" + std::string(spec) + "'");
    }
  }
  c.validate();
  return c;
}

std::vector<RunConfig> default_ablation_configs() {
  std::vector<RunConfig> out;
  for (auto spec : {"E", "P", "M", "EP", "EM", "PM", "EPM", "EMO", "PMO", "EPMO"}) {
    out.push_back(RunConfig::from_components(spec));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<UtteranceEmbeddings> embed_utterances(
    std::span<const AugmentedUtterance> utterances, EmbeddingProvider& provider,
    EmbeddingCache& cache, const EmbedOptions& options) {
  std::vector<std::string> texts;
  for (const auto& u : utterances) {
    texts.push_back(u.text);
    if (u.paraphrase) texts.push_back(*u.paraphrase);
    if (u.was_masked && u.masked) texts.push_back(*u.masked);
  }
  auto embedded = embed_all(provider, cache, texts, options);
  std::vector<UtteranceEmbeddings> out(utterances.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const auto& u = utterances[i];
    out[i].text = std::move(embedded[next++]);
    if (u.paraphrase) out[i].paraphrase = std::move(embedded[next++]);
    if (u.was_masked && u.masked) out[i].masked = std::move(embedded[next++]);
  }
  return out;
}

std::vector<double> similarities(std::span<const double> h,
                                 const PrototypeSet& prototypes) {
  std::vector<double> out(prototypes.classes.size());
  for (std::size_t c = 0; c < prototypes.classes.size(); ++c) {
    const auto& examples = prototypes.classes[c];
    if (examples.empty()) throw InvariantError("class without prototypes");
    if (prototypes.mode != PrototypeMode::synthetic) {
      out[c] = cosine(h, examples.front().values);
      continue;
    }
    double sum = 0.0;
    for (const auto& e : examples) sum += cosine(h, e.values);
    out[c] = sum / static_cast<double>(examples.size());
  }
  return out;
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw InputError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t rank_of(std::span<const double> scores, std::size_t position) {
  const double s = scores[position];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > s || (scores[i] == s && i < position)) ++ahead;
  }
  return ahead + 1;
}

namespace {

void accumulate(std::vector<double>& acc, const Embedding& e, bool normalize) {
  if (e.dim() != acc.size()) {
    throw VectorError("component dimension " + std::to_string(e.dim()) +
                      " differs from " + std::to_string(acc.size()));
  }
  double scale = 1.0;
  if (normalize) {
    const double n = l2_norm(e.values);
    if (n > 0.0) scale = 1.0 / n;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * e.values[i];
}

}  // namespace

CombinedRepresentation combined_representation(
    const AugmentedUtterance& utterance, const UtteranceEmbeddings& embeddings,
    const PrototypeSet& prototypes, const RunConfig& config,
    const OverlapMatrix& matrix) {
  const std::size_t dim = embeddings.text.dim();
  if (prototypes.dim() != dim) {
    throw VectorError("utterance dim " + std::to_string(dim) +
                      " differs from prototype dim " +
                      std::to_string(prototypes.dim()));
  }
  const bool has_paraphrase = embeddings.paraphrase.has_value();

  CombinedRepresentation out;
  out.h.model_id = embeddings.text.model_id;
  out.h.values.assign(dim, 0.0);
  if (config.use_E) accumulate(out.h.values, embeddings.text, config.normalize_components);
  if (config.use_P && has_paraphrase) {
    accumulate(out.h.values, *embeddings.paraphrase, config.normalize_components);
  }

  if (config.use_M && utterance.was_masked) {
    if (!embeddings.masked) {
      throw InvariantError("utterance '" + utterance.id +
                           "' is masked but has no masked embedding");
    }
    bool gate = true;
    if (config.use_O) {
      std::vector<double> ranking(dim, 0.0);
      bool any = false;
      if (config.use_E) {
        accumulate(ranking, embeddings.text, config.normalize_components);
        any = true;
      }
      if (config.use_P && config.gate_uses_paraphrase && has_paraphrase) {
        accumulate(ranking, *embeddings.paraphrase, config.normalize_components);
        any = true;
      }
      if (!any) ranking = embeddings.text.values;
      if (std::all_of(ranking.begin(), ranking.end(),
                      [](double x) { return x == 0.0; })) {
        throw DegradedInputError(
            "utterance '" + utterance.id + "' has a zero ranking vector",
            utterance.id);
      }
      gate = overlaps(similarities(ranking, prototypes), config.k_overlap, matrix);
      out.overlap_gate = gate;
    }
    if (gate) {
      accumulate(out.h.values, *embeddings.masked, config.normalize_components);
      out.mask_applied = true;
    }
  }

  if (std::all_of(out.h.values.begin(), out.h.values.end(),
                  [](double x) { return x == 0.0; })) {
    throw DegradedInputError("combined representation of utterance '" +
                                 utterance.id + "' is all zero",
                             utterance.id);
  }
  return out;
}

Prediction predict(const AugmentedUtterance& utterance,
                   const UtteranceEmbeddings& embeddings,
                   const PrototypeSet& prototypes, const RunConfig& config,
                   const OverlapMatrix& matrix, const IntentSchema& schema,
                   const std::optional<std::string>& gold) {
  auto combined =
      combined_representation(utterance, embeddings, prototypes, config, matrix);
  Prediction p;
  p.id = utterance.id;
  p.similarities = similarities(combined.h.values, prototypes);
  p.predicted_index = argmax(p.similarities);
  p.predicted = schema.at(p.predicted_index).label;
  p.gated_mask = combined.mask_applied;
  p.was_masked = utterance.was_masked;
  p.overlap_gate = combined.overlap_gate;
  p.degraded = (config.use_P && !embeddings.paraphrase) ||
               (config.use_M && !utterance.parsed);
  if (gold) {
    p.gold = *gold;
    p.rank_of_gold = rank_of(p.similarities, schema.position(*gold));
  }
  return p;
}

std::vector<Prediction> classify_all(
    const IntentSchema& schema, std::span<const LabeledUtterance> dataset,
    std::span<const AugmentedUtterance> utterances,
    std::span<const UtteranceEmbeddings> embeddings,
    const PrototypeSet& prototypes, const RunConfig& config,
    const OverlapMatrix& matrix, std::size_t workers) {
  config.validate();
  if (embeddings.size() != utterances.size() ||
      (!dataset.empty() && dataset.size() != utterances.size())) {
    throw InvariantError("classify_all: input lengths disagree");
  }
  if (prototypes.classes.size() != schema.size() ||
      matrix.size() != schema.size()) {
    throw InvariantError("classify_all: prototypes or matrix do not match schema");
  }
  const std::size_t n = utterances.size();
  std::vector<Prediction> out(n);
  std::vector<std::exception_ptr> errors(n);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        std::optional<std::string> gold;
        if (!dataset.empty()) gold = dataset[i].gold_label;
        out[i] = predict(utterances[i], embeddings[i], prototypes, config,
                         matrix, schema, gold);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(work, begin, end);
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_predictions(std::ostream& out,
                       std::span<const Prediction> predictions) {
  for (const auto& p : predictions) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["gold"] = p.gold;
    obj["predicted"] = p.predicted;
    if (p.rank_of_gold) {
      obj["rank_of_gold"] = *p.rank_of_gold;
    } else {
      obj["rank_of_gold"] = nullptr;
    }
    obj["gated_mask"] = p.gated_mask;
    out << obj.dump() << '\n';
  }
}

std::vector<Prediction> read_predictions(const std::string& path) {
  std::vector<Prediction> out;
  for_each_jsonl_file(path, [&](const nlohmann::json& obj, std::size_t line) {
    Prediction p;
    p.id = require_string(obj, "id", path, line);
    p.gold = require_string(obj, "gold", path, line);
    p.predicted = require_string(obj, "predicted", path, line);
    if (auto it = obj.find("rank_of_gold"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_unsigned() || it->get<std::size_t>() == 0) {
        throw MalformedRecordError("rank_of_gold must be a positive integer",
                                   path, line);
      }
      p.rank_of_gold = it->get<std::size_t>();
    }
    if (auto it = obj.find("gated_mask"); it != obj.end()) {
      if (!it->is_boolean()) {
        throw MalformedRecordError("gated_mask must be boolean", path, line);
      }
      p.gated_mask = it->get<bool>();
    }
    out.push_back(std::move(p));
  });
  return out;
}

void write_gate_log(std::ostream& out, std::span<const Prediction> predictions) {
  for (const auto& p : predictions) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["was_masked"] = p.was_masked;
    if (p.overlap_gate) {
      obj["overlaps"] = *p.overlap_gate;
    } else {
      obj["overlaps"] = nullptr;
    }
    obj["mask_applied"] = p.gated_mask;
    out << obj.dump() << '\n';
  }
}

}  // namespace dataless
