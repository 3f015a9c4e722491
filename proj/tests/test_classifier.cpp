#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace dataless;
using namespace testing_support;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

Embedding emb(std::vector<double> v) { return Embedding{std::move(v), "m"}; }

PrototypeSet single_prototypes(const std::vector<std::vector<double>>& vectors) {
  PrototypeSet set;
  set.mode = PrototypeMode::description;
  set.model_id = "m";
  for (const auto& v : vectors) set.classes.push_back({emb(v)});
  return set;
}

AugmentedUtterance plain(const std::string& id, bool masked = false) {
  AugmentedUtterance u;
  u.id = id;
  u.text = "text " + id;
  u.parsed = true;
  u.was_masked = masked;
  if (masked) u.masked = "text [MASK]";
  return u;
}

}  // namespace

TEST(RunConfig, ValidationAndComponents) {
  EXPECT_THROW(RunConfig::from_components(""), InputError);
  EXPECT_THROW(RunConfig::from_components("EO"), InputError);
  EXPECT_THROW(RunConfig::from_components("EX"), InputError);
  const auto c = RunConfig::from_components("E+P+M+O");
  EXPECT_TRUE(c.use_E && c.use_P && c.use_M && c.use_O);
  EXPECT_EQ(c.components(), "EPMO");
  EXPECT_EQ(c.k_overlap, 3u);
  EXPECT_FALSE(c.normalize_components);
  RunConfig zero_k = c;
  zero_k.k_overlap = 0;
  EXPECT_THROW(zero_k.validate(), InputError);

  std::vector<std::string> names;
  for (const auto& cfg : default_ablation_configs()) names.push_back(cfg.components());
  EXPECT_EQ(names, (std::vector<std::string>{"E", "P", "M", "EP", "EM", "PM", "EPM",
                                             "EMO", "PMO", "EPMO"}));
}

TEST(Prototypes, TokenizedAndDescriptionModes) {
  const auto schema = load_schema(fixture("snips_schema.jsonl"));
  HashingEmbedder e(64, 1);
  EmbeddingCache cache;
  const auto tok = build_prototypes(schema, PrototypeMode::tokenized, e, cache);
  ASSERT_EQ(tok.classes.size(), 7u);
  EXPECT_EQ(tok.classes[0][0].values, e.embed_one("Add To Playlist"));
  const auto d1 = build_prototypes(schema, PrototypeMode::description, e, cache);
  const auto d2 = build_prototypes(schema, PrototypeMode::description, e, cache);
  ASSERT_EQ(d1.classes.size(), 7u);
  for (std::size_t c = 0; c < 7; ++c) {
    EXPECT_EQ(d1.classes[c][0].values, d2.classes[c][0].values);
    EXPECT_EQ(d1.classes[c][0].values, e.embed_one(schema.at(c).description));
  }
  EXPECT_EQ(d1.dim(), 64u);
  EXPECT_EQ(d1.model_id, e.model_id());
}

TEST(Prototypes, DescriptionTextEmbeddedVerbatim) {
  const auto schema = make_schema({"a", "b"});
  IntentSchema cased({IntentSchema::make_class("a", "User Wants A", {}),
                      IntentSchema::make_class("b", "user wants b", {})});
  MapProvider provider({{"User Wants A", {1, 0}}, {"user wants b", {0, 1}}});
  EmbeddingCache cache;
  build_prototypes(cased, PrototypeMode::description, provider, cache);
  EXPECT_EQ(provider.requested, (std::vector<std::string>{"User Wants A", "user wants b"}));
}

class SyntheticTest : public ::testing::Test {
 protected:
  SyntheticTest() {
    std::vector<IntentClass> classes;
    for (int c = 0; c < 4; ++c) {
      classes.push_back(IntentSchema::make_class("intent" + std::to_string(c),
                                                 "user wants thing " + std::to_string(c), {}));
      std::vector<std::string> ex;
      for (int i = 0; i < 20; ++i) {
        ex.push_back("example " + std::to_string(i) + " of class " + std::to_string(c) +
                     " token" + std::to_string(c * 100 + i));
      }
      pool.examples.push_back(ex);
    }
    schema = std::make_unique<IntentSchema>(std::move(classes));
    full = build_prototypes(*schema, PrototypeMode::synthetic, embedder, cache,
                            {.pool = &pool, .synthetic_k = {}, .seed = 0, .repetition = 0, .embed = {}});
  }

  HashingEmbedder embedder{64, 2};
  EmbeddingCache cache;
  SyntheticPool pool;
  std::unique_ptr<IntentSchema> schema;
  PrototypeSet full;
};

TEST_F(SyntheticTest, SamplesKDistinctPoolMembersPerClass) {
  ASSERT_EQ(full.classes.size(), 4u);
  for (const auto& c : full.classes) EXPECT_EQ(c.size(), 20u);
  const auto s = sample_synthetic(full, 5, 99, 0);
  for (std::size_t c = 0; c < 4; ++c) {
    ASSERT_EQ(s.classes[c].size(), 5u);
    std::vector<std::size_t> positions;
    for (const auto& e : s.classes[c]) {
      auto it = std::find_if(full.classes[c].begin(), full.classes[c].end(),
                             [&](const Embedding& f) { return f.values == e.values; });
      ASSERT_NE(it, full.classes[c].end());
      positions.push_back(static_cast<std::size_t>(it - full.classes[c].begin()));
    }
    EXPECT_TRUE(std::is_sorted(positions.begin(), positions.end()));
    EXPECT_EQ(std::set<std::size_t>(positions.begin(), positions.end()).size(), 5u);
  }
  // Same seed and repetition reproduce; other repetitions resample.
  const auto again = sample_synthetic(full, 5, 99, 0);
  bool any_difference = false;
  for (std::size_t rep = 1; rep < 6; ++rep) {
    const auto other = sample_synthetic(full, 5, 99, rep);
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < 5; ++i) {
        any_difference |= other.classes[c][i].values != s.classes[c][i].values;
      }
    }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(again.classes[c][i].values, s.classes[c][i].values);
    }
  }
  EXPECT_TRUE(any_difference);
}

TEST_F(SyntheticTest, BuildWithKMatchesSampling) {
  const auto built = build_prototypes(*schema, PrototypeMode::synthetic, embedder, cache,
                                      {.pool = &pool, .synthetic_k = 5, .seed = 7, .repetition = 2, .embed = {}});
  const auto sampled = sample_synthetic(full, 5, 7, 2);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(built.classes[c][i].values, sampled.classes[c][i].values);
    }
  }
}

TEST_F(SyntheticTest, WholePoolIsSeedIndependent) {
  const auto a = sample_synthetic(full, 20, 1, 0);
  const auto b = sample_synthetic(full, 20, 123456, 9);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto h = random_vector(rng, 64);
    EXPECT_EQ(similarities(h, a), similarities(h, b));
    EXPECT_EQ(argmax(similarities(h, a)), argmax(similarities(h, full)));
  }
}

TEST_F(SyntheticTest, KLargerThanPoolIsError) {
  EXPECT_THROW(sample_synthetic(full, 21, 0, 0), InputError);
  EXPECT_THROW(sample_synthetic(full, 0, 0, 0), InputError);
  EXPECT_THROW(build_prototypes(*schema, PrototypeMode::synthetic, embedder, cache, {}),
               InputError);
}

TEST_F(SyntheticTest, ScoreIsMeanOfExampleCosines) {
  const auto s = sample_synthetic(full, 5, 3, 0);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto h = random_vector(rng, 64);
    const auto sims = similarities(h, s);
    for (std::size_t c = 0; c < 4; ++c) {
      double sum = 0;
      for (const auto& e : s.classes[c]) sum += ref_cosine(h, e.values);
      EXPECT_NEAR(sims[c], sum / 5.0, 1e-12);
    }
  }
}

TEST(SyntheticPoolFile, LoadsAndValidates) {
  const auto schema = load_schema(fixture("snips_schema.jsonl"));
  const auto pool = load_synthetic_pool(fixture("snips_synthetic.jsonl"), schema);
  ASSERT_EQ(pool.examples.size(), 7u);
  for (const auto& ex : pool.examples) EXPECT_EQ(ex.size(), 6u);
  TempDir dir;
  write_file(dir.file("partial.jsonl"), R"({"label":"AddToPlaylist","examples":["a"]})" "\n");
  EXPECT_THROW(load_synthetic_pool(dir.file("partial.jsonl"), schema), InputError);
  write_file(dir.file("unknown.jsonl"), R"({"label":"Nope","examples":["a"]})" "\n");
  EXPECT_THROW(load_synthetic_pool(dir.file("unknown.jsonl"), schema), UnknownLabelError);
}

TEST(Combined, EOnlyIsUtteranceEmbedding) {
  std::mt19937_64 rng(1);
  const auto protos = single_prototypes({random_vector(rng, 8), random_vector(rng, 8)});
  const auto m = OverlapMatrix::build(make_schema({"a", "b"}));
  const auto config = RunConfig::from_components("E");
  UtteranceEmbeddings ue{emb(random_vector(rng, 8)), emb(random_vector(rng, 8)),
                         emb(random_vector(rng, 8))};
  const auto r = combined_representation(plain("u", true), ue, protos, config, m);
  EXPECT_EQ(r.h.values, ue.text.values);
  EXPECT_FALSE(r.mask_applied);
  EXPECT_FALSE(r.overlap_gate.has_value());
}

TEST(Combined, UnmaskedUtteranceContributesNoMask) {
  std::mt19937_64 rng(2);
  const auto protos = single_prototypes({random_vector(rng, 8), random_vector(rng, 8)});
  const auto m = OverlapMatrix::build(make_schema({"a", "b"}));
  UtteranceEmbeddings ue{emb(random_vector(rng, 8)), std::nullopt, std::nullopt};
  for (const char* spec : {"EM", "EMO"}) {
    const auto r = combined_representation(plain("u", false), ue, protos,
                                           RunConfig::from_components(spec), m);
    EXPECT_EQ(r.h.values, ue.text.values) << spec;
    EXPECT_FALSE(r.mask_applied);
  }
}

TEST(Combined, AllComponentsMatchStraightLineRecomputation) {
  // Four classes; 0-1 share "song", 2-3 share nothing with anyone.
  const std::vector<std::set<std::string>> entities = {
      {"song", "playlist"}, {"song"}, {"restaurant"}, {"weather"}};
  const auto schema = make_schema({"AddToPlaylist", "PlayMusic", "BookRestaurant", "GetWeather"},
                                  {{"song", "playlist"}, {"song"}, {"restaurant"}, {"weather"}});
  const auto matrix = OverlapMatrix::build(schema);
  std::mt19937_64 rng(21);
  std::vector<std::vector<double>> protos_raw;
  for (int c = 0; c < 4; ++c) protos_raw.push_back(random_vector(rng, 6));
  const auto protos = single_prototypes(protos_raw);
  const auto config = RunConfig::from_components("EPMO");

  int gate_on = 0, gate_off = 0;
  for (int i = 0; i < 400; ++i) {
    const auto t = random_vector(rng, 6);
    const auto p = random_vector(rng, 6);
    const auto mk = random_vector(rng, 6);
    const bool was_masked = i % 5 != 0;
    auto u = plain("u" + std::to_string(i), was_masked);
    UtteranceEmbeddings ue{emb(t), emb(p), was_masked ? std::optional(emb(mk)) : std::nullopt};

    // Straight-line recomputation.
    std::vector<double> ranking(6), expected(6);
    for (int d = 0; d < 6; ++d) ranking[d] = t[d] + p[d];
    std::vector<double> rank_sims;
    for (const auto& pr : protos_raw) rank_sims.push_back(ref_cosine(ranking, pr));
    const bool gate = oracle::overlaps(rank_sims, 3, entities);
    const double indicator = was_masked ? 1.0 : 0.0;
    for (int d = 0; d < 6; ++d) expected[d] = t[d] + p[d] + mk[d] * (gate ? 1.0 : 0.0) * indicator;
    (gate && was_masked ? gate_on : gate_off)++;

    const auto r = combined_representation(u, ue, protos, config, matrix);
    for (int d = 0; d < 6; ++d) EXPECT_NEAR(r.h.values[d], expected[d], 1e-9);
    EXPECT_EQ(r.mask_applied, gate && was_masked);
    const auto pred = predict(u, ue, protos, config, matrix, schema, std::string("PlayMusic"));
    for (int c = 0; c < 4; ++c) {
      EXPECT_NEAR(pred.similarities[c], ref_cosine(expected, protos_raw[c]), 1e-9);
    }
    EXPECT_EQ(pred.predicted_index, oracle::nearest(expected, protos_raw));
    EXPECT_EQ(pred.gated_mask, gate && was_masked);
  }
  EXPECT_GT(gate_on, 20);
  EXPECT_GT(gate_off, 20);
}

TEST(Combined, GateRankingWithoutParaphraseOption) {
  const auto schema = make_schema({"a", "b", "c"}, {{"x"}, {"x"}, {"y"}});
  const auto matrix = OverlapMatrix::build(schema);
  // Text ranks a, c, b (gate with k=2 off); text+paraphrase ranks a, b (gate on).
  const auto protos = single_prototypes({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  UtteranceEmbeddings ue{emb({1, 0, 0.5}), emb({0, 3, 0}), emb({5, 5, 5})};
  auto config = RunConfig::from_components("EPMO");
  config.k_overlap = 2;
  auto u = plain("u", true);
  EXPECT_TRUE(combined_representation(u, ue, protos, config, matrix).mask_applied);
  config.gate_uses_paraphrase = false;
  EXPECT_FALSE(combined_representation(u, ue, protos, config, matrix).mask_applied);
  // With E and P off the ranking falls back to the utterance embedding.
  auto mo = RunConfig::from_components("MO");
  mo.k_overlap = 2;
  EXPECT_THROW(combined_representation(u, ue, protos, mo, matrix), DegradedInputError);
}

TEST(Combined, NormalizedComponentsSumUnitVectors) {
  const auto protos = single_prototypes({{1, 0}, {0, 1}});
  const auto m = OverlapMatrix::build(make_schema({"a", "b"}));
  UtteranceEmbeddings ue{emb({10, 0}), emb({0, 0.5}), emb({3, 4})};
  auto config = RunConfig::from_components("EPM");
  config.normalize_components = true;
  const auto r = combined_representation(plain("u", true), ue, protos, config, m);
  EXPECT_NEAR(r.h.values[0], 1.0 + 0.6, 1e-12);
  EXPECT_NEAR(r.h.values[1], 1.0 + 0.8, 1e-12);
}

TEST(Combined, MissingComponentsDegradeOrFail) {
  const auto schema = make_schema({"a", "b"});
  const auto protos = single_prototypes({{1, 0}, {0, 1}});
  const auto m = OverlapMatrix::build(schema);
  UtteranceEmbeddings ue{emb({1, 0.2}), std::nullopt, std::nullopt};
  auto u = plain("lonely", false);

  const auto p = predict(u, ue, protos, RunConfig::from_components("EP"), m, schema);
  EXPECT_TRUE(p.degraded);
  EXPECT_EQ(p.predicted, "a");
  u.parsed = false;
  EXPECT_TRUE(predict(u, ue, protos, RunConfig::from_components("EM"), m, schema).degraded);
  EXPECT_FALSE(predict(u, ue, protos, RunConfig::from_components("E"), m, schema).degraded);

  try {
    combined_representation(u, ue, protos, RunConfig::from_components("P"), m);
    FAIL() << "expected DegradedInputError";
  } catch (const DegradedInputError& e) {
    EXPECT_EQ(e.utterance_id(), "lonely");
  }
  EXPECT_THROW(combined_representation(u, ue, protos, RunConfig::from_components("M"), m),
               DegradedInputError);
  // Cancelling components are an error only when exactly zero.
  UtteranceEmbeddings cancel{emb({1, 0}), emb({-1, 0}), std::nullopt};
  EXPECT_THROW(combined_representation(u, cancel, protos, RunConfig::from_components("EP"), m),
               DegradedInputError);
}

TEST(Predict, SelfMatchWithDescriptionText) {
  const auto schema = load_schema(fixture("snips_schema.jsonl"));
  HashingEmbedder e(128, 5);
  EmbeddingCache cache;
  const auto protos = build_prototypes(schema, PrototypeMode::description, e, cache);
  const auto m = OverlapMatrix::build(schema);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    AugmentedUtterance u;
    u.id = "self" + std::to_string(c);
    u.text = schema.at(c).description;
    UtteranceEmbeddings ue{Embedding{e.embed_one(u.text), e.model_id()}, {}, {}};
    const auto p = predict(u, ue, protos, RunConfig{}, m, schema, schema.at(c).label);
    EXPECT_EQ(p.predicted_index, c);
    EXPECT_NEAR(p.similarities[c], 1.0, 1e-12);
    EXPECT_EQ(p.rank_of_gold, 1u);
  }
}

TEST(Predict, ArgmaxTieBreakAndRanks) {
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.9, 0.9}), 1u);
  const std::vector<double> s = {0.2, 0.9, 0.9, 0.1};
  EXPECT_EQ(rank_of(s, 1), 1u);
  EXPECT_EQ(rank_of(s, 2), 2u);
  EXPECT_EQ(rank_of(s, 0), 3u);
  EXPECT_EQ(rank_of(s, 3), 4u);
  EXPECT_THROW(argmax(std::vector<double>{}), InputError);
}

TEST(Predict, BruteForceAgreementAndScaleInvariance) {
  std::mt19937_64 rng(31);
  HashingEmbedder e(64, 77);
  std::vector<std::string> labels;
  std::vector<std::vector<double>> protos_raw;
  std::vector<IntentClass> classes;
  for (int c = 0; c < 12; ++c) {
    std::string desc = "user wants";
    for (int w = 0; w < 4; ++w) desc += " w" + std::to_string(rng() % 60);
    classes.push_back(IntentSchema::make_class("c" + std::to_string(c), desc, {}));
    protos_raw.push_back(e.embed_one(desc));
  }
  IntentSchema schema(std::move(classes));
  EmbeddingCache cache;
  const auto protos = build_prototypes(schema, PrototypeMode::description, e, cache);
  const auto m = OverlapMatrix::build(schema);
  for (int i = 0; i < 200; ++i) {
    AugmentedUtterance u;
    u.id = "u" + std::to_string(i);
    for (int w = 0; w < 5; ++w) u.text += " w" + std::to_string(rng() % 60);
    auto v = e.embed_one(u.text);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0; })) continue;
    UtteranceEmbeddings ue{Embedding{v, e.model_id()}, {}, {}};
    const auto p = predict(u, ue, protos, RunConfig{}, m, schema);
    EXPECT_EQ(p.predicted_index, oracle::nearest(v, protos_raw)) << u.text;
    for (double a : {1e-6, 0.3, 7.0, 1e6}) {
      UtteranceEmbeddings scaled = ue;
      for (auto& x : scaled.text.values) x *= a;
      EXPECT_EQ(predict(u, scaled, protos, RunConfig{}, m, schema).predicted_index,
                p.predicted_index);
    }
  }
}

TEST(ClassifyAll, WorkerCountDoesNotChangeOutput) {
  const auto schema = load_schema(fixture("snips_schema.jsonl"));
  const auto dataset = load_dataset(fixture("snips_dataset.jsonl"), schema);
  const auto doc = parse_conllu_file(fixture("snips.conllu"));
  ParaphraseSource para(fixture("snips_paraphrases.jsonl"));
  const auto aug = augment_dataset(dataset, &para, &doc.trees);
  HashingEmbedder e(64, 0);
  EmbeddingCache cache;
  const auto ue = embed_utterances(aug, e, cache);
  const auto protos = build_prototypes(schema, PrototypeMode::description, e, cache);
  const auto m = OverlapMatrix::build(schema);
  const auto config = RunConfig::from_components("EPMO");
  std::string reference;
  for (std::size_t workers : {1, 2, 3, 8, 64}) {
    const auto preds = classify_all(schema, dataset, aug, ue, protos, config, m, workers);
    std::ostringstream out, gates;
    write_predictions(out, preds);
    write_gate_log(gates, preds);
    if (reference.empty()) reference = out.str() + gates.str();
    EXPECT_EQ(out.str() + gates.str(), reference) << workers;
  }
}

TEST(ClassifyAll, ErrorsSurfaceFromFailingUtterance) {
  const auto schema = make_schema({"a", "b"});
  const auto protos = single_prototypes({{1, 0}, {0, 1}});
  const auto m = OverlapMatrix::build(schema);
  std::vector<AugmentedUtterance> aug = {plain("ok"), plain("bad")};
  std::vector<UtteranceEmbeddings> ue = {{emb({1, 0}), emb({1, 1}), {}},
                                         {emb({1, 0}), std::nullopt, {}}};
  try {
    classify_all(schema, {}, aug, ue, protos, RunConfig::from_components("P"), m, 2);
    FAIL() << "expected DegradedInputError";
  } catch (const DegradedInputError& e) {
    EXPECT_EQ(e.utterance_id(), "bad");
  }
}

TEST(PredictionFiles, FormatAndRoundTrip) {
  std::vector<Prediction> preds = {make_prediction("a", "b", 2), make_prediction("b", "b")};
  preds[0].id = "x1";
  preds[0].gated_mask = true;
  preds[1].id = "x2";
  std::ostringstream out;
  write_predictions(out, preds);
  EXPECT_EQ(out.str(),
            "{\"id\":\"x1\",\"gold\":\"a\",\"predicted\":\"b\",\"rank_of_gold\":2,\"gated_mask\":true}\n"
            "{\"id\":\"x2\",\"gold\":\"b\",\"predicted\":\"b\",\"rank_of_gold\":null,\"gated_mask\":false}\n");
  TempDir dir;
  write_file(dir.file("p.jsonl"), out.str());
  const auto back = read_predictions(dir.file("p.jsonl"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].rank_of_gold, 2u);
  EXPECT_TRUE(back[0].gated_mask);
  EXPECT_FALSE(back[1].rank_of_gold.has_value());
  write_file(dir.file("bad.jsonl"), R"({"id":"x","gold":"a","predicted":"a","rank_of_gold":0})" "\n");
  EXPECT_THROW(read_predictions(dir.file("bad.jsonl")), MalformedRecordError);
}
