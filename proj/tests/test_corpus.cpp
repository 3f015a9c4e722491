#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace dataless;
using namespace testing_support;

TEST(TokenizeLabel, CamelCase) {
  EXPECT_EQ(tokenize_label("AddToPlaylist"), "Add To Playlist");
  EXPECT_EQ(tokenize_label("SearchScreeningEvent"), "Search Screening Event");
}

TEST(TokenizeLabel, Separators) {
  EXPECT_EQ(tokenize_label("oil_change_how"), "Oil Change How");
  EXPECT_EQ(tokenize_label("a-b.c:d"), "A B C D");
  EXPECT_EQ(tokenize_label("__a__b__"), "A B");
}

TEST(TokenizeLabel, SingleToken) { EXPECT_EQ(tokenize_label("flight"), "Flight"); }

TEST(TokenizeLabel, UppercaseRunStaysTogether) {
  EXPECT_EQ(tokenize_label("NLU"), "NLU");
  EXPECT_EQ(tokenize_label("askNLUQuestion"), "Ask NLUQuestion");
}

TEST(TokenizeLabel, EmptyOrSeparatorOnlyIsError) {
  EXPECT_THROW(tokenize_label(""), InputError);
  EXPECT_THROW(tokenize_label("_-.:"), InputError);
}

TEST(TokenizeLabel, IdempotentAndCleanOnGeneratedLabels) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "abcXYZq_-.: 09";
  for (int n = 0; n < 5000; ++n) {
    std::string label;
    const int len = 1 + static_cast<int>(rng() % 16);
    for (int i = 0; i < len; ++i) label.push_back(alphabet[rng() % alphabet.size()]);
    std::string once;
    try {
      once = tokenize_label(label);
    } catch (const InputError&) {
      continue;  // separator-only labels
    }
    EXPECT_EQ(tokenize_label(once), once) << label;
    EXPECT_EQ(once.find_first_of("_-.:"), std::string::npos) << label;
    EXPECT_EQ(once.find("  "), std::string::npos) << label;
    EXPECT_NE(once.front(), ' ');
    EXPECT_NE(once.back(), ' ');
  }
}

TEST(ValidateDescription, DeclarativeWithLabelToken) {
  const auto cls = IntentSchema::make_class(
      "abbreviation", "user is asking what an abbreviation stands for or means", {});
  const auto v = validate_description(cls);
  EXPECT_TRUE(v.prefix_ok);
  EXPECT_EQ(v.exact_label_tokens_found, 1u);
  EXPECT_EQ(v.label_token_total, 1u);
  EXPECT_TRUE(v.warnings.empty());
}

TEST(ValidateDescription, BadPrefixAndNoTokenGiveTwoWarnings) {
  const auto cls =
      IntentSchema::make_class("maybe", "user is expressing uncertainty", {});
  const auto v = validate_description(cls);
  EXPECT_FALSE(v.prefix_ok);
  EXPECT_EQ(v.exact_label_tokens_found, 0u);
  EXPECT_EQ(v.label_token_total, 1u);
  EXPECT_EQ(v.warnings.size(), 2u);
}

TEST(ValidateDescription, EmptyDescriptionIsError) {
  const auto cls = IntentSchema::make_class("x", "", {});
  EXPECT_THROW(validate_description(cls), InputError);
}

TEST(ValidateDescription, WholeWordCaseInsensitiveMatch) {
  // "Play" must not match inside "playlist"; "Music" matches "MUSIC".
  const auto cls =
      IntentSchema::make_class("PlayMusic", "User wants MUSIC on a playlist", {});
  const auto v = validate_description(cls);
  EXPECT_TRUE(v.prefix_ok);
  EXPECT_EQ(v.exact_label_tokens_found, 1u);
  EXPECT_EQ(v.label_token_total, 2u);
}

TEST(DescriptionStats, TwoClassHandCount) {
  IntentSchema schema({IntentSchema::make_class("a_b", "user wants a b", {}),
                       IntentSchema::make_class("c", "user is asking about c", {})});
  const auto s = description_stats(schema);
  EXPECT_DOUBLE_EQ(s.mean_added_tokens, 3.0);
  EXPECT_DOUBLE_EQ(s.pct_with_exact_token, 100.0);
  EXPECT_DOUBLE_EQ(s.pct_label_tokens_preserved, 100.0);
}

TEST(DescriptionStats, DescriptionEqualToTokenizedLabel) {
  IntentSchema schema({IntentSchema::make_class("GetWeather", "Get Weather", {}),
                       IntentSchema::make_class("book_flight", "Book Flight", {})});
  const auto s = description_stats(schema);
  EXPECT_DOUBLE_EQ(s.mean_added_tokens, 0.0);
  EXPECT_DOUBLE_EQ(s.pct_with_exact_token, 100.0);
  EXPECT_DOUBLE_EQ(s.pct_label_tokens_preserved, 100.0);
}

TEST(Schema, RejectsTooFewAndDuplicates) {
  EXPECT_THROW(IntentSchema({IntentSchema::make_class("a", "user wants a", {})}),
               InputError);
  EXPECT_THROW(IntentSchema({IntentSchema::make_class("a", "user wants a", {}),
                             IntentSchema::make_class("a", "user wants a", {})}),
               InputError);
}

TEST(Schema, EntitiesNormalized) {
  const auto cls = IntentSchema::make_class("a", "user wants a", {"  Song ", "SONG", "Play List"});
  EXPECT_EQ(cls.entities, (std::set<std::string>{"song", "play list"}));
  EXPECT_THROW(IntentSchema::make_class("a", "d", {"  "}), InputError);
}

TEST(Schema, SnipsFixtureHasSevenClasses) {
  const auto schema = load_schema(fixture("snips_schema.jsonl"));
  EXPECT_EQ(schema.size(), 7u);
  EXPECT_EQ(schema.at(0).label, "AddToPlaylist");
  EXPECT_EQ(schema.at(0).tokenized, "Add To Playlist");
  EXPECT_EQ(schema.position("SearchScreeningEvent"), 6u);
  const auto data = load_dataset(fixture("snips_dataset.jsonl"), schema);
  EXPECT_EQ(data.size(), 50u);
}

TEST(Schema, SaveLoadRoundTripKeepsOrder) {
  TempDir dir;
  const auto schema = load_schema(fixture("atis_schema.jsonl"));
  save_schema(schema, dir.file("schema.jsonl"));
  const auto again = load_schema(dir.file("schema.jsonl"));
  ASSERT_EQ(again.size(), schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    EXPECT_EQ(again.at(i).label, schema.at(i).label);
    EXPECT_EQ(again.at(i).tokenized, schema.at(i).tokenized);
    EXPECT_EQ(again.at(i).description, schema.at(i).description);
    EXPECT_EQ(again.at(i).entities, schema.at(i).entities);
  }
}

class DatasetLoading : public ::testing::Test {
 protected:
  IntentSchema schema = make_schema({"flight", "meal", "airline"});
  TempDir dir;
};

TEST_F(DatasetLoading, ValidJsonl) {
  write_file(dir.file("d.jsonl"),
             R"({"id":"1","text":"show flights","label":"flight"})" "\n"
             R"({"id":"2","text":"any food","label":"meal"})" "\n\n"
             R"({"id":"3","text":"which carrier","label":"airline"})" "\n");
  const auto data = load_dataset(dir.file("d.jsonl"), schema);
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[1].id, "2");
  EXPECT_EQ(data[1].text, "any food");
  EXPECT_EQ(data[2].gold_label, "airline");
}

TEST_F(DatasetLoading, ValidTsv) {
  write_file(dir.file("d.tsv"), "1\tshow flights\tflight\n2\tany food\tmeal\n");
  const auto data = load_dataset(dir.file("d.tsv"), schema, DatasetFormat::tsv);
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].gold_label, "flight");
}

TEST_F(DatasetLoading, UnknownLabelNamesLabelAndLine) {
  write_file(dir.file("d.jsonl"),
             R"({"id":"1","text":"a","label":"flight"})" "\n"
             R"({"id":"2","text":"b","label":"hotel"})" "\n");
  try {
    load_dataset(dir.file("d.jsonl"), schema);
    FAIL() << "expected UnknownLabelError";
  } catch (const UnknownLabelError& e) {
    EXPECT_EQ(e.label(), "hotel");
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("hotel"), std::string::npos);
  }
}

TEST_F(DatasetLoading, DuplicateId) {
  write_file(dir.file("d.jsonl"),
             R"({"id":"1","text":"a","label":"flight"})" "\n"
             R"({"id":"1","text":"b","label":"meal"})" "\n");
  try {
    load_dataset(dir.file("d.jsonl"), schema);
    FAIL() << "expected DuplicateIdError";
  } catch (const DuplicateIdError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST_F(DatasetLoading, MalformedRecords) {
  write_file(dir.file("bad_json.jsonl"),
             R"({"id":"1","text":"a","label":"flight"})" "\n{not json\n");
  try {
    load_dataset(dir.file("bad_json.jsonl"), schema);
    FAIL() << "expected MalformedRecordError";
  } catch (const MalformedRecordError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  write_file(dir.file("missing.jsonl"), R"({"id":"1","label":"flight"})" "\n");
  EXPECT_THROW(load_dataset(dir.file("missing.jsonl"), schema), MalformedRecordError);
  write_file(dir.file("empty.jsonl"), R"({"id":"1","text":"  ","label":"flight"})" "\n");
  EXPECT_THROW(load_dataset(dir.file("empty.jsonl"), schema), MalformedRecordError);
  write_file(dir.file("cols.tsv"), "1\tonly two\n");
  EXPECT_THROW(load_dataset(dir.file("cols.tsv"), schema, DatasetFormat::tsv),
               MalformedRecordError);
}

TEST_F(DatasetLoading, MissingFile) {
  EXPECT_THROW(load_dataset(dir.file("nope.jsonl"), schema), InputError);
}
