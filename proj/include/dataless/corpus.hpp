#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dataless {

struct IntentClass {
  std::string label;
  std::string tokenized;
  std::string description;
  // Lowercase, trimmed, non-empty.
  std::set<std::string> entities;
};

// Ordered set of intent classes. Positions are 0..size()-1 and never change
// after construction; every prototype and similarity vector is indexed by them.
class IntentSchema {
 public:
  // Throws InputError on fewer than two classes, empty or duplicate labels.
  explicit IntentSchema(std::vector<IntentClass> classes);

  std::size_t size() const noexcept { return classes_.size(); }
  const IntentClass& at(std::size_t position) const {
    return classes_.at(position);
  }
  const std::vector<IntentClass>& classes() const noexcept { return classes_; }

  std::optional<std::size_t> find(std::string_view label) const;
  // Throws InputError for labels absent from the schema.
  std::size_t position(std::string_view label) const;

  // Builds a class from raw fields: tokenizes the label and normalizes
  // entities (lowercase + trim). Empty entities are rejected.
  static IntentClass make_class(std::string label, std::string description,
                                const std::vector<std::string>& entities);

 private:
  std::vector<IntentClass> classes_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LabeledUtterance {
  std::string id;
  std::string text;
  std::string gold_label;
};

struct DescriptionValidation {
  bool prefix_ok = false;
  std::size_t exact_label_tokens_found = 0;
  std::size_t label_token_total = 0;
  std::vector<std::string> warnings;
};

struct DescriptionStats {
  std::size_t n_classes = 0;
  double mean_label_tokens = 0.0;
  double mean_description_tokens = 0.0;
  double mean_added_tokens = 0.0;
  // Percent of classes whose description contains at least one label token.
  double pct_with_exact_token = 0.0;
  // Percent of all label tokens (pooled across classes) found in descriptions.
  double pct_label_tokens_preserved = 0.0;
};

// Splits on '_', '-', '.', ':', whitespace and lower->upper camelCase
// boundaries, upper-cases each token's first character and joins with single
// spaces. Uppercase runs stay together ("NLU"). Throws InputError when the
// label is empty or contains nothing but separators.
std::string tokenize_label(std::string_view label);

// Declarative prefixes accepted for descriptions, lowercase.
inline constexpr std::string_view kDescriptionPrefixes[] = {
    "user is asking", "user is saying", "user wants"};

DescriptionValidation validate_description(const IntentClass& cls);

// Runs validate_description on every class; validation errors propagate.
DescriptionStats description_stats(const IntentSchema& schema);

enum class DatasetFormat { jsonl, tsv };

DatasetFormat parse_dataset_format(std::string_view name);

// JSONL {"label", "description", "entities"}; line order is class order.
IntentSchema load_schema(const std::string& path);
void save_schema(const IntentSchema& schema, const std::string& path);

// JSONL {"id", "text", "label"} or TSV "id<TAB>text<TAB>label". Every label
// must resolve in the schema and ids must be unique.
std::vector<LabeledUtterance> load_dataset(const std::string& path,
                                           const IntentSchema& schema,
                                           DatasetFormat format =
                                               DatasetFormat::jsonl);

}  // namespace dataless
