#include "dataless/corpus.hpp"

#include <cctype>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

namespace {

bool is_separator(char c) {
  return c == '_' || c == '-' || c == '.' || c == ':' || c == ' ' ||
         c == '\t' || c == '\n' || c == '\r';
}

bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)); }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)); }

}  // namespace

std::string tokenize_label(std::string_view label) {
  if (label.empty()) throw InputError("empty intent label");

  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < label.size(); ++i) {
    const char c = label[i];
    if (is_separator(c)) {
      flush();
      continue;
    }
    if (!current.empty() && is_upper(c) && is_lower(current.back())) flush();
    current.push_back(c);
  }
  flush();
  if (tokens.empty()) {
    throw InputError("intent label '" + std::string(label) +
                     "' has no tokens");
  }

  std::string out;
  for (auto& tok : tokens) {
    tok[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0])));
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

IntentSchema::IntentSchema(std::vector<IntentClass> classes)
    : classes_(std::move(classes)) {
  if (classes_.size() < 2) {
    throw InputError("an intent schema needs at least two classes, got " +
                     std::to_string(classes_.size()));
  }
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& label = classes_[i].label;
    if (label.empty()) throw InputError("empty intent label at position " +
                                        std::to_string(i));
    if (!index_.emplace(label, i).second) {
      throw InputError("duplicate intent label '" + label + "'");
    }
  }
}

std::optional<std::size_t> IntentSchema::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t IntentSchema::position(std::string_view label) const {
  if (auto pos = find(label)) return *pos;
  throw InputError("unknown label '" + std::string(label) + "'");
}

IntentClass IntentSchema::make_class(std::string label,
                                     std::string description,
                                     const std::vector<std::string>& entities) {
  IntentClass cls;
  cls.tokenized = tokenize_label(label);
  cls.label = std::move(label);
  cls.description = std::move(description);
  for (const auto& raw : entities) {
    std::string e = to_lower(trim(raw));
    if (e.empty()) {
      throw InputError("empty entity for intent '" + cls.label + "'");
    }
    cls.entities.insert(std::move(e));
  }
  return cls;
}

DescriptionValidation validate_description(const IntentClass& cls) {
  if (trim(cls.description).empty()) {
    throw InputError("empty description for intent '" + cls.label + "'");
  }
  DescriptionValidation result;
  const std::string desc = trim(cls.description);
  for (auto prefix : kDescriptionPrefixes) {
    if (starts_with_icase(desc, prefix)) {
      result.prefix_ok = true;
      break;
    }
  }
  if (!result.prefix_ok) {
    result.warnings.push_back(
        "description of '" + cls.label +
        "' does not start with 'user is asking', 'user is saying' or "
        "'user wants'");
  }

  const auto words = alnum_words(desc);
  const std::unordered_set<std::string> vocab(words.begin(), words.end());
  const auto label_tokens = split_whitespace(tokenize_label(cls.label));
  result.label_token_total = label_tokens.size();
  for (const auto& tok : label_tokens) {
    if (vocab.count(to_lower(tok))) ++result.exact_label_tokens_found;
  }
  if (result.exact_label_tokens_found == 0) {
    result.warnings.push_back("description of '" + cls.label +
                              "' contains none of the label tokens");
  }
  return result;
}

DescriptionStats description_stats(const IntentSchema& schema) {
  DescriptionStats stats;
  stats.n_classes = schema.size();
  double label_tokens = 0;
  double desc_tokens = 0;
  std::size_t with_token = 0;
  std::size_t found = 0;
  std::size_t total = 0;
  for (const auto& cls : schema.classes()) {
    const auto v = validate_description(cls);
    const auto n_label = split_whitespace(cls.tokenized).size();
    const auto n_desc = split_whitespace(cls.description).size();
    label_tokens += static_cast<double>(n_label);
    desc_tokens += static_cast<double>(n_desc);
    if (v.exact_label_tokens_found > 0) ++with_token;
    found += v.exact_label_tokens_found;
    total += v.label_token_total;
  }
  const double n = static_cast<double>(schema.size());
  stats.mean_label_tokens = label_tokens / n;
  stats.mean_description_tokens = desc_tokens / n;
  stats.mean_added_tokens = (desc_tokens - label_tokens) / n;
  stats.pct_with_exact_token = 100.0 * static_cast<double>(with_token) / n;
  stats.pct_label_tokens_preserved =
      total == 0 ? 0.0
                 : 100.0 * static_cast<double>(found) /
                       static_cast<double>(total);
  return stats;
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::jsonl;
  if (name == "tsv") return DatasetFormat::tsv;
  throw InputError("unknown dataset format '" + std::string(name) + "'");
}

IntentSchema load_schema(const std::string& path) {
  std::vector<IntentClass> classes;
  std::unordered_set<std::string> seen;
  for_each_jsonl_file(path, [&](const nlohmann::json& obj, std::size_t line) {
    std::string label = require_string(obj, "label", path, line);
    if (label.empty()) throw MalformedRecordError("empty label", path, line);
    if (!seen.insert(label).second) {
      throw MalformedRecordError("duplicate label '" + label + "'", path, line);
    }
    std::string description = require_string(obj, "description", path, line);
    std::vector<std::string> entities;
    if (auto it = obj.find("entities"); it != obj.end()) {
      if (!it->is_array()) {
        throw MalformedRecordError("'entities' must be an array", path, line);
      }
      for (const auto& e : *it) {
        if (!e.is_string()) {
          throw MalformedRecordError("entities must be strings", path, line);
        }
        entities.push_back(e.get<std::string>());
      }
    }
    try {
      classes.push_back(IntentSchema::make_class(
          std::move(label), std::move(description), entities));
    } catch (const RecordError&) {
      throw;
    } catch (const InputError& e) {
      throw MalformedRecordError(e.what(), path, line);
    }
  });
  return IntentSchema(std::move(classes));
}

void save_schema(const IntentSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (const auto& cls : schema.classes()) {
    nlohmann::json obj;
    obj["label"] = cls.label;
    obj["description"] = cls.description;
    obj["entities"] = nlohmann::json::array();
    for (const auto& e : cls.entities) obj["entities"].push_back(e);
    out << obj.dump() << '\n';
  }
  if (!out) throw InputError("failed writing " + path);
}

std::vector<LabeledUtterance> load_dataset(const std::string& path,
                                           const IntentSchema& schema,
                                           DatasetFormat format) {
  std::vector<LabeledUtterance> out;
  std::unordered_set<std::string> ids;
  auto add = [&](LabeledUtterance u, std::size_t line) {
    if (trim(u.text).empty()) {
      throw MalformedRecordError("empty utterance text", path, line);
    }
    if (u.id.empty()) throw MalformedRecordError("empty id", path, line);
    if (!schema.find(u.gold_label)) {
      throw UnknownLabelError(u.gold_label, path, line);
    }
    if (!ids.insert(u.id).second) {
      throw DuplicateIdError("duplicate id '" + u.id + "'", path, line);
    }
    out.push_back(std::move(u));
  };

  if (format == DatasetFormat::jsonl) {
    for_each_jsonl_file(path, [&](const nlohmann::json& obj, std::size_t line) {
      LabeledUtterance u;
      u.id = require_string(obj, "id", path, line);
      u.text = require_string(obj, "text", path, line);
      u.gold_label = require_string(obj, "label", path, line);
      add(std::move(u), line);
    });
    return out;
  }

  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw MalformedRecordError("expected 3 tab-separated columns", path,
                                 line_no);
    }
    LabeledUtterance u;
    u.id = line.substr(0, t1);
    u.text = line.substr(t1 + 1, t2 - t1 - 1);
    u.gold_label = line.substr(t2 + 1);
    add(std::move(u), line_no);
  }
  return out;
}

}  // namespace dataless
