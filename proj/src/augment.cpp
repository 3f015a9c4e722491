#include "dataless/augment.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

namespace {

std::string base_relation(std::string_view deprel) {
  return to_lower(deprel.substr(0, deprel.find(':')));
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct SentenceBuffer {
  std::string sent_id;
  std::size_t first_line = 0;
  std::vector<std::pair<std::string, std::size_t>> lines;  // token lines
  std::string error;
  std::size_t error_line = 0;
};

DepTree build_tree(SentenceBuffer& buf) {
  DepTree tree;
  tree.id = buf.sent_id;
  for (const auto& [text, line_no] : buf.lines) {
    const auto cols = split_tabs(text);
    if (cols.size() != 10) {
      buf.error_line = line_no;
      throw InputError("expected 10 tab-separated columns, got " +
                       std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos ||
        cols[0].find('.') != std::string_view::npos) {
      continue;
    }
    DepToken tok;
    if (!parse_index(cols[0], tok.index)) {
      buf.error_line = line_no;
      throw InputError("bad token ID '" + std::string(cols[0]) + "'");
    }
    if (tok.index != tree.tokens.size() + 1) {
      buf.error_line = line_no;
      throw InputError("token IDs must run 1..n in order, got " +
                       std::to_string(tok.index));
    }
    if (!parse_index(cols[6], tok.head)) {
      buf.error_line = line_no;
      throw InputError("bad HEAD '" + std::string(cols[6]) + "'");
    }
    tok.form = std::string(cols[1]);
    tok.deprel = std::string(cols[7]);
    tree.tokens.push_back(std::move(tok));
  }
  if (tree.tokens.empty()) {
    buf.error_line = buf.first_line;
    throw InputError("sentence has no tokens");
  }
  buf.error_line = buf.first_line;
  validate_tree(tree);
  return tree;
}

}  // namespace

void validate_tree(const DepTree& tree) {
  const std::size_t n = tree.tokens.size();
  if (n == 0) throw InputError("tree '" + tree.id + "' is empty");
  std::size_t roots = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tok = tree.tokens[i];
    if (tok.index != i + 1) {
      throw InputError("tree '" + tree.id + "': token " + std::to_string(i + 1) +
                       " carries index " + std::to_string(tok.index));
    }
    if (tok.head > n) {
      throw InputError("tree '" + tree.id + "': head " +
                       std::to_string(tok.head) + " of token " +
                       std::to_string(tok.index) + " out of range");
    }
    if (tok.head == tok.index) {
      throw InputError("tree '" + tree.id + "': token " +
                       std::to_string(tok.index) + " heads itself (cycle)");
    }
    if (tok.head == 0) ++roots;
  }
  if (roots != 1) {
    throw InputError("tree '" + tree.id + "' has " + std::to_string(roots) +
                     " roots, expected 1");
  }
  // 0 = unvisited, 1 = on current path, 2 = reaches root.
  std::vector<int> state(n + 1, 0);
  state[0] = 2;
  for (std::size_t start = 1; start <= n; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = tree.tokens[cur - 1].head;
    }
    if (state[cur] == 1) {
      throw InputError("tree '" + tree.id + "': cycle through token " +
                       std::to_string(cur));
    }
    for (auto p : path) state[p] = 2;
  }
}

ConlluDocument parse_conllu(std::istream& in, const std::string& source,
                            bool strict) {
  ConlluDocument doc;
  SentenceBuffer buf;
  std::size_t line_no = 0;

  auto finish = [&]() {
    if (buf.lines.empty() && buf.sent_id.empty()) return;
    try {
      if (buf.sent_id.empty()) {
        buf.error_line = buf.first_line;
        throw InputError("sentence without '# sent_id' comment");
      }
      DepTree tree = build_tree(buf);
      if (doc.trees.count(tree.id)) {
        buf.error_line = buf.first_line;
        throw InputError("duplicate sent_id '" + tree.id + "'");
      }
      doc.trees.emplace(tree.id, std::move(tree));
    } catch (const InputError& e) {
      std::string where = buf.sent_id.empty() ? std::string("sentence")
                                              : "sent_id " + buf.sent_id;
      if (strict) {
        throw MalformedRecordError(where + ": " + e.what(), source,
                                   buf.error_line);
      }
      doc.issues.push_back({buf.sent_id, buf.error_line, e.what()});
      warn(source + ":" + std::to_string(buf.error_line) + ": " + where +
           ": " + e.what());
    }
    buf = SentenceBuffer{};
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      finish();
      continue;
    }
    if (buf.first_line == 0) buf.first_line = line_no;
    if (line[0] == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      if (body.rfind("sent_id", 0) == 0) {
        const auto eq = body.find('=');
        if (eq != std::string::npos) buf.sent_id = trim(body.substr(eq + 1));
      }
      continue;
    }
    buf.lines.emplace_back(line, line_no);
  }
  finish();
  return doc;
}

ConlluDocument parse_conllu_file(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return parse_conllu(in, path, strict);
}

MaskResult mask_tree(const DepTree& tree,
                     const std::set<std::string>& relations) {
  const std::size_t n = tree.tokens.size();
  std::vector<std::vector<std::size_t>> children(n + 1);
  std::size_t root = 0;
  for (const auto& tok : tree.tokens) {
    children[tok.head].push_back(tok.index);
    if (tok.head == 0) root = tok.index;
  }

  auto in_set = [&](std::size_t index) {
    return relations.count(base_relation(tree.tokens[index - 1].deprel)) > 0;
  };

  MaskResult result;
  if (root == 0 || in_set(root)) return result;

  std::vector<bool> masked(n + 1, false);
  std::vector<std::size_t> stack = {root};
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (in_set(node)) {
      std::vector<std::size_t> subtree = {node};
      while (!subtree.empty()) {
        const std::size_t m = subtree.back();
        subtree.pop_back();
        masked[m] = true;
        for (auto c : children[m]) subtree.push_back(c);
      }
      continue;
    }
    for (auto it = children[node].rbegin(); it != children[node].rend(); ++it) {
      stack.push_back(*it);
    }
  }

  std::string out;
  bool previous_masked = false;
  bool any = false;
  for (const auto& tok : tree.tokens) {
    if (masked[tok.index]) {
      any = true;
      if (previous_masked) continue;
      if (!out.empty()) out.push_back(' ');
      out += kMaskToken;
      previous_masked = true;
    } else {
      if (!out.empty()) out.push_back(' ');
      out += tok.form;
      previous_masked = false;
    }
  }
  if (any) {
    result.masked = std::move(out);
    result.was_masked = true;
  }
  return result;
}

std::string surface(const DepTree& tree) {
  std::string out;
  for (const auto& tok : tree.tokens) {
    if (!out.empty()) out.push_back(' ');
    out += tok.form;
  }
  return out;
}

double masking_coverage(std::span<const LabeledUtterance> dataset,
                        const std::map<std::string, DepTree>& trees,
                        const std::set<std::string>& relations) {
  if (dataset.empty()) return 0.0;
  std::size_t masked = 0;
  for (const auto& u : dataset) {
    auto it = trees.find(u.id);
    if (it != trees.end() && mask_tree(it->second, relations).was_masked) {
      ++masked;
    }
  }
  return static_cast<double>(masked) / static_cast<double>(dataset.size());
}

// ---------------------------------------------------------------------------

const std::string_view kParaphrasePromptTemplate =
    "Given an utterance, describe what the user is asking.\n"
    "\n"
    "sentence: \"set an alarm for every weekday at 7 am\"\n"
    "description: user is asking to set an alarm for every weekday at 7am\n"
    "\n"
    "sentence: \"can you show me the step-by-step instructions to bake "
    "chocolate chip cookies\"\n"
    "description: user is asking for recipe for chocolate chip cookies\n"
    "\n"
    "sentence: \"could you please tell me what time it is now\"\n"
    "description: user is asking for the current time\n"
    "\n"
    "sentence: \"{}\"\n"
    "description:";

std::string build_paraphrase_prompt(std::string_view utterance,
                                    std::string_view prompt_template) {
  std::string out(prompt_template);
  const auto slot = out.find("{}");
  if (slot == std::string::npos) {
    throw InputError("paraphrase prompt template has no '{}' slot");
  }
  out.replace(slot, 2, utterance);
  return out;
}

std::optional<std::string> first_nonempty_line(std::string_view text) {
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(start, end - start));
    if (!line.empty()) return line;
    start = end + 1;
  }
  return std::nullopt;
}

std::string HttpCompletionClient::complete(const std::string& prompt) {
  nlohmann::json body;
  body["model"] = settings_.model;
  body["prompt"] = prompt;
  body["max_tokens"] = settings_.max_tokens;
  body["temperature"] = settings_.temperature;
  const auto reply = post_json(settings_.http, "/completions", body);
  auto choices = reply.find("choices");
  if (choices == reply.end() || !choices->is_array() || choices->empty() ||
      !(*choices)[0].contains("text") || !(*choices)[0]["text"].is_string()) {
    throw ProviderError("completion reply lacks choices[0].text");
  }
  return (*choices)[0]["text"].get<std::string>();
}

ParaphraseSource::ParaphraseSource(std::string cache_path,
                                   std::unique_ptr<CompletionClient> client,
                                   std::string prompt_template)
    : path_(std::move(cache_path)),
      client_(std::move(client)),
      prompt_template_(std::move(prompt_template)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  for_each_jsonl_file(path_, [&](const nlohmann::json& obj, std::size_t line) {
    auto id = require_string(obj, "id", path_, line);
    auto text = require_string(obj, "paraphrase", path_, line);
    if (!cache_.emplace(std::move(id), std::move(text)).second) {
      throw DuplicateIdError("duplicate paraphrase id", path_, line);
    }
  });
}

std::size_t ParaphraseSource::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

std::optional<std::string> ParaphraseSource::paraphrase(
    const std::string& id, const std::string& utterance) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
  }
  if (!client_) return std::nullopt;

  std::optional<std::string> result;
  try {
    result = first_nonempty_line(
        client_->complete(build_paraphrase_prompt(utterance, prompt_template_)));
  } catch (const ProviderError& e) {
    warn("paraphrase for '" + id + "' unavailable: " + e.what());
    return std::nullopt;
  }
  if (!result) {
    warn("paraphrase for '" + id + "' came back empty");
    return std::nullopt;
  }

  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(id, *result);
  if (!path_.empty()) {
    std::ofstream out = open_for_append(path_);
    nlohmann::json obj;
    obj["id"] = id;
    obj["paraphrase"] = *result;
    out << obj.dump() << '\n';
    if (!out) warn("could not persist paraphrase for '" + id + "' to " + path_);
  }
  return result;
}

std::vector<AugmentedUtterance> augment_dataset(
    std::span<const LabeledUtterance> dataset, ParaphraseSource* paraphrases,
    const std::map<std::string, DepTree>* trees,
    const std::set<std::string>& relations) {
  std::vector<AugmentedUtterance> out;
  out.reserve(dataset.size());
  for (const auto& u : dataset) {
    AugmentedUtterance a;
    a.id = u.id;
    a.text = u.text;
    if (paraphrases != nullptr) a.paraphrase = paraphrases->paraphrase(u.id, u.text);
    if (trees != nullptr) {
      if (auto it = trees->find(u.id); it != trees->end()) {
        auto m = mask_tree(it->second, relations);
        a.masked = std::move(m.masked);
        a.was_masked = m.was_masked;
        a.parsed = true;
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace dataless
