#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dataless/corpus.hpp"
#include "dataless/http.hpp"

namespace dataless {

struct DepToken {
  std::size_t index = 0;  // 1-based
  std::string form;
  std::size_t head = 0;   // 0 = root
  std::string deprel;
};

struct DepTree {
  std::string id;
  std::vector<DepToken> tokens;  // tokens[i].index == i + 1
};

// Throws InputError unless heads are in range, no token heads itself, exactly
// one token attaches to 0 and every token reaches the root.
void validate_tree(const DepTree& tree);

struct ConlluIssue {
  std::string sent_id;  // empty when the sentence had none
  std::size_t line = 0;
  std::string message;
};

struct ConlluDocument {
  std::map<std::string, DepTree> trees;
  // Sentences rejected in lenient mode.
  std::vector<ConlluIssue> issues;
};

// Reads 10-column CoNLL-U. Each sentence needs a "# sent_id = <id>" comment.
// Multiword ranges (1-2) and empty nodes (1.1) are skipped. In strict mode the
// first bad sentence throws MalformedRecordError; otherwise it is recorded in
// `issues` and dropped.
ConlluDocument parse_conllu(std::istream& in, const std::string& source,
                            bool strict = true);
ConlluDocument parse_conllu_file(const std::string& path, bool strict = true);

inline const std::set<std::string>& default_mask_relations() {
  static const std::set<std::string> relations = {"dobj", "pobj", "ccomp",
                                                  "obj"};
  return relations;
}

struct MaskResult {
  std::optional<std::string> masked;
  bool was_masked = false;
};

inline constexpr std::string_view kMaskToken = "[MASK]";

// Depth-first from the root: a node whose base relation (before ':',
// case-insensitive) is in `relations` is replaced together with its whole
// subtree. Tokens are rebuilt in sentence order, single-space separated, with
// each run of masked tokens rendered as one [MASK]. A masked root masks the
// whole sentence, which is discarded as carrying no signal.
MaskResult mask_tree(const DepTree& tree,
                     const std::set<std::string>& relations =
                         default_mask_relations());

// Tree surface form, single-space joined.
std::string surface(const DepTree& tree);

struct AugmentedUtterance {
  std::string id;
  std::string text;
  std::optional<std::string> paraphrase;
  std::optional<std::string> masked;
  bool was_masked = false;
  // A dependency parse was available for this utterance.
  bool parsed = false;
};

// Fraction of utterances whose tree exists and masks. Utterances without a
// tree count as unmasked. 0 for an empty dataset.
double masking_coverage(std::span<const LabeledUtterance> dataset,
                        const std::map<std::string, DepTree>& trees,
                        const std::set<std::string>& relations =
                            default_mask_relations());

// Few-shot paraphrase prompt; "{}" is replaced by the utterance.
extern const std::string_view kParaphrasePromptTemplate;

std::string build_paraphrase_prompt(std::string_view utterance,
                                    std::string_view prompt_template =
                                        kParaphrasePromptTemplate);

// First non-empty line, trimmed; nullopt when there is none.
std::optional<std::string> first_nonempty_line(std::string_view text);

// Completion client: POST {base_url}/completions with
// {"model", "prompt", "max_tokens", "temperature"}, reply
// {"choices": [{"text"}]}.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  // Raw completion text; throws ProviderError on failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

struct CompletionSettings {
  HttpSettings http;
  std::string model;
  int max_tokens = 48;
  double temperature = 0.0;
  std::string prompt_template = std::string(kParaphrasePromptTemplate);
};

class HttpCompletionClient final : public CompletionClient {
 public:
  explicit HttpCompletionClient(CompletionSettings settings)
      : settings_(std::move(settings)) {}

  std::string complete(const std::string& prompt) override;
  const CompletionSettings& settings() const noexcept { return settings_; }

 private:
  CompletionSettings settings_;
};

// Paraphrase cache (JSONL {"id", "paraphrase"}) with an optional live
// completion client behind it. New paraphrases are appended to the file.
class ParaphraseSource {
 public:
  ParaphraseSource() = default;
  explicit ParaphraseSource(std::string cache_path,
                            std::unique_ptr<CompletionClient> client = nullptr,
                            std::string prompt_template =
                                std::string(kParaphrasePromptTemplate));

  // Cache first, then the client. Client failures are logged and yield
  // nullopt; a run never aborts because a paraphrase is missing.
  std::optional<std::string> paraphrase(const std::string& id,
                                        const std::string& utterance);

  std::size_t size() const;

 private:
  std::string path_;
  std::unique_ptr<CompletionClient> client_;
  std::string prompt_template_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> cache_;
};

// Assembles AugmentedUtterance records: paraphrases from `paraphrases` (may be
// null) and masks from `trees` (may be null).
std::vector<AugmentedUtterance> augment_dataset(
    std::span<const LabeledUtterance> dataset, ParaphraseSource* paraphrases,
    const std::map<std::string, DepTree>* trees,
    const std::set<std::string>& relations = default_mask_relations());

}  // namespace dataless
