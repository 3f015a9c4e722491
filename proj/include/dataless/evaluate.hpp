#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dataless/classifier.hpp"

namespace dataless {

struct EvaluationReport {
  std::size_t n_utterances = 0;
  std::size_t n_degraded = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double mean_acc_f1 = 0.0;
  // Classes present in the gold set, schema order.
  std::vector<std::pair<std::string, double>> per_class_f1;
  // Empty when some prediction lacks rank_of_gold.
  std::map<std::size_t, double> topk_recall;
};

inline constexpr std::size_t kDefaultTopK[] = {1, 3, 5, 10};

// Accuracy, one-vs-rest F1 per gold-present class and their macro average.
// Fills topk_recall for kDefaultTopK when every prediction carries a rank.
// Throws InputError on an empty set or labels outside the schema.
EvaluationReport score(std::span<const Prediction> predictions,
                       const IntentSchema& schema);

// Fraction of predictions whose gold rank is <= k, per k. Throws InputError
// when a rank is missing or the set is empty.
std::map<std::size_t, double> topk_recall(
    std::span<const Prediction> predictions,
    std::span<const std::size_t> ks = kDefaultTopK);

struct SimilarityStats {
  double s_in = 0.0;
  double s_out = 0.0;
  double delta = 0.0;
  // 100 * delta / s_out; infinite when s_out is 0.
  double pct_delta = 0.0;
  std::size_t n_classes = 0;
  // Classes dropped for having fewer than two utterances.
  std::vector<std::string> excluded;
  // Computed on a per-class sample rather than all pairs.
  bool approximate = false;
};

struct SimilarityOptions {
  // Caps utterances per class by seeded sampling; exact all-pairs when unset.
  std::optional<std::size_t> max_per_class;
  std::uint64_t seed = 0;
};

// Mean in-class and out-of-class cosine. For each class c, s_in averages the
// n_c(n_c-1) ordered in-class pairs and s_out averages the n_c * n_rest pairs
// against every other class; both are then averaged over classes. Classes
// with fewer than two utterances are excluded with a warning. Throws
// InputError when fewer than two classes remain.
SimilarityStats class_similarity_stats(std::span<const LabeledUtterance> dataset,
                                       std::span<const Embedding> embeddings,
                                       const IntentSchema& schema,
                                       const SimilarityOptions& options = {});

// Mean cosine between each paraphrase and its utterance, over utterances that
// have one; nullopt when none do.
std::optional<double> paraphrase_similarity(
    std::span<const UtteranceEmbeddings> embeddings);

// Everything one dataset needs for a grid of runs.
struct DatasetBundle {
  std::string name;
  const IntentSchema* schema = nullptr;
  std::vector<LabeledUtterance> dataset;
  std::vector<AugmentedUtterance> augmented;
  std::vector<UtteranceEmbeddings> embeddings;
  PrototypeSet prototypes;
  OverlapMatrix matrix;
};

struct AblationCell {
  std::string dataset;
  std::optional<EvaluationReport> report;
  std::vector<Prediction> predictions;
  std::string error;
};

struct AblationRow {
  RunConfig config;
  std::vector<AblationCell> cells;  // one per dataset, bundle order
  // Unweighted means over datasets; unset if any dataset failed.
  std::optional<double> overall_accuracy;
  std::optional<double> overall_macro_f1;
  std::optional<double> overall_mean;
};

struct AblationGrid {
  std::vector<std::string> datasets;
  std::vector<AblationRow> rows;
};

// Runs every config on every dataset. A failing (config, dataset) pair is
// recorded in its cell and the grid is still produced.
AblationGrid run_ablation(std::span<const DatasetBundle> bundles,
                          std::span<const RunConfig> configs,
                          std::size_t workers = 1);

inline constexpr char kAblationCsvHeader[] =
    "setup,E,P,M,O,dataset,accuracy,macro_f1,mean";

// One line per (config, dataset) plus an "overall" line per config. Scores
// are fractions written with round-trip precision; failed cells hold "NA".
std::string ablation_csv(const AblationGrid& grid);

struct AblationCsvRow {
  std::string setup;
  bool E = false, P = false, M = false, O = false;
  std::string dataset;
  std::optional<double> accuracy, macro_f1, mean;
};
std::vector<AblationCsvRow> parse_ablation_csv(const std::string& csv);

// Setup columns E/P/M/O, one column per dataset and an Ovr. column holding
// mean accuracy/F1 as percentages with two decimals.
std::string ablation_markdown(const AblationGrid& grid);

// Writes ablation.csv and ablation.md into `dir`.
void emit_ablation(const AblationGrid& grid, const std::string& dir);

nlohmann::ordered_json to_json(const EvaluationReport& report);
nlohmann::ordered_json to_json(const SimilarityStats& stats);

// Dataset rows with Accuracy, Macro-F1 and Mean columns (percent, 2 dp).
std::string report_markdown(
    std::span<const std::pair<std::string, EvaluationReport>> reports);
// Top-k table: one row per dataset, one column per k, plus an Average row.
std::string topk_markdown(
    std::span<const std::pair<std::string, std::map<std::size_t, double>>> rows);

std::string percent(double fraction);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dataless
