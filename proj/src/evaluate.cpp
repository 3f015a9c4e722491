#include "dataless/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "dataless/errors.hpp"
#include "dataless/util.hpp"

namespace dataless {

EvaluationReport score(std::span<const Prediction> predictions,
                       const IntentSchema& schema) {
  if (predictions.empty()) throw InputError("cannot score an empty prediction set");
  const std::size_t n_classes = schema.size();
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  std::vector<bool> in_gold(n_classes, false);

  EvaluationReport report;
  report.n_utterances = predictions.size();
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    const auto gold = schema.find(p.gold);
    if (!gold) throw InputError("prediction '" + p.id + "': unknown gold label '" + p.gold + "'");
    const auto pred = schema.find(p.predicted);
    if (!pred) {
      throw InputError("prediction '" + p.id + "': unknown predicted label '" +
                       p.predicted + "'");
    }
    in_gold[*gold] = true;
    if (*gold == *pred) {
      ++correct;
      ++tp[*gold];
    } else {
      ++fn[*gold];
      ++fp[*pred];
    }
    if (p.degraded) ++report.n_degraded;
  }

  report.accuracy =
      static_cast<double>(correct) / static_cast<double>(predictions.size());
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (!in_gold[c]) continue;
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    const double f1 = static_cast<double>(2 * tp[c]) / denom;
    report.per_class_f1.emplace_back(schema.at(c).label, f1);
    f1_sum += f1;
  }
  report.macro_f1 = f1_sum / static_cast<double>(report.per_class_f1.size());
  report.mean_acc_f1 = (report.accuracy + report.macro_f1) / 2.0;

  const bool ranked = std::all_of(predictions.begin(), predictions.end(),
                                  [](const Prediction& p) { return p.rank_of_gold.has_value(); });
  if (ranked) report.topk_recall = topk_recall(predictions);
  return report;
}

std::map<std::size_t, double> topk_recall(std::span<const Prediction> predictions,
                                          std::span<const std::size_t> ks) {
  if (predictions.empty()) throw InputError("top-k recall of an empty prediction set");
  std::map<std::size_t, double> out;
  for (auto k : ks) {
    std::size_t hits = 0;
    for (const auto& p : predictions) {
      if (!p.rank_of_gold) {
        throw InputError("prediction '" + p.id + "' has no rank_of_gold");
      }
      if (*p.rank_of_gold <= k) ++hits;
    }
    out[k] = static_cast<double>(hits) / static_cast<double>(predictions.size());
  }
  return out;
}

SimilarityStats class_similarity_stats(std::span<const LabeledUtterance> dataset,
                                       std::span<const Embedding> embeddings,
                                       const IntentSchema& schema,
                                       const SimilarityOptions& options) {
  if (dataset.size() != embeddings.size()) {
    throw InputError("similarity stats: dataset and embeddings differ in length");
  }
  std::vector<std::vector<std::size_t>> members(schema.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    members[schema.position(dataset[i].gold_label)].push_back(i);
  }

  SimilarityStats stats;
  std::vector<std::size_t> classes;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (members[c].empty()) continue;
    if (members[c].size() < 2) {
      stats.excluded.push_back(schema.at(c).label);
      warn("similarity stats: class '" + schema.at(c).label +
           "' has fewer than 2 utterances and is excluded");
      continue;
    }
    if (options.max_per_class && members[c].size() > *options.max_per_class) {
      const std::size_t cap = std::max<std::size_t>(2, *options.max_per_class);
      SplitMix64 rng(mix64(options.seed) ^ mix64(c + 1));
      auto& m = members[c];
      for (std::size_t i = 0; i < cap; ++i) {
        std::swap(m[i], m[i + static_cast<std::size_t>(rng.below(m.size() - i))]);
      }
      m.resize(cap);
      std::sort(m.begin(), m.end());
      stats.approximate = true;
    }
    classes.push_back(c);
  }
  if (classes.size() < 2) {
    throw InputError("similarity stats need at least two classes with 2+ utterances");
  }

  // Unit vectors for every utterance that takes part.
  std::vector<std::vector<double>> unit(dataset.size());
  for (auto c : classes) {
    for (auto i : members[c]) {
      const auto& v = embeddings[i].values;
      const double norm = l2_norm(v);
      if (norm == 0.0) {
        throw VectorError("utterance '" + dataset[i].id + "' has a zero embedding");
      }
      unit[i].resize(v.size());
      for (std::size_t d = 0; d < v.size(); ++d) unit[i][d] = v[d] / norm;
    }
  }

  double s_in_total = 0.0;
  double s_out_total = 0.0;
  for (auto c : classes) {
    const auto& own = members[c];
    double in_sum = 0.0;
    for (std::size_t a = 0; a < own.size(); ++a) {
      for (std::size_t b = a + 1; b < own.size(); ++b) {
        in_sum += 2.0 * dot(unit[own[a]], unit[own[b]]);
      }
    }
    const double n_c = static_cast<double>(own.size());
    s_in_total += in_sum / (n_c * (n_c - 1.0));

    double out_sum = 0.0;
    std::size_t n_rest = 0;
    for (auto other : classes) {
      if (other == c) continue;
      n_rest += members[other].size();
      for (auto i : own) {
        for (auto j : members[other]) out_sum += dot(unit[i], unit[j]);
      }
    }
    s_out_total += out_sum / (n_c * static_cast<double>(n_rest));
  }

  stats.n_classes = classes.size();
  stats.s_in = s_in_total / static_cast<double>(classes.size());
  stats.s_out = s_out_total / static_cast<double>(classes.size());
  stats.delta = stats.s_in - stats.s_out;
  if (stats.s_out == 0.0) {
    stats.pct_delta = stats.delta == 0.0 ? 0.0
                                         : std::copysign(std::numeric_limits<double>::infinity(),
                                                         stats.delta);
  } else {
    stats.pct_delta = 100.0 * stats.delta / stats.s_out;
  }
  return stats;
}

std::optional<double> paraphrase_similarity(
    std::span<const UtteranceEmbeddings> embeddings) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : embeddings) {
    if (!e.paraphrase) continue;
    sum += cosine(e.text, *e.paraphrase);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

AblationGrid run_ablation(std::span<const DatasetBundle> bundles,
                          std::span<const RunConfig> configs,
                          std::size_t workers) {
  AblationGrid grid;
  for (const auto& b : bundles) grid.datasets.push_back(b.name);
  for (const auto& config : configs) {
    AblationRow row;
    row.config = config;
    bool all_ok = true;
    double acc = 0.0, f1 = 0.0;
    for (const auto& b : bundles) {
      AblationCell cell;
      cell.dataset = b.name;
      try {
        if (b.schema == nullptr) throw InputError("bundle '" + b.name + "' has no schema");
        cell.predictions = classify_all(*b.schema, b.dataset, b.augmented,
                                        b.embeddings, b.prototypes, config,
                                        b.matrix, workers);
        cell.report = score(cell.predictions, *b.schema);
        acc += cell.report->accuracy;
        f1 += cell.report->macro_f1;
      } catch (const std::exception& e) {
        cell.error = e.what();
        cell.predictions.clear();
        all_ok = false;
        warn("ablation " + config.components() + " on " + b.name + ": " + e.what());
      }
      row.cells.push_back(std::move(cell));
    }
    if (all_ok && !bundles.empty()) {
      const double n = static_cast<double>(bundles.size());
      row.overall_accuracy = acc / n;
      row.overall_macro_f1 = f1 / n;
      row.overall_mean = (acc / n + f1 / n) / 2.0;
    }
    grid.rows.push_back(std::move(row));
  }
  return grid;
}

namespace {

std::string opt_number(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("NA");
}

std::string setup_prefix(const RunConfig& c) {
  std::string out = c.components();
  out += ',';
  out += c.use_E ? "1," : "0,";
  out += c.use_P ? "1," : "0,";
  out += c.use_M ? "1," : "0,";
  out += c.use_O ? "1," : "0,";
  return out;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string ablation_csv(const AblationGrid& grid) {
  std::ostringstream out;
  out << kAblationCsvHeader << '\n';
  for (const auto& row : grid.rows) {
    const std::string prefix = setup_prefix(row.config);
    for (const auto& cell : row.cells) {
      if (cell.dataset.find(',') != std::string::npos || cell.dataset == "overall") {
        throw InputError("dataset name '" + cell.dataset + "' is not usable in CSV");
      }
      std::optional<double> acc, f1, mean;
      if (cell.report) {
        acc = cell.report->accuracy;
        f1 = cell.report->macro_f1;
        mean = cell.report->mean_acc_f1;
      }
      out << prefix << cell.dataset << ',' << opt_number(acc) << ','
          << opt_number(f1) << ',' << opt_number(mean) << '\n';
    }
    out << prefix << "overall," << opt_number(row.overall_accuracy) << ','
        << opt_number(row.overall_macro_f1) << ',' << opt_number(row.overall_mean)
        << '\n';
  }
  return out.str();
}

std::vector<AblationCsvRow> parse_ablation_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kAblationCsvHeader) {
    throw InputError("ablation CSV: unexpected header");
  }
  std::vector<AblationCsvRow> rows;
  std::size_t line_no = 1;
  auto number = [&](const std::string& s) -> std::optional<double> {
    if (s == "NA") return std::nullopt;
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw MalformedRecordError("bad number '" + s + "'", "ablation.csv", line_no);
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 9) {
      throw MalformedRecordError("expected 9 columns", "ablation.csv", line_no);
    }
    AblationCsvRow r;
    r.setup = f[0];
    r.E = f[1] == "1";
    r.P = f[2] == "1";
    r.M = f[3] == "1";
    r.O = f[4] == "1";
    r.dataset = f[5];
    r.accuracy = number(f[6]);
    r.macro_f1 = number(f[7]);
    r.mean = number(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string percent(double fraction) {
  if (!std::isfinite(fraction)) return fraction > 0 ? "inf" : (fraction < 0 ? "-inf" : "nan");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string ablation_markdown(const AblationGrid& grid) {
  std::ostringstream out;
  out << "| E | P | M | O |";
  for (const auto& d : grid.datasets) out << ' ' << d << " |";
  out << " Ovr. |\n|---|---|---|---|";
  for (std::size_t i = 0; i < grid.datasets.size(); ++i) out << "---|";
  out << "---|\n";
  for (const auto& row : grid.rows) {
    const auto& c = row.config;
    out << "| " << (c.use_E ? "x" : " ") << " | " << (c.use_P ? "x" : " ")
        << " | " << (c.use_M ? "x" : " ") << " | " << (c.use_O ? "x" : " ")
        << " |";
    for (const auto& cell : row.cells) {
      out << ' ' << (cell.report ? percent(cell.report->mean_acc_f1) : "error")
          << " |";
    }
    out << ' ' << (row.overall_mean ? percent(*row.overall_mean) : "error")
        << " |\n";
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
  if (!out) throw InputError("failed writing " + path);
}

void emit_ablation(const AblationGrid& grid, const std::string& dir) {
  write_text_file((std::filesystem::path(dir) / "ablation.csv").string(),
                  ablation_csv(grid));
  write_text_file((std::filesystem::path(dir) / "ablation.md").string(),
                  ablation_markdown(grid));
}

nlohmann::ordered_json to_json(const EvaluationReport& report) {
  nlohmann::ordered_json obj;
  obj["n_utterances"] = report.n_utterances;
  obj["n_degraded"] = report.n_degraded;
  obj["accuracy"] = report.accuracy;
  obj["macro_f1"] = report.macro_f1;
  obj["mean_acc_f1"] = report.mean_acc_f1;
  obj["per_class_f1"] = nlohmann::ordered_json::object();
  for (const auto& [label, f1] : report.per_class_f1) obj["per_class_f1"][label] = f1;
  obj["topk_recall"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.topk_recall) obj["topk_recall"][std::to_string(k)] = v;
  return obj;
}

nlohmann::ordered_json to_json(const SimilarityStats& stats) {
  auto finite_or_null = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json obj;
  obj["s_in"] = stats.s_in;
  obj["s_out"] = stats.s_out;
  obj["delta"] = stats.delta;
  obj["pct_delta"] = finite_or_null(stats.pct_delta);
  obj["n_classes"] = stats.n_classes;
  obj["excluded"] = stats.excluded;
  obj["approximate"] = stats.approximate;
  return obj;
}

std::string report_markdown(
    std::span<const std::pair<std::string, EvaluationReport>> reports) {
  std::ostringstream out;
  out << "| Dataset | Accuracy | Macro-F1 | Mean Acc. & F1 |\n|---|---|---|---|\n";
  double mean_sum = 0.0;
  for (const auto& [name, r] : reports) {
    out << "| " << name << " | " << percent(r.accuracy) << " | "
        << percent(r.macro_f1) << " | " << percent(r.mean_acc_f1) << " |\n";
    mean_sum += r.mean_acc_f1;
  }
  if (reports.size() > 1) {
    out << "| Ovr. (mean of dataset means) | | | "
        << percent(mean_sum / static_cast<double>(reports.size())) << " |\n";
  }
  return out.str();
}

std::string topk_markdown(
    std::span<const std::pair<std::string, std::map<std::size_t, double>>> rows) {
  std::ostringstream out;
  std::vector<std::size_t> ks;
  if (!rows.empty()) {
    for (const auto& [k, v] : rows.front().second) ks.push_back(k);
  }
  out << "| Dataset |";
  for (auto k : ks) out << " Top-" << k << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < ks.size(); ++i) out << "---|";
  out << '\n';
  std::map<std::size_t, double> sums;
  for (const auto& [name, recall] : rows) {
    out << "| " << name << " |";
    for (auto k : ks) {
      const double v = recall.at(k);
      sums[k] += v;
      out << ' ' << percent(v) << " |";
    }
    out << '\n';
  }
  if (rows.size() > 1) {
    out << "| Average |";
    for (auto k : ks) out << ' ' << percent(sums[k] / static_cast<double>(rows.size())) << " |";
    out << '\n';
  }
  return out.str();
}

}  // namespace dataless
