#pragma once

// Brute-force reference implementations used to cross-check the library.
// They share no code with it beyond plain data types.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "test_support.hpp"

namespace oracle {

// Class positions ordered by descending score, ties by ascending position,
// via a full stable sort.
inline std::vector<std::size_t> ranking(const std::vector<double>& scores) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < scores.size(); ++i) keyed.emplace_back(-scores[i], i);
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  for (const auto& [neg, i] : keyed) out.push_back(i);
  return out;
}

// Overlap gate by enumerating every distinct pair among the top k and
// intersecting the raw entity sets.
inline bool overlaps(const std::vector<double>& scores, std::size_t k,
                     const std::vector<std::set<std::string>>& entities) {
  auto order = ranking(scores);
  order.resize(std::min(k, order.size()));
  for (std::size_t a : order) {
    for (std::size_t b : order) {
      if (a == b) continue;
      for (const auto& e : entities[a]) {
        if (entities[b].count(e)) return true;
      }
    }
  }
  return false;
}

struct Metrics {
  double accuracy = 0;
  double macro_f1 = 0;
};

// Accuracy and macro-F1 from an explicit confusion matrix; F1 per class is
// computed from precision and recall, averaged over gold-present classes.
inline Metrics confusion_metrics(const std::vector<std::string>& gold,
                                 const std::vector<std::string>& predicted) {
  std::map<std::string, std::map<std::string, double>> cm;
  std::set<std::string> gold_classes;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    cm[gold[i]][predicted[i]] += 1;
    gold_classes.insert(gold[i]);
  }
  double correct = 0;
  for (const auto& g : gold_classes) correct += cm[g][g];
  Metrics m;
  m.accuracy = correct / static_cast<double>(gold.size());
  double f1_sum = 0;
  for (const auto& c : gold_classes) {
    const double tp = cm[c][c];
    double row = 0, col = 0;
    for (const auto& [p, n] : cm[c]) row += n;
    for (auto& [g, preds] : cm) {
      auto it = preds.find(c);
      if (it != preds.end()) col += it->second;
    }
    const double precision = col > 0 ? tp / col : 0.0;
    const double recall = row > 0 ? tp / row : 0.0;
    f1_sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  m.macro_f1 = f1_sum / static_cast<double>(gold_classes.size());
  return m;
}

// Nearest prototype by an exhaustive loop; strict '>' keeps the lowest index
// on ties.
inline std::size_t nearest(const std::vector<double>& u,
                           const std::vector<std::vector<double>>& prototypes) {
  std::size_t best = 0;
  double best_score = testing_support::ref_cosine(u, prototypes[0]);
  for (std::size_t c = 1; c < prototypes.size(); ++c) {
    const double s = testing_support::ref_cosine(u, prototypes[c]);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

}  // namespace oracle
