#include "dataless/overlap.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dataless/errors.hpp"

namespace dataless {

OverlapMatrix OverlapMatrix::build(const IntentSchema& schema) {
  OverlapMatrix m;
  m.size_ = schema.size();
  m.bits_.assign(m.size_ * m.size_, 0);
  for (std::size_t i = 0; i < m.size_; ++i) {
    const auto& ei = schema.at(i).entities;
    for (std::size_t j = i; j < m.size_; ++j) {
      const auto& ej = schema.at(j).entities;
      // Both sets are ordered; a merge walk finds any common element.
      auto a = ei.begin();
      auto b = ej.begin();
      bool shared = false;
      while (a != ei.end() && b != ej.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          shared = true;
          break;
        }
      }
      m.bits_[i * m.size_ + j] = m.bits_[j * m.size_ + i] = shared ? 1 : 0;
    }
  }
  return m;
}

std::string OverlapMatrix::to_csv(const IntentSchema& schema) const {
  std::ostringstream out;
  out << "label";
  for (const auto& cls : schema.classes()) out << ',' << cls.label;
  out << '\n';
  for (std::size_t i = 0; i < size_; ++i) {
    out << schema.at(i).label;
    for (std::size_t j = 0; j < size_; ++j) out << ',' << (at(i, j) ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

std::vector<std::size_t> top_k_classes(std::span<const double> sims,
                                       std::size_t k) {
  if (sims.empty()) throw InputError("top_k_classes: empty similarity vector");
  if (k == 0) throw InputError("top_k_classes: k must be at least 1");
  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(k, sims.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return a < b;
                    });
  order.resize(take);
  return order;
}

bool overlaps(std::span<const double> sims, std::size_t k,
              const OverlapMatrix& matrix) {
  if (matrix.size() != sims.size()) {
    throw InputError("overlaps: similarity vector has " +
                     std::to_string(sims.size()) + " entries, matrix " +
                     std::to_string(matrix.size()));
  }
  const auto top = top_k_classes(sims, k);
  for (std::size_t a = 0; a < top.size(); ++a) {
    for (std::size_t b = a + 1; b < top.size(); ++b) {
      if (matrix.at(top[a], top[b])) return true;
    }
  }
  return false;
}

}  // namespace dataless
