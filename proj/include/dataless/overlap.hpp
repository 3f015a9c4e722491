#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dataless/corpus.hpp"

namespace dataless {

// Symmetric class-by-class entity overlap: bit (i, j) is set iff the entity
// sets of classes i and j intersect. Immutable after construction.
class OverlapMatrix {
 public:
  OverlapMatrix() = default;

  static OverlapMatrix build(const IntentSchema& schema);

  std::size_t size() const noexcept { return size_; }
  bool at(std::size_t i, std::size_t j) const { return bits_.at(i * size_ + j) != 0; }

  // 0/1 CSV with a label header row and column.
  std::string to_csv(const IntentSchema& schema) const;

  friend bool operator==(const OverlapMatrix&, const OverlapMatrix&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<unsigned char> bits_;
};

inline constexpr std::size_t kDefaultOverlapK = 3;

// Positions of the k highest scores, descending; ties go to the lower
// position. k larger than the vector returns every position. Throws
// InputError on an empty vector or k == 0.
std::vector<std::size_t> top_k_classes(std::span<const double> sims,
                                       std::size_t k);

// True iff two distinct classes among the top k share an entity.
bool overlaps(std::span<const double> sims, std::size_t k,
              const OverlapMatrix& matrix);

}  // namespace dataless
