#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csocnn/data/dataset.hpp"

namespace csocnn::data {

struct SplitSpec {
  double test_fraction = 0.20;
  double val_fraction_of_remainder = 0.10;
  bool stratified = true;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;

  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

// remainder = floor(n * (1 - test)), test = n - remainder,
// train = floor(remainder * (1 - val)), val = remainder - train.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Indices in each partition are ascending. Stratified splits give every
// class floor or ceil of its proportional share in every partition.
// Throws StratifyError when a class has fewer than three records.
SplitIndices split_indices(std::span<const int> labels, const SplitSpec& spec);

struct Splits {
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> val;
  std::vector<FlowRecord> test;
};

Splits split(std::span<const FlowRecord> records, const SplitSpec& spec);

}  // namespace csocnn::data
