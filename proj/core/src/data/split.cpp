#include "csocnn/data/split.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <map>
#include <string>

#include "csocnn/error.hpp"
#include "csocnn/random.hpp"

namespace csocnn::data {

namespace {

// floor() that forgives representation error such as 10 * 0.8 = 7.999...
std::size_t floor_count(double x) {
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

// Rounds the table n_c * size_j / n to integers so that every entry is the
// floor or ceil of its exact value while row sums (class counts) and column
// sums (partition sizes) are preserved. Works on the integer numerators of
// the fractional parts (denominator n) and cancels them along alternating
// cycles, which always exist because every partially rounded row and column
// holds at least two fractional entries.
std::vector<std::array<std::size_t, 3>> apportion(const std::vector<std::size_t>& class_counts,
                                                  const std::array<std::size_t, 3>& sizes,
                                                  std::size_t n) {
  const std::size_t rows = class_counts.size();
  std::vector<std::array<std::size_t, 3>> out(rows);
  std::vector<std::array<std::uint64_t, 3>> frac(rows);
  for (std::size_t c = 0; c < rows; ++c) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::uint64_t num = static_cast<std::uint64_t>(class_counts[c]) * sizes[j];
      out[c][j] = static_cast<std::size_t>(num / n);
      frac[c][j] = num % n;
    }
  }

  // Bipartite walk: node ids 0..rows-1 are classes, rows..rows+2 partitions.
  for (;;) {
    std::size_t start = rows;
    for (std::size_t c = 0; c < rows && start == rows; ++c) {
      for (std::size_t j = 0; j < 3; ++j) {
        if (frac[c][j] != 0) {
          start = c;
          break;
        }
      }
    }
    if (start == rows) break;

    std::vector<std::size_t> path{start};
    std::vector<std::ptrdiff_t> seen_at(rows + 3, -1);
    seen_at[start] = 0;
    std::size_t prev = SIZE_MAX;
    std::size_t cycle_begin = 0;
    for (;;) {
      const std::size_t node = path.back();
      std::size_t next = SIZE_MAX;
      if (node < rows) {
        for (std::size_t j = 0; j < 3 && next == SIZE_MAX; ++j) {
          if (frac[node][j] != 0 && rows + j != prev) next = rows + j;
        }
      } else {
        const std::size_t j = node - rows;
        for (std::size_t c = 0; c < rows && next == SIZE_MAX; ++c) {
          if (frac[c][j] != 0 && c != prev) next = c;
        }
      }
      if (next == SIZE_MAX) throw Error("split apportionment failed to find a cycle");
      if (seen_at[next] >= 0) {
        cycle_begin = static_cast<std::size_t>(seen_at[next]);
        path.push_back(next);
        break;
      }
      seen_at[next] = static_cast<std::ptrdiff_t>(path.size());
      prev = node;
      path.push_back(next);
    }

    // Edges of the cycle alternate +delta / -delta.
    struct Edge {
      std::size_t c, j;
    };
    std::vector<Edge> edges;
    for (std::size_t k = cycle_begin; k + 1 < path.size(); ++k) {
      const std::size_t a = path[k], b = path[k + 1];
      edges.push_back(a < rows ? Edge{a, b - rows} : Edge{b, a - rows});
    }
    std::uint64_t delta = UINT64_MAX;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto f = frac[edges[e].c][edges[e].j];
      delta = std::min<std::uint64_t>(delta, e % 2 == 0 ? n - f : f);
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto& f = frac[edges[e].c][edges[e].j];
      if (e % 2 == 0) {
        f += delta;
        if (f == n) {
          f = 0;
          ++out[edges[e].c][edges[e].j];
        }
      } else {
        f -= delta;
      }
    }
  }
  return out;
}

}  // namespace

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
      !(spec.val_fraction_of_remainder > 0.0 && spec.val_fraction_of_remainder < 1.0)) {
    throw PreconditionError("split fractions must lie in (0, 1)");
  }
  const std::size_t remainder =
      std::min(n, floor_count(static_cast<double>(n) * (1.0 - spec.test_fraction)));
  const std::size_t train =
      floor_count(static_cast<double>(remainder) * (1.0 - spec.val_fraction_of_remainder));
  return {train, remainder - train, n - remainder};
}

SplitIndices split_indices(std::span<const int> labels, const SplitSpec& spec) {
  const std::size_t n = labels.size();
  const SplitSizes sizes = split_sizes(n, spec);
  Rng rng(spec.seed);
  SplitIndices out;

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(std::span(order), rng);
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sizes.test));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.test),
                   order.begin() + static_cast<std::ptrdiff_t>(sizes.test + sizes.val));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(sizes.test + sizes.val),
                     order.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    std::vector<std::size_t> counts;
    for (const auto& [label, idx] : by_class) {
      if (idx.size() < 3) {
        throw StratifyError("class " + std::to_string(label) + " has " +
                            std::to_string(idx.size()) +
                            " records; stratified splitting needs at least 3");
      }
      counts.push_back(idx.size());
    }
    const auto table = n == 0 ? std::vector<std::array<std::size_t, 3>>{}
                              : apportion(counts, {sizes.test, sizes.val, sizes.train}, n);
    std::size_t c = 0;
    for (auto& [label, idx] : by_class) {
      shuffle(std::span(idx), rng);
      const auto [n_test, n_val, n_train] = table[c++];
      (void)n_train;
      auto it = idx.begin();
      out.test.insert(out.test.end(), it, it + static_cast<std::ptrdiff_t>(n_test));
      it += static_cast<std::ptrdiff_t>(n_test);
      out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
      it += static_cast<std::ptrdiff_t>(n_val);
      out.train.insert(out.train.end(), it, idx.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Splits split(std::span<const FlowRecord> records, const SplitSpec& spec) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  const auto idx = split_indices(labels, spec);
  Splits out;
  auto gather = [&](const std::vector<std::size_t>& from, std::vector<FlowRecord>& to) {
    to.reserve(from.size());
    for (std::size_t i : from) to.push_back(records[i]);
  };
  gather(idx.train, out.train);
  gather(idx.val, out.val);
  gather(idx.test, out.test);
  return out;
}

}  // namespace csocnn::data
