#include "csocnn/data/synthetic.hpp"

#include <cmath>
#include <string>

#include "csocnn/error.hpp"
#include "csocnn/random.hpp"

namespace csocnn::data {

Dataset make_synthetic_blobs(std::size_t n, std::size_t k_classes, std::size_t d,
                             double separation, std::uint64_t seed) {
  if (k_classes == 0 || d == 0) throw PreconditionError("need at least one class and feature");
  if (n < k_classes) throw PreconditionError("need at least one sample per class");

  Dataset ds;
  if (k_classes == 5) {
    ds.codec = LabelCodec::apt_stages();
  } else {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k_classes; ++c) names.push_back("class_" + std::to_string(c));
    ds.codec = LabelCodec(std::move(names));
  }
  for (std::size_t k = 0; k < d; ++k) ds.feature_names.push_back("f" + std::to_string(k));

  Rng center_rng(derive_seed(seed, 1));
  const double scale = separation / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<double>> centers(k_classes, std::vector<double>(d));
  for (auto& center : centers) {
    for (auto& v : center) v = scale * standard_normal(center_rng);
  }

  Rng noise_rng(derive_seed(seed, 2));
  ds.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k_classes;
    FlowRecord r;
    r.label = static_cast<int>(c);
    r.features.resize(d);
    for (std::size_t k = 0; k < d; ++k) r.features[k] = centers[c][k] + standard_normal(noise_rng);
    ds.records.push_back(std::move(r));
  }
  ds.stats.rows = n;
  return ds;
}

}  // namespace csocnn::data
