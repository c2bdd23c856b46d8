#pragma once

#include <cstddef>
#include <cstdint>

#include "csocnn/data/dataset.hpp"

namespace csocnn::data {

// Gaussian blobs: class c is centred at separation * g_c / sqrt(d) with
// g_c ~ N(0, I), unit-variance noise around it. Classes are balanced to
// within one record (the first n % k classes get the extra). With k == 5
// the APT stage names are used.
Dataset make_synthetic_blobs(std::size_t n, std::size_t k_classes = 5,
                             std::size_t d = kFlowFeatureCount, double separation = 6.0,
                             std::uint64_t seed = 0);

}  // namespace csocnn::data
