#pragma once

#include <vector>

#include "minn/types.hpp"

namespace minn {

// Fits per-feature mean/std over all instances of all given bags (population
// std). Features with std below 1e-12 get std 1 so they map to ~0 everywhere.
Normalizer fit_zscore(const std::vector<Bag>& bags);

// features[j] <- (features[j] - mean[j]) / std[j]; everything else untouched.
std::vector<Bag> apply_zscore(const Normalizer& normalizer, const std::vector<Bag>& bags);

} // namespace minn
