#pragma once

#include <cstddef>

#include "minn/types.hpp"

namespace minn {

struct LabelingResult {
    Dataset dataset;
    // Patients censored before the horizon carry no usable label and are dropped.
    std::size_t excluded_censored = 0;
};

// Derives binary survival labels at the given horizon:
//   label 1  iff event observed and survival_days <= horizon
//   label 0  iff survival_days > horizon (event or not)
//   excluded iff censored with survival_days <= horizon
LabelingResult make_binary_labels(const Dataset& dataset, double horizon_days);

} // namespace minn
