#pragma once

#include <cstdint>

#include "minn/types.hpp"

namespace minn {

// Stratified k-fold assignment over labeled patients. Per-class counts per
// fold differ by at most one, and class remainders are dealt to the folds
// with the smallest running size so total fold sizes stay within one of each
// other as well. Deterministic for a fixed seed.
FoldPlan stratified_folds(const Dataset& dataset, int k, std::uint64_t seed);

} // namespace minn
