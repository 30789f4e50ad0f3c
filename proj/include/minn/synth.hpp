#pragma once

#include <cstdint>

#include "minn/pooling.hpp"
#include "minn/types.hpp"

namespace minn {

// Emits the three counterexample pairs (tags a, b, c) built from one random
// (red, green) embedding pair with red elementwise-dominant over green.
std::vector<Fig2Pair> gen_fig2_pairs(std::size_t dim, std::uint64_t seed);

struct CountingTaskConfig {
    std::size_t n_bags = 500;
    std::size_t min_bag_size = 2;
    std::size_t max_bag_size = 8;
    std::size_t dim = 8;
    int threshold = 2;            // bag label 1 iff #high-risk instances >= threshold
    double high_risk_rate = 0.3;  // Bernoulli rate, auto-shifted if classes degenerate
    double mu_low = -1.0;
    double mu_high = 1.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

// Two-Gaussian counting task: instances are drawn from a low-risk or
// high-risk isotropic Gaussian, and the bag is positive iff the high-risk
// count reaches the threshold. The true per-instance class is recorded on
// each Instance for oracle use. If the label balance falls outside
// [0.2, 0.8] the Bernoulli rate is shifted and the dataset regenerated.
Dataset gen_counting_task(const CountingTaskConfig& config);

} // namespace minn
