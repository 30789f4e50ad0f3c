#include "minn/folds.hpp"

#include <algorithm>
#include <numeric>

#include "minn/error.hpp"
#include "minn/rng.hpp"

namespace minn {

FoldPlan stratified_folds(const Dataset& dataset, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be at least 2");

    std::vector<std::string> positives, negatives;
    for (const auto& bag : dataset.bags) {
        if (!bag.label) continue;
        (*bag.label == 1 ? positives : negatives).push_back(bag.patient_id);
    }
    const std::size_t labeled = positives.size() + negatives.size();
    if (static_cast<std::size_t>(k) > labeled)
        throw ConfigError("k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(labeled) + " labeled bags");

    Rng rng(seed);
    std::shuffle(positives.begin(), positives.end(), rng);
    std::shuffle(negatives.begin(), negatives.end(), rng);

    FoldPlan plan;
    plan.k = k;
    std::vector<std::size_t> load(k, 0);

    // Deal each class base-count patients per fold, then hand the remainder
    // to the currently lightest folds (lowest index on ties) so total fold
    // sizes also stay within one of each other.
    auto assign_class = [&](const std::vector<std::string>& ids) {
        const std::size_t base = ids.size() / k;
        const std::size_t rem = ids.size() % k;

        std::vector<int> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return load[a] < load[b]; });

        std::vector<std::size_t> quota(k, base);
        for (std::size_t i = 0; i < rem; ++i) ++quota[order[i]];

        std::size_t next = 0;
        for (int fold = 0; fold < k; ++fold)
            for (std::size_t i = 0; i < quota[fold]; ++i) {
                plan.assignments[ids[next++]] = fold;
                ++load[fold];
            }
    };

    assign_class(negatives);
    assign_class(positives);
    return plan;
}

} // namespace minn
