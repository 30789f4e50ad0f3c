#include "minn/labels.hpp"

#include "minn/error.hpp"

namespace minn {

LabelingResult make_binary_labels(const Dataset& dataset, double horizon_days) {
    if (horizon_days <= 0) throw ConfigError("horizon_days must be positive");

    LabelingResult result;
    result.dataset.feature_names = dataset.feature_names;
    result.dataset.horizon_days = horizon_days;

    for (const auto& bag : dataset.bags) {
        if (!bag.survival_days || !bag.event)
            throw LabelError("patient '" + bag.patient_id +
                             "' is missing survival_days/event, cannot derive a label");
        Bag labeled = bag;
        if (*bag.survival_days > horizon_days) {
            labeled.label = 0;  // survived past the horizon, censored or not
        } else if (*bag.event == 1) {
            labeled.label = 1;  // death observed within the horizon
        } else {
            ++result.excluded_censored;  // censored before the horizon: status unknown
            continue;
        }
        result.dataset.bags.push_back(std::move(labeled));
    }
    return result;
}

} // namespace minn
