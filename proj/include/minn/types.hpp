#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace minn {

// One tumor: a fixed-width feature vector plus identifiers.
struct Instance {
    std::string patient_id;
    std::string tumor_id;
    std::vector<double> features;
    // Ground-truth instance class for synthetic data; absent on real cohorts.
    std::optional<int> true_class;
};

// One patient: a non-empty set of instances with an optional outcome.
struct Bag {
    std::string patient_id;
    std::vector<Instance> instances;
    std::optional<int> label;          // binary {0,1}
    std::optional<double> survival_days;
    std::optional<int> event;          // 1 = death observed, 0 = censored
};

struct Dataset {
    std::vector<Bag> bags;
    std::vector<std::string> feature_names;
    std::optional<double> horizon_days;

    std::size_t width() const { return feature_names.size(); }

    std::size_t n_labeled() const {
        std::size_t n = 0;
        for (const auto& b : bags)
            if (b.label) ++n;
        return n;
    }

    std::size_t n_instances() const {
        std::size_t n = 0;
        for (const auto& b : bags) n += b.instances.size();
        return n;
    }
};

// Per-feature z-score statistics, fit on training bags only.
struct Normalizer {
    std::vector<double> means;
    std::vector<double> stds;  // each > 0; constant features are mapped to std 1

    friend bool operator==(const Normalizer& a, const Normalizer& b) {
        return a.means == b.means && a.stds == b.stds;
    }
};

// Patient -> fold assignment for one k-fold split.
struct FoldPlan {
    int k = 0;
    std::map<std::string, int> assignments;
};

} // namespace minn
