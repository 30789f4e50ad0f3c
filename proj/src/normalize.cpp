#include "minn/normalize.hpp"

#include <cmath>

#include "minn/error.hpp"

namespace minn {

Normalizer fit_zscore(const std::vector<Bag>& bags) {
    std::size_t width = 0;
    std::size_t count = 0;
    for (const auto& bag : bags) {
        for (const auto& inst : bag.instances) {
            if (count == 0) width = inst.features.size();
            else if (inst.features.size() != width)
                throw ShapeError("inconsistent feature width across instances");
            ++count;
        }
    }
    if (count < 2) throw FitError("need at least 2 instances to fit a normalizer");

    Normalizer norm;
    norm.means.assign(width, 0.0);
    norm.stds.assign(width, 0.0);

    for (const auto& bag : bags)
        for (const auto& inst : bag.instances)
            for (std::size_t j = 0; j < width; ++j) norm.means[j] += inst.features[j];
    for (std::size_t j = 0; j < width; ++j) norm.means[j] /= static_cast<double>(count);

    for (const auto& bag : bags)
        for (const auto& inst : bag.instances)
            for (std::size_t j = 0; j < width; ++j) {
                const double d = inst.features[j] - norm.means[j];
                norm.stds[j] += d * d;
            }
    for (std::size_t j = 0; j < width; ++j) {
        norm.stds[j] = std::sqrt(norm.stds[j] / static_cast<double>(count));  // population std
        if (norm.stds[j] < 1e-12) norm.stds[j] = 1.0;  // constant feature maps to 0
    }
    return norm;
}

std::vector<Bag> apply_zscore(const Normalizer& normalizer, const std::vector<Bag>& bags) {
    std::vector<Bag> out = bags;
    for (auto& bag : out)
        for (auto& inst : bag.instances) {
            if (inst.features.size() != normalizer.means.size())
                throw ShapeError("feature width does not match the normalizer");
            for (std::size_t j = 0; j < inst.features.size(); ++j)
                inst.features[j] = (inst.features[j] - normalizer.means[j]) / normalizer.stds[j];
        }
    return out;
}

} // namespace minn
