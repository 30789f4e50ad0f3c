#include "minn/synth.hpp"

#include <algorithm>
#include <string>

#include "minn/error.hpp"
#include "minn/rng.hpp"

namespace minn {

std::vector<Fig2Pair> gen_fig2_pairs(std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("dim must be at least 1");

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.1, 1.0);

    // One (red, green) draw shared by all three cases; red strictly dominates
    // green elementwise, which case (a) needs for the max collapse.
    std::vector<double> green(dim), red(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        green[j] = unif(rng);
        red[j] = green[j] + unif(rng);
    }

    auto make_bag = [&](const std::vector<const std::vector<double>*>& rows) {
        EmbeddingBag bag(rows.size(), dim);
        for (std::size_t n = 0; n < rows.size(); ++n)
            std::copy(rows[n]->begin(), rows[n]->end(), bag.row(n));
        return bag;
    };

    std::vector<Fig2Pair> pairs;
    pairs.push_back({make_bag({&red}), make_bag({&red, &green, &green}), 'a'});
    pairs.push_back({make_bag({&red, &green}), make_bag({&red, &red, &green, &green}), 'b'});
    pairs.push_back({make_bag({&red, &red}), make_bag({&red, &red, &red}), 'c'});
    return pairs;
}

namespace {

std::string zero_padded(std::size_t value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

Dataset generate_once(const CountingTaskConfig& cfg, double rate) {
    Rng rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> size_dist(cfg.min_bag_size, cfg.max_bag_size);
    std::bernoulli_distribution risk(rate);
    std::normal_distribution<double> noise(0.0, cfg.sigma);

    Dataset dataset;
    for (std::size_t j = 0; j < cfg.dim; ++j) dataset.feature_names.push_back("f" + std::to_string(j));

    for (std::size_t b = 0; b < cfg.n_bags; ++b) {
        Bag bag;
        bag.patient_id = "b" + zero_padded(b, 4);
        const std::size_t size = size_dist(rng);
        int high_count = 0;
        for (std::size_t i = 0; i < size; ++i) {
            Instance inst;
            inst.patient_id = bag.patient_id;
            inst.tumor_id = "t" + std::to_string(i);
            const bool high = risk(rng);
            high_count += high;
            inst.true_class = high ? 1 : 0;
            const double mu = high ? cfg.mu_high : cfg.mu_low;
            inst.features.resize(cfg.dim);
            for (std::size_t j = 0; j < cfg.dim; ++j) inst.features[j] = mu + noise(rng);
            bag.instances.push_back(std::move(inst));
        }
        bag.label = high_count >= cfg.threshold ? 1 : 0;
        dataset.bags.push_back(std::move(bag));
    }
    return dataset;
}

} // namespace

Dataset gen_counting_task(const CountingTaskConfig& cfg) {
    if (cfg.n_bags < 1) throw ConfigError("n_bags must be positive");
    if (cfg.min_bag_size < 1 || cfg.min_bag_size > cfg.max_bag_size)
        throw ConfigError("infeasible bag size range");
    if (cfg.threshold < 1) throw ConfigError("threshold must be at least 1");
    if (cfg.high_risk_rate <= 0 || cfg.high_risk_rate >= 1)
        throw ConfigError("high_risk_rate must be inside (0,1)");

    // Shift the Bernoulli rate toward balance until the label mix lands in
    // [0.2, 0.8]; still a pure function of the config.
    double rate = cfg.high_risk_rate;
    for (int attempt = 0; attempt < 16; ++attempt) {
        Dataset dataset = generate_once(cfg, rate);
        std::size_t positives = 0;
        for (const auto& bag : dataset.bags) positives += *bag.label;
        const double share = static_cast<double>(positives) / static_cast<double>(cfg.n_bags);
        if (share >= 0.2 && share <= 0.8) return dataset;
        rate = share < 0.2 ? std::min(0.95, rate * 1.3) : std::max(0.05, rate / 1.3);
    }
    throw ConfigError("could not reach a usable label balance; adjust high_risk_rate");
}

} // namespace minn
