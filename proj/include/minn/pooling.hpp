#pragma once

#include <string>
#include <vector>

#include "minn/linalg.hpp"

// nlohmann/json, vendored single header
#include "json.hpp"

namespace minn {

// N x M matrix of instance embeddings, one row per instance.
using EmbeddingBag = Matrix;

enum class PoolingKind { max, mean, att, sum, uatt };

const char* to_string(PoolingKind kind);
PoolingKind pooling_kind_from_string(const std::string& name);  // ConfigError on unknown
std::vector<PoolingKind> all_pooling_kinds();

// Parameters of the attention scorer: logit_n = w . tanh(V h_n).
struct AttentionParams {
    Matrix V;               // L x M
    std::vector<double> w;  // L

    bool empty() const { return w.empty(); }
};

// Elementwise max over rows.
std::vector<double> pool_max(const EmbeddingBag& bag);

// Arithmetic mean over rows.
std::vector<double> pool_mean(const EmbeddingBag& bag);

// Columnwise sum over rows.
std::vector<double> pool_sum(const EmbeddingBag& bag);

// Per-instance attention logits w . tanh(V h_n).
std::vector<double> attention_logits(const AttentionParams& params, const EmbeddingBag& bag);

struct AttentionPooled {
    std::vector<double> z;        // M
    std::vector<double> weights;  // N
};

// Softmax attention: z = sum_n a_n h_n with a = softmax(logits), sum a_n = 1.
AttentionPooled pool_att(const AttentionParams& params, const EmbeddingBag& bag);

// Sigmoid-gated attention: a_n = sigmoid(logit_n), weights not normalized
// across the bag, so a given embedding gets the same weight at any bag size.
AttentionPooled pool_uatt(const AttentionParams& params, const EmbeddingBag& bag);

// Dispatch on kind; attention kinds require non-empty params.
std::vector<double> pool(PoolingKind kind, const AttentionParams& params, const EmbeddingBag& bag);

// One of the three constructed bag pairs that non-injective poolings collapse:
//   a: {red} vs {red, green, green}, red elementwise-dominant
//   b: {red, green} vs {red, red, green, green}
//   c: {red, red} vs {red, red, red}
struct Fig2Pair {
    EmbeddingBag first;
    EmbeddingBag second;
    char tag = '?';
};

struct PairOutcome {
    PoolingKind kind;
    char tag;
    double gap;       // || z1 - z2 ||_inf
    bool collapsed;   // gap < 1e-9
};

struct InjectivityReport {
    std::vector<PairOutcome> outcomes;  // ordered by (kind, tag)
    // True when the expected pattern holds: mean collapses b and c, max
    // collapses a and c, att collapses c, and sum/uatt distinguish all cases.
    bool asserts_hold = false;
};

InjectivityReport injectivity_report(const std::vector<PoolingKind>& kinds,
                                     const std::vector<Fig2Pair>& pairs,
                                     const AttentionParams& params);

nlohmann::json to_json(const InjectivityReport& report);

} // namespace minn
