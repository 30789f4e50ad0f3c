#include "minn/pooling.hpp"

#include <algorithm>
#include <cmath>

#include "minn/error.hpp"

namespace minn {

const char* to_string(PoolingKind kind) {
    switch (kind) {
        case PoolingKind::max: return "max";
        case PoolingKind::mean: return "mean";
        case PoolingKind::att: return "att";
        case PoolingKind::sum: return "sum";
        case PoolingKind::uatt: return "uatt";
    }
    return "?";
}

PoolingKind pooling_kind_from_string(const std::string& name) {
    for (PoolingKind kind : all_pooling_kinds())
        if (name == to_string(kind)) return kind;
    throw ConfigError("unknown pooling '" + name + "' (valid: max, mean, att, sum, uatt)");
}

std::vector<PoolingKind> all_pooling_kinds() {
    return {PoolingKind::max, PoolingKind::mean, PoolingKind::att, PoolingKind::sum,
            PoolingKind::uatt};
}

namespace {

void require_nonempty(const EmbeddingBag& bag) {
    if (bag.rows == 0) throw DomainError("pooling over an empty bag");
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

std::vector<double> pool_max(const EmbeddingBag& bag) {
    require_nonempty(bag);
    std::vector<double> z(bag.row(0), bag.row(0) + bag.cols);
    for (std::size_t n = 1; n < bag.rows; ++n)
        for (std::size_t j = 0; j < bag.cols; ++j) z[j] = std::max(z[j], bag(n, j));
    return z;
}

std::vector<double> pool_mean(const EmbeddingBag& bag) {
    require_nonempty(bag);
    std::vector<double> z = pool_sum(bag);
    for (double& v : z) v /= static_cast<double>(bag.rows);
    return z;
}

std::vector<double> pool_sum(const EmbeddingBag& bag) {
    require_nonempty(bag);
    std::vector<double> z(bag.cols, 0.0);
    for (std::size_t n = 0; n < bag.rows; ++n)
        for (std::size_t j = 0; j < bag.cols; ++j) z[j] += bag(n, j);
    return z;
}

std::vector<double> attention_logits(const AttentionParams& params, const EmbeddingBag& bag) {
    require_nonempty(bag);
    const std::size_t L = params.w.size();
    if (params.V.rows != L || params.V.cols != bag.cols)
        throw ShapeError("attention params do not match embedding width");

    std::vector<double> logits(bag.rows, 0.0);
    for (std::size_t n = 0; n < bag.rows; ++n) {
        double s = 0.0;
        for (std::size_t l = 0; l < L; ++l)
            s += params.w[l] * std::tanh(dot(params.V.row(l), bag.row(n), bag.cols));
        logits[n] = s;
    }
    return logits;
}

AttentionPooled pool_att(const AttentionParams& params, const EmbeddingBag& bag) {
    AttentionPooled out;
    const auto logits = attention_logits(params, bag);

    // softmax with max-logit subtraction
    const double peak = *std::max_element(logits.begin(), logits.end());
    out.weights.resize(bag.rows);
    double total = 0.0;
    for (std::size_t n = 0; n < bag.rows; ++n) {
        out.weights[n] = std::exp(logits[n] - peak);
        total += out.weights[n];
    }
    for (double& a : out.weights) a /= total;

    out.z.assign(bag.cols, 0.0);
    for (std::size_t n = 0; n < bag.rows; ++n)
        for (std::size_t j = 0; j < bag.cols; ++j) out.z[j] += out.weights[n] * bag(n, j);
    return out;
}

AttentionPooled pool_uatt(const AttentionParams& params, const EmbeddingBag& bag) {
    AttentionPooled out;
    const auto logits = attention_logits(params, bag);

    out.weights.resize(bag.rows);
    for (std::size_t n = 0; n < bag.rows; ++n) out.weights[n] = sigmoid(logits[n]);

    out.z.assign(bag.cols, 0.0);
    for (std::size_t n = 0; n < bag.rows; ++n)
        for (std::size_t j = 0; j < bag.cols; ++j) out.z[j] += out.weights[n] * bag(n, j);
    return out;
}

std::vector<double> pool(PoolingKind kind, const AttentionParams& params, const EmbeddingBag& bag) {
    switch (kind) {
        case PoolingKind::max: return pool_max(bag);
        case PoolingKind::mean: return pool_mean(bag);
        case PoolingKind::sum: return pool_sum(bag);
        case PoolingKind::att: return pool_att(params, bag).z;
        case PoolingKind::uatt: return pool_uatt(params, bag).z;
    }
    throw ConfigError("invalid pooling kind");
}

namespace {

constexpr double kCollapseInfNorm = 1e-9;

double inf_norm_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double gap = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) gap = std::max(gap, std::abs(a[j] - b[j]));
    return gap;
}

// The expected collapse pattern; pairs absent here carry no assertion.
bool must_collapse(PoolingKind kind, char tag) {
    switch (kind) {
        case PoolingKind::mean: return tag == 'b' || tag == 'c';
        case PoolingKind::max: return tag == 'a' || tag == 'c';
        case PoolingKind::att: return tag == 'c';
        default: return false;
    }
}

bool must_distinguish(PoolingKind kind) {
    return kind == PoolingKind::sum || kind == PoolingKind::uatt;
}

} // namespace

InjectivityReport injectivity_report(const std::vector<PoolingKind>& kinds,
                                     const std::vector<Fig2Pair>& pairs,
                                     const AttentionParams& params) {
    InjectivityReport report;
    report.asserts_hold = true;
    for (PoolingKind kind : kinds) {
        for (const auto& pair : pairs) {
            const auto z1 = pool(kind, params, pair.first);
            const auto z2 = pool(kind, params, pair.second);
            PairOutcome outcome;
            outcome.kind = kind;
            outcome.tag = pair.tag;
            outcome.gap = inf_norm_gap(z1, z2);
            outcome.collapsed = outcome.gap < kCollapseInfNorm;
            if (must_collapse(kind, pair.tag) && !outcome.collapsed) report.asserts_hold = false;
            if (must_distinguish(kind) && outcome.collapsed) report.asserts_hold = false;
            report.outcomes.push_back(outcome);
        }
    }
    return report;
}

nlohmann::json to_json(const InjectivityReport& report) {
    nlohmann::json doc;
    doc["collapse_threshold_inf_norm"] = kCollapseInfNorm;
    doc["asserts_hold"] = report.asserts_hold;
    nlohmann::json cases;
    for (const auto& o : report.outcomes) {
        nlohmann::json entry;
        entry["collapsed"] = o.collapsed;
        entry["gap_inf_norm"] = o.gap;
        cases[std::string(to_string(o.kind)) + "/" + o.tag] = entry;
    }
    doc["cases"] = cases;
    return doc;
}

} // namespace minn
