#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "minn/pooling.hpp"
#include "minn/types.hpp"

namespace minn {

// 4-layer fully-connected instance encoder (3 rectified hidden layers plus a
// linear embedding layer), followed by a pooling function and an affine head.
struct NetworkConfig {
    std::size_t input_dim = 0;
    std::array<std::size_t, 3> hidden = {64, 48, 32};
    std::size_t embedding_dim = 32;
    std::size_t attention_dim = 32;
    PoolingKind pooling = PoolingKind::sum;
    std::uint64_t seed = 0;

    bool needs_attention() const {
        return pooling == PoolingKind::att || pooling == PoolingKind::uatt;
    }
};

// All trainable tensors. Doubles as the gradient record, shape for shape.
struct ModelParams {
    std::vector<Matrix> enc_w;               // 4 layers, each out x in
    std::vector<std::vector<double>> enc_b;  // 4 layers
    AttentionParams attention;               // empty unless att/uatt
    std::vector<double> head_w;              // embedding_dim
    double head_b = 0.0;

    std::size_t count() const;  // total scalar parameters

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.enc_w == b.enc_w && a.enc_b == b.enc_b &&
               a.attention.V == b.attention.V && a.attention.w == b.attention.w &&
               a.head_w == b.head_w && a.head_b == b.head_b;
    }
};

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_bags = 8;
    double weight_decay = 1e-4;  // decoupled, applied to weights only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

struct Prediction {
    std::string patient_id;
    double probability;  // strictly inside (0,1)
};

// Deterministic per seed: weights uniform in +-sqrt(6/(fan_in+fan_out)),
// biases zero.
ModelParams init_params(const NetworkConfig& config);

struct ForwardResult {
    double probability;
    double logit;                   // pre-sigmoid head score
    Matrix embeddings;              // N x M
    std::vector<double> attention;  // empty unless att/uatt
};

ForwardResult forward(const ModelParams& params, const Bag& bag, const NetworkConfig& config);

// Binary cross-entropy evaluated from the pre-sigmoid logit:
//   max(s,0) - y*s + log1p(exp(-|s|))
double bce_loss(double logit, int label);

struct BatchGradient {
    ModelParams grads;  // d(mean BCE)/d(theta); weight decay lives in the optimizer
    double loss;        // mean BCE over the batch
};

// Exact gradient of the mean BCE over the batch. Per-bag gradients are
// computed independently (OpenMP) and reduced in bag order, so the result is
// bit-identical at any thread count.
BatchGradient gradient(const ModelParams& params, std::span<const Bag> batch,
                       const NetworkConfig& config);

// Plain-loop reference with the identical reduction order, kept for tests
// and the serial/parallel benchmark.
BatchGradient gradient_serial(const ModelParams& params, std::span<const Bag> batch,
                              const NetworkConfig& config);

// Adam moment state; step() applies one decoupled-weight-decay update.
struct AdamState {
    ModelParams m;
    ModelParams v;
    long t = 0;
};

AdamState make_adam_state(const NetworkConfig& config);
void adam_step(ModelParams& params, const BatchGradient& batch, AdamState& state,
               const TrainConfig& opt);

struct TrainResult {
    ModelParams params;
    std::vector<double> history;  // per-epoch mean loss, length == epochs
};

// Expects labeled, already-normalized bags. Bag order is reshuffled each
// epoch from opt.seed; fully deterministic per (config, opt) seeds.
TrainResult train(const Dataset& dataset, const NetworkConfig& net, const TrainConfig& opt);

std::vector<Prediction> predict(const ModelParams& params, std::span<const Bag> bags,
                                const NetworkConfig& config);

} // namespace minn
