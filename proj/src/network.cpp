#include "minn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "minn/error.hpp"
#include "minn/rng.hpp"

namespace minn {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Encoder layer widths: D, hidden[0..2], M.
std::array<std::size_t, 5> layer_dims(const NetworkConfig& c) {
    return {c.input_dim, c.hidden[0], c.hidden[1], c.hidden[2], c.embedding_dim};
}

void validate_config(const NetworkConfig& c) {
    if (c.input_dim == 0) throw ConfigError("input_dim must be positive");
    for (std::size_t h : c.hidden)
        if (h == 0) throw ConfigError("zero-width hidden layer");
    if (c.embedding_dim == 0) throw ConfigError("embedding_dim must be positive");
    if (c.needs_attention() && c.attention_dim == 0)
        throw ConfigError("attention_dim must be positive for att/uatt pooling");
}

ModelParams zero_params(const NetworkConfig& c) {
    const auto dims = layer_dims(c);
    ModelParams p;
    for (int k = 0; k < 4; ++k) {
        p.enc_w.emplace_back(dims[k + 1], dims[k]);
        p.enc_b.emplace_back(dims[k + 1], 0.0);
    }
    if (c.needs_attention()) {
        p.attention.V = Matrix(c.attention_dim, c.embedding_dim);
        p.attention.w.assign(c.attention_dim, 0.0);
    }
    p.head_w.assign(c.embedding_dim, 0.0);
    p.head_b = 0.0;
    return p;
}

} // namespace

std::size_t ModelParams::count() const {
    std::size_t n = 0;
    for (const auto& w : enc_w) n += w.data.size();
    for (const auto& b : enc_b) n += b.size();
    n += attention.V.data.size() + attention.w.size();
    n += head_w.size() + 1;
    return n;
}

ModelParams init_params(const NetworkConfig& config) {
    validate_config(config);
    const auto dims = layer_dims(config);
    ModelParams p = zero_params(config);
    Rng rng(config.seed);

    auto fill_uniform = [&](std::vector<double>& v, std::size_t fan_in, std::size_t fan_out) {
        const double scale = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (double& x : v) x = dist(rng);
    };

    for (int k = 0; k < 4; ++k) fill_uniform(p.enc_w[k].data, dims[k], dims[k + 1]);
    if (config.needs_attention()) {
        fill_uniform(p.attention.V.data, config.embedding_dim, config.attention_dim);
        fill_uniform(p.attention.w, config.attention_dim, 1);
    }
    fill_uniform(p.head_w, config.embedding_dim, 1);
    return p;
}

double bce_loss(double logit, int label) {
    return std::max(logit, 0.0) - label * logit + std::log1p(std::exp(-std::abs(logit)));
}

namespace {

// Everything the backward pass needs from one bag's forward pass.
struct BagTrace {
    Matrix input;                    // N x D
    std::array<Matrix, 4> pre;       // pre-activations per layer
    std::array<Matrix, 4> act;       // act[3] == embeddings H
    std::vector<double> z;           // pooled representation
    std::vector<double> att_weights; // a_n for att/uatt
    Matrix att_tanh;                 // N x L, tanh(V h_n)
    double logit = 0.0;
    double probability = 0.5;
};

Matrix features_matrix(const Bag& bag, const NetworkConfig& config) {
    if (bag.instances.empty()) throw DomainError("bag '" + bag.patient_id + "' is empty");
    Matrix x(bag.instances.size(), config.input_dim);
    for (std::size_t n = 0; n < bag.instances.size(); ++n) {
        const auto& f = bag.instances[n].features;
        if (f.size() != config.input_dim)
            throw ShapeError("bag '" + bag.patient_id + "': feature width " +
                             std::to_string(f.size()) + " != input_dim " +
                             std::to_string(config.input_dim));
        std::copy(f.begin(), f.end(), x.row(n));
    }
    return x;
}

BagTrace forward_trace(const ModelParams& p, const Bag& bag, const NetworkConfig& config) {
    BagTrace t;
    t.input = features_matrix(bag, config);
    const std::size_t N = t.input.rows;

    const Matrix* prev = &t.input;
    for (int k = 0; k < 4; ++k) {
        const Matrix& w = p.enc_w[k];
        t.pre[k] = Matrix(N, w.rows);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t o = 0; o < w.rows; ++o)
                t.pre[k](n, o) = dot(w.row(o), prev->row(n), w.cols) + p.enc_b[k][o];
        if (k < 3) {
            t.act[k] = t.pre[k];
            for (double& v : t.act[k].data) v = std::max(v, 0.0);  // rectifier
        } else {
            t.act[k] = t.pre[k];  // embedding layer is linear
        }
        prev = &t.act[k];
    }
    const Matrix& H = t.act[3];

    switch (config.pooling) {
        case PoolingKind::max: t.z = pool_max(H); break;
        case PoolingKind::mean: t.z = pool_mean(H); break;
        case PoolingKind::sum: t.z = pool_sum(H); break;
        case PoolingKind::att:
        case PoolingKind::uatt: {
            // keep tanh(V h_n) around for the backward pass
            const std::size_t L = p.attention.w.size();
            t.att_tanh = Matrix(N, L);
            std::vector<double> logits(N, 0.0);
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t l = 0; l < L; ++l) {
                    t.att_tanh(n, l) = std::tanh(dot(p.attention.V.row(l), H.row(n), H.cols));
                    logits[n] += p.attention.w[l] * t.att_tanh(n, l);
                }
            }
            t.att_weights.resize(N);
            if (config.pooling == PoolingKind::att) {
                const double peak = *std::max_element(logits.begin(), logits.end());
                double total = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    t.att_weights[n] = std::exp(logits[n] - peak);
                    total += t.att_weights[n];
                }
                for (double& a : t.att_weights) a /= total;
            } else {
                for (std::size_t n = 0; n < N; ++n) t.att_weights[n] = sigmoid(logits[n]);
            }
            t.z.assign(H.cols, 0.0);
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t j = 0; j < H.cols; ++j) t.z[j] += t.att_weights[n] * H(n, j);
            break;
        }
    }

    t.logit = dot(p.head_w, t.z) + p.head_b;
    t.probability = sigmoid(t.logit);
    if (!std::isfinite(t.logit))
        throw NumericError("non-finite logit for bag '" + bag.patient_id + "'");
    return t;
}

// Accumulates this bag's gradient, scaled by `scale`, into `g`.
double backward_into(const ModelParams& p, const BagTrace& t, int label,
                     const NetworkConfig& config, double scale, ModelParams& g) {
    const Matrix& H = t.act[3];
    const std::size_t N = H.rows;
    const std::size_t M = H.cols;

    const double ds = (t.probability - label) * scale;

    for (std::size_t j = 0; j < M; ++j) g.head_w[j] += ds * t.z[j];
    g.head_b += ds;

    std::vector<double> dz(M);
    for (std::size_t j = 0; j < M; ++j) dz[j] = ds * p.head_w[j];

    Matrix dH(N, M);
    switch (config.pooling) {
        case PoolingKind::sum:
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t j = 0; j < M; ++j) dH(n, j) = dz[j];
            break;
        case PoolingKind::mean:
            for (std::size_t n = 0; n < N; ++n)
                for (std::size_t j = 0; j < M; ++j) dH(n, j) = dz[j] / static_cast<double>(N);
            break;
        case PoolingKind::max:
            // subgradient: route each column to its argmax row, lowest index on ties
            for (std::size_t j = 0; j < M; ++j) {
                std::size_t best = 0;
                for (std::size_t n = 1; n < N; ++n)
                    if (H(n, j) > H(best, j)) best = n;
                dH(best, j) += dz[j];
            }
            break;
        case PoolingKind::att:
        case PoolingKind::uatt: {
            const std::size_t L = p.attention.w.size();
            const auto& a = t.att_weights;

            std::vector<double> da(N);
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t j = 0; j < M; ++j) dH(n, j) = a[n] * dz[j];
                da[n] = dot(dz.data(), H.row(n), M);
            }

            std::vector<double> dlogit(N);
            if (config.pooling == PoolingKind::att) {
                double coupled = 0.0;
                for (std::size_t n = 0; n < N; ++n) coupled += a[n] * da[n];
                for (std::size_t n = 0; n < N; ++n) dlogit[n] = a[n] * (da[n] - coupled);
            } else {
                for (std::size_t n = 0; n < N; ++n) dlogit[n] = a[n] * (1.0 - a[n]) * da[n];
            }

            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t l = 0; l < L; ++l) {
                    const double tn = t.att_tanh(n, l);
                    g.attention.w[l] += dlogit[n] * tn;
                    const double dpre = dlogit[n] * p.attention.w[l] * (1.0 - tn * tn);
                    for (std::size_t j = 0; j < M; ++j) {
                        g.attention.V(l, j) += dpre * H(n, j);
                        dH(n, j) += p.attention.V(l, j) * dpre;
                    }
                }
            }
            break;
        }
    }

    // encoder backward; layer 3 is linear, layers 2..0 rectified
    Matrix dact = std::move(dH);
    for (int k = 3; k >= 0; --k) {
        Matrix dpre = std::move(dact);
        if (k < 3)
            for (std::size_t i = 0; i < dpre.data.size(); ++i)
                if (t.pre[k].data[i] <= 0.0) dpre.data[i] = 0.0;

        const Matrix& below = k == 0 ? t.input : t.act[k - 1];
        Matrix& gw = g.enc_w[k];
        auto& gb = g.enc_b[k];
        for (std::size_t n = 0; n < dpre.rows; ++n)
            for (std::size_t o = 0; o < dpre.cols; ++o) {
                const double d = dpre(n, o);
                if (d == 0.0) continue;
                gb[o] += d;
                const double* in_row = below.row(n);
                double* gw_row = gw.row(o);
                for (std::size_t i = 0; i < gw.cols; ++i) gw_row[i] += d * in_row[i];
            }

        if (k > 0) {
            const Matrix& w = p.enc_w[k];
            dact = Matrix(dpre.rows, w.cols);
            for (std::size_t n = 0; n < dpre.rows; ++n)
                for (std::size_t o = 0; o < dpre.cols; ++o) {
                    const double d = dpre(n, o);
                    if (d == 0.0) continue;
                    const double* w_row = w.row(o);
                    double* da_row = dact.row(n);
                    for (std::size_t i = 0; i < w.cols; ++i) da_row[i] += d * w_row[i];
                }
        }
    }

    return bce_loss(t.logit, label);
}

void check_finite(const ModelParams& g) {
    auto check = [](const std::vector<double>& v, const char* name) {
        for (double x : v)
            if (!std::isfinite(x)) throw NumericError(std::string("non-finite gradient in ") + name);
    };
    for (std::size_t k = 0; k < g.enc_w.size(); ++k) {
        check(g.enc_w[k].data, "encoder weights");
        check(g.enc_b[k], "encoder biases");
    }
    check(g.attention.V.data, "attention V");
    check(g.attention.w, "attention w");
    check(g.head_w, "head weights");
    if (!std::isfinite(g.head_b)) throw NumericError("non-finite gradient in head bias");
}

BatchGradient gradient_impl(const ModelParams& params, std::span<const Bag> batch,
                            const NetworkConfig& config, bool parallel) {
    validate_config(config);
    if (batch.empty()) throw TrainError("gradient over an empty batch");
    const double scale = 1.0 / static_cast<double>(batch.size());

    for (const Bag& bag : batch)
        if (!bag.label) throw TrainError("bag '" + bag.patient_id + "' has no label");

    std::vector<ModelParams> partial(batch.size());
    std::vector<double> losses(batch.size());

    // exceptions cannot cross the parallel region; carry them out by hand
    std::exception_ptr failure = nullptr;
    const std::ptrdiff_t n_bags = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t i = 0; i < n_bags; ++i) {
        try {
            const Bag& bag = batch[i];
            partial[i] = zero_params(config);
            const BagTrace trace = forward_trace(params, bag, config);
            losses[i] = backward_into(params, trace, *bag.label, config, scale, partial[i]);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    // fixed-order reduction: identical bits at any thread count
    BatchGradient out;
    out.grads = std::move(partial[0]);
    out.loss = losses[0];
    for (std::size_t i = 1; i < partial.size(); ++i) {
        const ModelParams& g = partial[i];
        for (std::size_t k = 0; k < 4; ++k) {
            for (std::size_t j = 0; j < g.enc_w[k].data.size(); ++j)
                out.grads.enc_w[k].data[j] += g.enc_w[k].data[j];
            for (std::size_t j = 0; j < g.enc_b[k].size(); ++j)
                out.grads.enc_b[k][j] += g.enc_b[k][j];
        }
        for (std::size_t j = 0; j < g.attention.V.data.size(); ++j)
            out.grads.attention.V.data[j] += g.attention.V.data[j];
        for (std::size_t j = 0; j < g.attention.w.size(); ++j)
            out.grads.attention.w[j] += g.attention.w[j];
        for (std::size_t j = 0; j < g.head_w.size(); ++j) out.grads.head_w[j] += g.head_w[j];
        out.grads.head_b += g.head_b;
        out.loss += losses[i];
    }
    out.loss *= scale;
    check_finite(out.grads);
    return out;
}

} // namespace

ForwardResult forward(const ModelParams& params, const Bag& bag, const NetworkConfig& config) {
    validate_config(config);
    BagTrace t = forward_trace(params, bag, config);
    ForwardResult r;
    r.probability = t.probability;
    r.logit = t.logit;
    r.embeddings = std::move(t.act[3]);
    r.attention = std::move(t.att_weights);
    return r;
}

BatchGradient gradient(const ModelParams& params, std::span<const Bag> batch,
                       const NetworkConfig& config) {
    return gradient_impl(params, batch, config, true);
}

BatchGradient gradient_serial(const ModelParams& params, std::span<const Bag> batch,
                              const NetworkConfig& config) {
    return gradient_impl(params, batch, config, false);
}

AdamState make_adam_state(const NetworkConfig& config) {
    AdamState s;
    s.m = zero_params(config);
    s.v = zero_params(config);
    return s;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                 std::vector<double>& v, const TrainConfig& opt, double bc1, double bc2,
                 bool decay) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
        double step = opt.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt.epsilon);
        if (decay) step += opt.learning_rate * opt.weight_decay * p[i];  // decoupled decay
        p[i] -= step;
    }
}

} // namespace

void adam_step(ModelParams& params, const BatchGradient& batch, AdamState& state,
               const TrainConfig& opt) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
    const ModelParams& g = batch.grads;

    for (std::size_t k = 0; k < params.enc_w.size(); ++k) {
        adam_update(params.enc_w[k].data, g.enc_w[k].data, state.m.enc_w[k].data,
                    state.v.enc_w[k].data, opt, bc1, bc2, true);
        adam_update(params.enc_b[k], g.enc_b[k], state.m.enc_b[k], state.v.enc_b[k], opt, bc1,
                    bc2, false);
    }
    if (!params.attention.w.empty()) {
        adam_update(params.attention.V.data, g.attention.V.data, state.m.attention.V.data,
                    state.v.attention.V.data, opt, bc1, bc2, true);
        adam_update(params.attention.w, g.attention.w, state.m.attention.w, state.v.attention.w,
                    opt, bc1, bc2, true);
    }
    adam_update(params.head_w, g.head_w, state.m.head_w, state.v.head_w, opt, bc1, bc2, true);

    state.m.head_b = opt.beta1 * state.m.head_b + (1.0 - opt.beta1) * g.head_b;
    state.v.head_b = opt.beta2 * state.v.head_b + (1.0 - opt.beta2) * g.head_b * g.head_b;
    params.head_b -=
        opt.learning_rate * (state.m.head_b / bc1) / (std::sqrt(state.v.head_b / bc2) + opt.epsilon);
}

TrainResult train(const Dataset& dataset, const NetworkConfig& net, const TrainConfig& opt) {
    validate_config(net);
    if (opt.epochs < 1) throw ConfigError("epochs must be at least 1");
    if (opt.batch_bags < 1) throw ConfigError("batch_bags must be at least 1");
    if (opt.learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (dataset.bags.empty()) throw TrainError("empty training set");
    if (dataset.width() != net.input_dim)
        throw ShapeError("dataset width " + std::to_string(dataset.width()) +
                         " != input_dim " + std::to_string(net.input_dim));
    for (const auto& bag : dataset.bags)
        if (!bag.label) throw TrainError("bag '" + bag.patient_id + "' has no label");

    TrainResult result;
    result.params = init_params(net);
    AdamState adam = make_adam_state(net);
    Rng shuffle_rng(opt.seed);

    std::vector<std::size_t> order(dataset.bags.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t n = dataset.bags.size();
    std::vector<Bag> shuffled;
    shuffled.reserve(n);

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        shuffled.clear();
        for (std::size_t i : order) shuffled.push_back(dataset.bags[i]);

        double loss_sum = 0.0;
        for (std::size_t pos = 0; pos < n; pos += opt.batch_bags) {
            const std::size_t len = std::min<std::size_t>(opt.batch_bags, n - pos);
            const std::span<const Bag> batch(shuffled.data() + pos, len);
            const BatchGradient g = gradient(result.params, batch, net);
            adam_step(result.params, g, adam, opt);
            loss_sum += g.loss * static_cast<double>(len);
        }
        result.history.push_back(loss_sum / static_cast<double>(n));
    }
    return result;
}

std::vector<Prediction> predict(const ModelParams& params, std::span<const Bag> bags,
                                const NetworkConfig& config) {
    validate_config(config);
    std::vector<Prediction> out(bags.size());
    std::exception_ptr failure = nullptr;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(bags.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const BagTrace t = forward_trace(params, bags[i], config);
            out[i] = {bags[i].patient_id, t.probability};
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

} // namespace minn
