#include "minn/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "minn/error.hpp"

namespace minn {

std::size_t feature_index(const Dataset& dataset, const std::string& name) {
    for (std::size_t j = 0; j < dataset.feature_names.size(); ++j)
        if (dataset.feature_names[j] == name) return j;
    throw ConfigError("volume feature '" + name + "' is not a column of this dataset");
}

const Instance& select_largest_lesion(const Bag& bag, std::size_t volume_index) {
    if (bag.instances.empty()) throw DomainError("bag '" + bag.patient_id + "' is empty");
    const Instance* best = &bag.instances[0];
    for (const auto& inst : bag.instances) {
        if (volume_index >= inst.features.size())
            throw ShapeError("volume feature index out of range");
        const double v = inst.features[volume_index];
        const double b = best->features[volume_index];
        if (v > b || (v == b && inst.tumor_id < best->tumor_id)) best = &inst;
    }
    return *best;
}

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double bce(double logit, int y) {
    return std::max(logit, 0.0) - y * logit + std::log1p(std::exp(-std::abs(logit)));
}

// mean BCE and its gradient at (w, b)
double smooth_loss(const Matrix& X, const std::vector<int>& y, const std::vector<double>& w,
                   double b, std::vector<double>* gw = nullptr, double* gb = nullptr) {
    const std::size_t n = X.rows;
    if (gw) gw->assign(X.cols, 0.0);
    if (gb) *gb = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = dot(X.row(i), w.data(), X.cols) + b;
        loss += bce(s, y[i]);
        if (gw) {
            const double r = sigmoid(s) - y[i];
            for (std::size_t j = 0; j < X.cols; ++j) (*gw)[j] += r * X(i, j);
            *gb += r;
        }
    }
    if (gw)
        for (double& g : *gw) g /= static_cast<double>(n);
    if (gb) *gb /= static_cast<double>(n);
    return loss / static_cast<double>(n);
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

} // namespace

double l1_logreg_objective(const Matrix& X, const std::vector<int>& y,
                           const std::vector<double>& weights, double bias, double lambda) {
    double l1 = 0.0;
    for (double w : weights) l1 += std::abs(w);
    return smooth_loss(X, y, weights, bias) + lambda * l1;
}

double l1_kill_threshold(const Matrix& X, const std::vector<int>& y) {
    const std::size_t n = X.rows;
    double ybar = 0.0;
    for (int v : y) ybar += v;
    ybar /= static_cast<double>(n);
    double peak = 0.0;
    for (std::size_t j = 0; j < X.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += X(i, j) * (y[i] - ybar);
        peak = std::max(peak, std::abs(s) / static_cast<double>(n));
    }
    return peak;
}

LinearModel fit_l1_logreg(const Matrix& X, const std::vector<int>& y, const L1FitOptions& opts) {
    if (X.rows != y.size()) throw ShapeError("X rows and y length differ");
    if (X.rows < 2) throw FitError("need at least 2 observations");
    if (opts.lambda < 0) throw ConfigError("lambda must be non-negative");
    const bool has_pos = std::count(y.begin(), y.end(), 1) > 0;
    const bool has_neg = std::count(y.begin(), y.end(), 0) > 0;
    if (!has_pos || !has_neg) throw FitError("both classes must be present");

    LinearModel model;
    model.weights.assign(X.cols, 0.0);
    model.bias = 0.0;
    model.lambda = opts.lambda;

    std::vector<double> gw;
    double gb = 0.0;
    double step = 1.0;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const double f0 = smooth_loss(X, y, model.weights, model.bias, &gw, &gb);

        // backtracking: shrink the step until the quadratic model majorizes f
        std::vector<double> w_new(X.cols);
        double b_new = 0.0;
        for (;;) {
            for (std::size_t j = 0; j < X.cols; ++j)
                w_new[j] = soft_threshold(model.weights[j] - step * gw[j], step * opts.lambda);
            b_new = model.bias - step * gb;

            double lin = 0.0, quad = 0.0;
            for (std::size_t j = 0; j < X.cols; ++j) {
                const double d = w_new[j] - model.weights[j];
                lin += gw[j] * d;
                quad += d * d;
            }
            const double db = b_new - model.bias;
            lin += gb * db;
            quad += db * db;

            const double f_new = smooth_loss(X, y, w_new, b_new);
            if (f_new <= f0 + lin + quad / (2.0 * step) + 1e-15) break;
            step *= 0.5;
            if (step < 1e-18) break;  // gradient is numerically flat
        }

        double change = std::abs(b_new - model.bias);
        for (std::size_t j = 0; j < X.cols; ++j)
            change = std::max(change, std::abs(w_new[j] - model.weights[j]));

        model.weights = std::move(w_new);
        model.bias = b_new;
        if (change < opts.tol) break;
        step = std::min(step * 2.0, 1e6);  // let the step grow back between iterations
    }
    return model;
}

std::vector<double> predict_logreg(const LinearModel& model, const Matrix& X) {
    if (X.cols != model.weights.size()) throw ShapeError("feature width does not match the model");
    std::vector<double> probs(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i)
        probs[i] = sigmoid(dot(X.row(i), model.weights.data(), X.cols) + model.bias);
    return probs;
}

} // namespace minn
