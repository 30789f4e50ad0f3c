#pragma once

#include <string>
#include <vector>

#include "minn/linalg.hpp"
#include "minn/types.hpp"

namespace minn {

// L1-regularized logistic regression on one designated lesion per patient.
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 0.0;
};

// Index of a named feature column; ConfigError when absent.
std::size_t feature_index(const Dataset& dataset, const std::string& name);

// Instance maximizing the designated volume feature; ties break to the
// lexicographically smallest tumor_id.
const Instance& select_largest_lesion(const Bag& bag, std::size_t volume_index);

struct L1FitOptions {
    double lambda = 0.01;
    int max_iter = 5000;
    double tol = 1e-10;  // stop when the parameter inf-norm change drops below
};

// Minimizes mean BCE + lambda * ||w||_1 (bias unpenalized) by proximal
// gradient with backtracking line search; the objective never increases.
LinearModel fit_l1_logreg(const Matrix& X, const std::vector<int>& y, const L1FitOptions& opts);

// Regularized objective at (weights, bias); exposed for convergence tests.
double l1_logreg_objective(const Matrix& X, const std::vector<int>& y,
                           const std::vector<double>& weights, double bias, double lambda);

// Smallest lambda that kills every weight: max_j |X^T (y - ybar)|_j / n.
double l1_kill_threshold(const Matrix& X, const std::vector<int>& y);

std::vector<double> predict_logreg(const LinearModel& model, const Matrix& X);

} // namespace minn
