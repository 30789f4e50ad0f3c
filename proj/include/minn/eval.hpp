#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "minn/baseline.hpp"
#include "minn/network.hpp"
#include "minn/types.hpp"

namespace minn {

// Mann-Whitney AUC: fraction of (positive, negative) pairs with the positive
// scored higher, ties counting one half. Computed via midranks.
double auc(std::span<const double> scores, std::span<const int> labels);

// DeLong structural-component variance: var(V10)/m + var(V01)/n with sample
// variances of the positive and negative placement values.
double delong_variance(std::span<const double> scores, std::span<const int> labels);

struct CiSummary {
    double mean_auc;
    double ci_low;
    double ci_high;
};

// mean(run_aucs) +- 1.96 * sqrt(mean(run_variances)), clipped to [0,1].
CiSummary aggregate_ci(std::span<const double> run_aucs, std::span<const double> run_variances);

// (FPR, TPR) per distinct threshold, for external plotting.
struct RocPoint {
    double fpr;
    double tpr;
};
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels);

// --- cross-validation driver -------------------------------------------------

struct MilMethod {
    NetworkConfig net;   // input_dim filled in by the driver
    TrainConfig train;
};

struct BaselineMethod {
    std::string volume_feature;
    double lambda = 0.01;
    std::vector<double> lambda_grid;  // when non-empty, inner-fold selection
    int inner_folds = 3;
    int max_iter = 5000;
    double tol = 1e-10;
};

using Method = std::variant<MilMethod, BaselineMethod>;

struct OutOfFoldPrediction {
    std::string patient_id;
    int fold;
    double probability;
    int label;
};

// Per-fold bookkeeping kept in memory for the leakage guard; never serialized.
struct FoldStats {
    int fold;
    Normalizer normalizer;
};

struct RunResult {
    std::uint64_t run_seed;
    std::vector<OutOfFoldPrediction> predictions;  // dataset bag order
    double auc;
    double delong_variance;
    FoldPlan plan;
    std::vector<FoldStats> fold_stats;
};

struct EvalReport {
    std::string method_label;
    int runs = 0;
    int folds = 0;
    std::uint64_t base_seed = 0;
    std::vector<RunResult> run_results;
    double mean_auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t excluded_censored = 0;
    // How the CI was aggregated, echoed into the report metadata.
    std::string ci_method = "mean_auc +- 1.96*sqrt(mean(per-run DeLong variance)), clipped to [0,1]";
};

struct CvOptions {
    int runs = 10;
    int folds = 10;
    std::uint64_t base_seed = 0;
    int workers = 0;  // 0: all available
};

// For each run r: stratified folds with seed base_seed + r; per fold, the
// normalizer is fit on the training bags only, the method trained on them,
// and the held-out fold predicted. Out-of-fold predictions are pooled per
// run before AUC/variance. (run, fold) tasks execute in parallel and merge
// by index, so reports are identical at any worker count.
EvalReport cross_validate(const Dataset& dataset, const Method& method, const CvOptions& options);

std::string method_label(const Method& method);

} // namespace minn
