#include "minn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "minn/error.hpp"
#include "minn/folds.hpp"
#include "minn/normalize.hpp"
#include "minn/rng.hpp"

namespace minn {

namespace {

void split_classes(std::span<const double> scores, std::span<const int> labels,
                   std::vector<double>& pos, std::vector<double>& neg) {
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    for (std::size_t i = 0; i < scores.size(); ++i)
        (labels[i] == 1 ? pos : neg).push_back(scores[i]);
}

// midranks (average ranks, 1-based) of v
std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    std::vector<double> pos, neg;
    split_classes(scores, labels, pos, neg);
    const std::size_t m = pos.size(), n = neg.size();
    if (m == 0 || n == 0) throw EvalError("AUC needs both classes present");

    // rank-sum formulation; midranks give the ties-count-half convention
    std::vector<double> all(pos);
    all.insert(all.end(), neg.begin(), neg.end());
    const auto ranks = midranks(all);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) rank_sum += ranks[i];
    return (rank_sum - 0.5 * static_cast<double>(m) * static_cast<double>(m + 1)) /
           (static_cast<double>(m) * static_cast<double>(n));
}

double delong_variance(std::span<const double> scores, std::span<const int> labels) {
    std::vector<double> pos, neg;
    split_classes(scores, labels, pos, neg);
    const std::size_t m = pos.size(), n = neg.size();
    if (m < 2 || n < 2) throw EvalError("DeLong variance needs at least 2 of each class");

    // placement values
    std::vector<double> v10(m, 0.0), v01(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double c = pos[i] > neg[j] ? 1.0 : (pos[i] == neg[j] ? 0.5 : 0.0);
            v10[i] += c;
            v01[j] += c;
        }
    for (double& v : v10) v /= static_cast<double>(n);
    for (double& v : v01) v /= static_cast<double>(m);

    auto sample_var = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return ss / static_cast<double>(v.size() - 1);
    };
    return sample_var(v10) / static_cast<double>(m) + sample_var(v01) / static_cast<double>(n);
}

CiSummary aggregate_ci(std::span<const double> run_aucs, std::span<const double> run_variances) {
    if (run_aucs.empty() || run_aucs.size() != run_variances.size())
        throw EvalError("need matching, non-empty AUC and variance sequences");
    const double mean_auc = std::accumulate(run_aucs.begin(), run_aucs.end(), 0.0) /
                            static_cast<double>(run_aucs.size());
    const double mean_var = std::accumulate(run_variances.begin(), run_variances.end(), 0.0) /
                            static_cast<double>(run_variances.size());
    const double half = 1.96 * std::sqrt(mean_var);
    return {mean_auc, std::max(0.0, mean_auc - half), std::min(1.0, mean_auc + half)};
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels) {
    std::vector<double> pos, neg;
    split_classes(scores, labels, pos, neg);
    if (pos.empty() || neg.empty()) throw EvalError("ROC needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k)
            (labels[order[k]] == 1 ? tp : fp)++;
        points.push_back({static_cast<double>(fp) / static_cast<double>(neg.size()),
                          static_cast<double>(tp) / static_cast<double>(pos.size())});
        i = j + 1;
    }
    return points;
}

// --- cross-validation driver -------------------------------------------------

std::string method_label(const Method& method) {
    if (const auto* mil = std::get_if<MilMethod>(&method))
        return std::string("minn+") + to_string(mil->net.pooling);
    return "lasso-lr";
}

namespace {

struct FoldOutcome {
    std::vector<std::pair<std::size_t, double>> probs;  // (bag index, probability)
    Normalizer normalizer;
};

std::vector<Bag> gather(const std::vector<Bag>& bags, const FoldPlan& plan, int fold,
                        bool in_fold) {
    std::vector<Bag> out;
    for (const auto& bag : bags) {
        const auto it = plan.assignments.find(bag.patient_id);
        if (it == plan.assignments.end()) continue;
        if ((it->second == fold) == in_fold) out.push_back(bag);
    }
    return out;
}

Matrix largest_lesion_matrix(const std::vector<Bag>& bags, std::size_t volume_index) {
    if (bags.empty()) return {};
    Matrix X(bags.size(), bags[0].instances[0].features.size());
    for (std::size_t i = 0; i < bags.size(); ++i) {
        const Instance& lesion = select_largest_lesion(bags[i], volume_index);
        std::copy(lesion.features.begin(), lesion.features.end(), X.row(i));
    }
    return X;
}

std::vector<int> bag_labels(const std::vector<Bag>& bags) {
    std::vector<int> y;
    y.reserve(bags.size());
    for (const auto& bag : bags) y.push_back(*bag.label);
    return y;
}

double pick_lambda(const std::vector<Bag>& train_bags, const BaselineMethod& method,
                   std::size_t volume_index, const std::vector<std::string>& feature_names,
                   std::uint64_t seed) {
    if (method.lambda_grid.empty()) return method.lambda;

    Dataset inner;
    inner.bags = train_bags;
    inner.feature_names = feature_names;
    const int k = std::min<int>(method.inner_folds, static_cast<int>(train_bags.size()));
    const FoldPlan plan = stratified_folds(inner, k, seed);

    std::vector<double> grid = method.lambda_grid;
    std::sort(grid.begin(), grid.end());

    double best_lambda = grid.front();
    double best_auc = -1.0;
    for (double lambda : grid) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (int fold = 0; fold < k; ++fold) {
            const auto fit_bags = gather(train_bags, plan, fold, false);
            const auto val_bags = gather(train_bags, plan, fold, true);
            if (fit_bags.empty() || val_bags.empty()) continue;
            const Matrix X = largest_lesion_matrix(fit_bags, volume_index);
            const auto y = bag_labels(fit_bags);
            if (std::count(y.begin(), y.end(), 1) == 0 ||
                std::count(y.begin(), y.end(), 0) == 0)
                continue;
            const LinearModel model =
                fit_l1_logreg(X, y, {lambda, method.max_iter, method.tol});
            const Matrix Xv = largest_lesion_matrix(val_bags, volume_index);
            const auto pv = predict_logreg(model, Xv);
            scores.insert(scores.end(), pv.begin(), pv.end());
            const auto yv = bag_labels(val_bags);
            labels.insert(labels.end(), yv.begin(), yv.end());
        }
        if (scores.empty()) continue;
        const double a = auc(scores, labels);
        if (a > best_auc) {
            best_auc = a;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

FoldOutcome run_fold_task(const Dataset& dataset, const std::vector<std::size_t>& labeled_idx,
                          const Method& method, const FoldPlan& plan, int fold,
                          std::uint64_t task_seed, std::size_t volume_index) {
    std::vector<Bag> train_bags, test_bags;
    std::vector<std::size_t> test_positions;  // indices into dataset.bags
    for (std::size_t idx : labeled_idx) {
        const Bag& bag = dataset.bags[idx];
        if (plan.assignments.at(bag.patient_id) == fold) {
            test_bags.push_back(bag);
            test_positions.push_back(idx);
        } else {
            train_bags.push_back(bag);
        }
    }

    FoldOutcome outcome;
    outcome.normalizer = fit_zscore(train_bags);  // train folds only, never the held-out fold
    const auto train_norm = apply_zscore(outcome.normalizer, train_bags);
    const auto test_norm = apply_zscore(outcome.normalizer, test_bags);

    std::vector<double> probs;
    if (const auto* mil = std::get_if<MilMethod>(&method)) {
        NetworkConfig net = mil->net;
        net.input_dim = dataset.width();
        net.seed = derive_seed(task_seed, 1);
        TrainConfig opt = mil->train;
        opt.seed = derive_seed(task_seed, 2);

        Dataset train_set;
        train_set.bags = train_norm;
        train_set.feature_names = dataset.feature_names;
        const TrainResult fitted = train(train_set, net, opt);
        for (const auto& pred : predict(fitted.params, test_norm, net))
            probs.push_back(pred.probability);
    } else {
        const auto& base = std::get<BaselineMethod>(method);
        const double lambda = pick_lambda(train_norm, base, volume_index, dataset.feature_names,
                                          derive_seed(task_seed, 3));
        const Matrix X = largest_lesion_matrix(train_norm, volume_index);
        const LinearModel model =
            fit_l1_logreg(X, bag_labels(train_norm), {lambda, base.max_iter, base.tol});
        probs = predict_logreg(model, largest_lesion_matrix(test_norm, volume_index));
    }

    for (std::size_t i = 0; i < test_positions.size(); ++i)
        outcome.probs.emplace_back(test_positions[i], probs[i]);
    return outcome;
}

} // namespace

EvalReport cross_validate(const Dataset& dataset, const Method& method, const CvOptions& options) {
    if (options.runs < 1) throw ConfigError("runs must be at least 1");
    if (options.folds < 2) throw ConfigError("folds must be at least 2");

    std::vector<std::size_t> labeled_idx;
    for (std::size_t i = 0; i < dataset.bags.size(); ++i)
        if (dataset.bags[i].label) labeled_idx.push_back(i);
    if (labeled_idx.empty()) throw EvalError("no labeled bags to cross-validate");

    std::size_t volume_index = 0;
    if (const auto* base = std::get_if<BaselineMethod>(&method))
        volume_index = feature_index(dataset, base->volume_feature);

    const int R = options.runs;
    const int K = options.folds;

    std::vector<FoldPlan> plans;
    plans.reserve(R);
    for (int r = 0; r < R; ++r)
        plans.push_back(stratified_folds(dataset, K, options.base_seed + static_cast<std::uint64_t>(r)));

    std::vector<std::vector<FoldOutcome>> outcomes(R, std::vector<FoldOutcome>(K));

    int workers = options.workers;
#ifdef _OPENMP
    if (workers <= 0) workers = omp_get_max_threads();
#else
    workers = 1;
#endif

    std::exception_ptr failure = nullptr;
    std::string failure_context;
    const int n_tasks = R * K;
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int task = 0; task < n_tasks; ++task) {
        const int r = task / K;
        const int fold = task % K;
        try {
            const std::uint64_t task_seed = derive_seed(options.base_seed, static_cast<std::uint64_t>(r),
                                                        static_cast<std::uint64_t>(fold));
            outcomes[r][fold] = run_fold_task(dataset, labeled_idx, method, plans[r], fold,
                                              task_seed, volume_index);
        } catch (const std::exception& e) {
#pragma omp critical
            if (!failure) {
                failure = std::current_exception();
                failure_context = "run " + std::to_string(r) + ", fold " + std::to_string(fold) +
                                  ": " + e.what();
            }
        }
    }
    if (failure) throw Error(failure_context);

    EvalReport report;
    report.method_label = method_label(method);
    report.runs = R;
    report.folds = K;
    report.base_seed = options.base_seed;

    std::vector<double> run_aucs, run_vars;
    for (int r = 0; r < R; ++r) {
        RunResult run;
        run.run_seed = options.base_seed + static_cast<std::uint64_t>(r);
        run.plan = plans[r];

        // merge fold predictions back into dataset bag order
        std::vector<double> prob_of(dataset.bags.size(), -1.0);
        for (int fold = 0; fold < K; ++fold) {
            for (const auto& [idx, prob] : outcomes[r][fold].probs) prob_of[idx] = prob;
            run.fold_stats.push_back({fold, outcomes[r][fold].normalizer});
        }

        std::vector<double> scores;
        std::vector<int> labels;
        for (std::size_t idx : labeled_idx) {
            const Bag& bag = dataset.bags[idx];
            const int fold = plans[r].assignments.at(bag.patient_id);
            run.predictions.push_back({bag.patient_id, fold, prob_of[idx], *bag.label});
            scores.push_back(prob_of[idx]);
            labels.push_back(*bag.label);
        }

        run.auc = auc(scores, labels);
        run.delong_variance = delong_variance(scores, labels);
        run_aucs.push_back(run.auc);
        run_vars.push_back(run.delong_variance);
        report.run_results.push_back(std::move(run));
    }

    const CiSummary ci = aggregate_ci(run_aucs, run_vars);
    report.mean_auc = ci.mean_auc;
    report.ci_low = ci.ci_low;
    report.ci_high = ci.ci_high;
    return report;
}

} // namespace minn
