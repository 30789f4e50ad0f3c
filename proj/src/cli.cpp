#include "minn/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "minn/checkpoint.hpp"
#include "minn/csv.hpp"
#include "minn/error.hpp"
#include "minn/eval.hpp"
#include "minn/labels.hpp"
#include "minn/normalize.hpp"
#include "minn/report.hpp"
#include "minn/rng.hpp"
#include "minn/synth.hpp"

namespace minn::cli {

namespace {

using nlohmann::json;

constexpr const char* kPoolingChoices[] = {"max", "mean", "att", "sum", "uatt"};

// Effective experiment configuration: config-file values overridden by flags.
struct ExperimentConfig {
    std::string data;
    std::optional<double> horizon_days;
    std::string method = "sum";  // pooling kind or "baseline"
    std::string volume_feature;

    std::vector<std::size_t> hidden = {64, 48, 32};
    std::size_t embedding_dim = 32;
    std::size_t attention_dim = 32;

    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_bags = 8;
    double weight_decay = 1e-4;

    double lambda = 0.01;
    std::vector<double> lambda_grid;
    int inner_folds = 3;

    int runs = 10;
    int folds = 10;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out = "out";
    bool roc = false;
};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }

    check_keys(doc, {"data", "horizon_days", "method", "volume_feature", "network", "train",
                     "baseline", "runs", "folds", "seed", "workers", "out", "roc"},
               "config");

    ExperimentConfig cfg;
    try {
        if (doc.contains("data")) cfg.data = doc["data"].get<std::string>();
        if (doc.contains("horizon_days")) cfg.horizon_days = doc["horizon_days"].get<double>();
        if (doc.contains("method")) cfg.method = doc["method"].get<std::string>();
        if (doc.contains("volume_feature"))
            cfg.volume_feature = doc["volume_feature"].get<std::string>();
        if (doc.contains("network")) {
            const json& net = doc["network"];
            check_keys(net, {"hidden", "embedding_dim", "attention_dim"}, "config.network");
            if (net.contains("hidden")) cfg.hidden = net["hidden"].get<std::vector<std::size_t>>();
            if (net.contains("embedding_dim"))
                cfg.embedding_dim = net["embedding_dim"].get<std::size_t>();
            if (net.contains("attention_dim"))
                cfg.attention_dim = net["attention_dim"].get<std::size_t>();
        }
        if (doc.contains("train")) {
            const json& tr = doc["train"];
            check_keys(tr, {"learning_rate", "epochs", "batch_bags", "weight_decay"},
                       "config.train");
            if (tr.contains("learning_rate")) cfg.learning_rate = tr["learning_rate"].get<double>();
            if (tr.contains("epochs")) cfg.epochs = tr["epochs"].get<int>();
            if (tr.contains("batch_bags")) cfg.batch_bags = tr["batch_bags"].get<int>();
            if (tr.contains("weight_decay")) cfg.weight_decay = tr["weight_decay"].get<double>();
        }
        if (doc.contains("baseline")) {
            const json& bl = doc["baseline"];
            check_keys(bl, {"lambda", "lambda_grid", "inner_folds"}, "config.baseline");
            if (bl.contains("lambda")) cfg.lambda = bl["lambda"].get<double>();
            if (bl.contains("lambda_grid"))
                cfg.lambda_grid = bl["lambda_grid"].get<std::vector<double>>();
            if (bl.contains("inner_folds")) cfg.inner_folds = bl["inner_folds"].get<int>();
        }
        if (doc.contains("runs")) cfg.runs = doc["runs"].get<int>();
        if (doc.contains("folds")) cfg.folds = doc["folds"].get<int>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("workers")) cfg.workers = doc["workers"].get<int>();
        if (doc.contains("out")) cfg.out = doc["out"].get<std::string>();
        if (doc.contains("roc")) cfg.roc = doc["roc"].get<bool>();
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["data"] = cfg.data;
    if (cfg.horizon_days) doc["horizon_days"] = *cfg.horizon_days;
    doc["method"] = cfg.method;
    if (!cfg.volume_feature.empty()) doc["volume_feature"] = cfg.volume_feature;
    doc["network"] = {{"hidden", cfg.hidden},
                      {"embedding_dim", cfg.embedding_dim},
                      {"attention_dim", cfg.attention_dim}};
    doc["train"] = {{"learning_rate", cfg.learning_rate},
                    {"epochs", cfg.epochs},
                    {"batch_bags", cfg.batch_bags},
                    {"weight_decay", cfg.weight_decay}};
    doc["baseline"] = {{"lambda", cfg.lambda},
                       {"lambda_grid", cfg.lambda_grid},
                       {"inner_folds", cfg.inner_folds}};
    doc["runs"] = cfg.runs;
    doc["folds"] = cfg.folds;
    doc["seed"] = cfg.seed;
    doc["workers"] = cfg.workers;
    doc["out"] = cfg.out;
    doc["roc"] = cfg.roc;
    return doc;
}

void write_resolved_config(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "config.resolved.json");
    if (!out) throw Error("cannot write config.resolved.json");
    out << config_to_json(cfg).dump(2) << '\n';
}

NetworkConfig make_network_config(const ExperimentConfig& cfg) {
    if (cfg.hidden.size() != 3)
        throw ConfigError("network.hidden must list exactly 3 hidden widths");
    NetworkConfig net;
    net.hidden = {cfg.hidden[0], cfg.hidden[1], cfg.hidden[2]};
    net.embedding_dim = cfg.embedding_dim;
    net.attention_dim = cfg.attention_dim;
    net.pooling = pooling_kind_from_string(cfg.method);
    return net;
}

TrainConfig make_train_config(const ExperimentConfig& cfg) {
    TrainConfig opt;
    opt.learning_rate = cfg.learning_rate;
    opt.epochs = cfg.epochs;
    opt.batch_bags = cfg.batch_bags;
    opt.weight_decay = cfg.weight_decay;
    return opt;
}

// Loads the feature table and resolves labels: with a horizon, binary labels
// are derived from survival_days/event; otherwise the label column is used.
struct LoadedData {
    Dataset dataset;
    std::size_t excluded_censored = 0;
};

LoadedData load_and_label(const ExperimentConfig& cfg) {
    if (cfg.data.empty()) throw ConfigError("no input data given (--data or config 'data')");
    LoadedData loaded;
    loaded.dataset = load_feature_table(cfg.data);
    if (cfg.horizon_days) {
        LabelingResult labeled = make_binary_labels(loaded.dataset, *cfg.horizon_days);
        loaded.dataset = std::move(labeled.dataset);
        loaded.excluded_censored = labeled.excluded_censored;
    }
    return loaded;
}

Method make_method(const ExperimentConfig& cfg) {
    if (cfg.method == "baseline") {
        if (cfg.volume_feature.empty())
            throw ConfigError("the baseline needs --volume-feature to pick the primary lesion");
        BaselineMethod base;
        base.volume_feature = cfg.volume_feature;
        base.lambda = cfg.lambda;
        base.lambda_grid = cfg.lambda_grid;
        base.inner_folds = cfg.inner_folds;
        return base;
    }
    MilMethod mil;
    mil.net = make_network_config(cfg);
    mil.train = make_train_config(cfg);
    return mil;
}

int run_cv(const ExperimentConfig& cfg) {
    LoadedData loaded = load_and_label(cfg);

    CvOptions options;
    options.runs = cfg.runs;
    options.folds = cfg.folds;
    options.base_seed = cfg.seed;
    options.workers = cfg.workers;

    EvalReport report = cross_validate(loaded.dataset, make_method(cfg), options);
    report.excluded_censored = loaded.excluded_censored;

    write_resolved_config(cfg, cfg.out);
    write_report_files(report, cfg.out, cfg.roc);
    std::cout << report.method_label << ": mean AUC " << format_double(report.mean_auc) << " (95% CI "
              << format_double(report.ci_low) << ", " << format_double(report.ci_high) << ")\n";
    return 0;
}

int run_train(const ExperimentConfig& cfg) {
    if (cfg.method == "baseline")
        throw ConfigError("'train' fits the MIL network; use 'baseline' for LASSO-LR");
    LoadedData loaded = load_and_label(cfg);

    // keep only labeled bags
    Dataset labeled;
    labeled.feature_names = loaded.dataset.feature_names;
    labeled.horizon_days = loaded.dataset.horizon_days;
    for (auto& bag : loaded.dataset.bags)
        if (bag.label) labeled.bags.push_back(std::move(bag));
    if (labeled.bags.empty()) throw ConfigError("no labeled bags to train on");

    NetworkConfig net = make_network_config(cfg);
    net.input_dim = labeled.width();
    net.seed = derive_seed(cfg.seed, 1);
    TrainConfig opt = make_train_config(cfg);
    opt.seed = derive_seed(cfg.seed, 2);

    const Normalizer norm = fit_zscore(labeled.bags);
    Dataset train_set;
    train_set.feature_names = labeled.feature_names;
    train_set.bags = apply_zscore(norm, labeled.bags);

    const TrainResult fitted = train(train_set, net, opt);

    write_resolved_config(cfg, cfg.out);
    save_checkpoint({net, fitted.params, norm, opt.seed},
                    std::filesystem::path(cfg.out) / "checkpoint.bin");
    {
        std::ofstream out(std::filesystem::path(cfg.out) / "history.csv");
        out << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < fitted.history.size(); ++e)
            out << e << ',' << format_double(fitted.history[e]) << '\n';
    }
    std::cout << "final mean loss " << format_double(fitted.history.back()) << ", checkpoint in "
              << cfg.out << "\n";
    return 0;
}

int run_predict(const std::string& checkpoint_path, const std::string& data_path,
                const std::string& out_dir) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    Dataset dataset = load_feature_table(data_path);
    std::vector<Bag> bags = dataset.bags;
    if (!ckpt.normalizer.means.empty()) bags = apply_zscore(ckpt.normalizer, bags);

    const auto preds = predict(ckpt.params, bags, ckpt.config);

    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "predictions.csv");
    if (!out) throw Error("cannot write predictions.csv");
    out << "patient_id,probability\n";
    for (const auto& p : preds) out << p.patient_id << ',' << format_double(p.probability) << '\n';
    std::cout << preds.size() << " predictions written to " << out_dir << "/predictions.csv\n";
    return 0;
}

int run_synth_counting(const CountingTaskConfig& cfg, const std::string& out_path) {
    const Dataset dataset = gen_counting_task(cfg);
    save_feature_table(dataset, out_path);
    std::size_t positives = 0;
    for (const auto& bag : dataset.bags) positives += *bag.label;
    std::cout << dataset.bags.size() << " bags (" << positives << " positive) written to "
              << out_path << "\n";
    return 0;
}

int run_synth_fig2(std::size_t dim, std::uint64_t seed, const std::string& out_path) {
    const auto pairs = gen_fig2_pairs(dim, seed);
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write '" + out_path + "'");
    out << "case,bag,instance";
    for (std::size_t j = 0; j < dim; ++j) out << ",e" << j;
    out << '\n';
    for (const auto& pair : pairs) {
        for (int which = 0; which < 2; ++which) {
            const EmbeddingBag& bag = which == 0 ? pair.first : pair.second;
            for (std::size_t n = 0; n < bag.rows; ++n) {
                out << pair.tag << ',' << (which + 1) << ',' << n;
                for (std::size_t j = 0; j < bag.cols; ++j)
                    out << ',' << format_double(bag(n, j));
                out << '\n';
            }
        }
    }
    std::cout << "3 bag pairs written to " << out_path << "\n";
    return 0;
}

int run_injectivity_check(std::size_t dim, std::size_t attention_dim, std::uint64_t seed,
                          const std::string& out_path) {
    const auto pairs = gen_fig2_pairs(dim, seed);

    // generic random attention params, independent stream from the bag draw
    Rng rng(derive_seed(seed, 7));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    AttentionParams params;
    params.V = Matrix(attention_dim, dim);
    for (double& v : params.V.data) v = unif(rng);
    params.w.resize(attention_dim);
    for (double& v : params.w) v = unif(rng);

    const InjectivityReport report = injectivity_report(all_pooling_kinds(), pairs, params);
    const std::string text = to_json(report).dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write '" + out_path + "'");
        out << text;
    }
    if (!report.asserts_hold) {
        std::cerr << "injectivity pattern violated\n";
        return 2;
    }
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Multiple-instance learning engine for bag-level outcome prediction"};
    app.require_subcommand(1);

    // shared experiment flags; only flags the user passed override the file
    std::string config_path, data_path, pooling, volume_feature, out_dir;
    double horizon_days = 0, learning_rate = 0, weight_decay = 0, lambda = 0;
    std::vector<double> lambda_grid;
    int epochs = 0, batch_bags = 0, runs = 0, folds = 0, workers = 0, inner_folds = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden;
    std::size_t embedding_dim = 0, attention_dim = 0;
    bool baseline_flag = false, roc_flag = false;

    auto add_experiment_flags = [&](CLI::App* cmd, bool with_method) {
        cmd->add_option("--config", config_path, "JSON experiment config");
        cmd->add_option("--data", data_path, "feature CSV");
        if (with_method) {
            cmd->add_option("--pooling", pooling, "MIL pooling function")
                ->check(CLI::IsMember(std::vector<std::string>(std::begin(kPoolingChoices),
                                                               std::end(kPoolingChoices))));
            cmd->add_flag("--baseline", baseline_flag, "use the LASSO-LR unifocal baseline");
        }
        cmd->add_option("--horizon-days", horizon_days,
                        "derive binary labels at this survival horizon");
        cmd->add_option("--volume-feature", volume_feature,
                        "feature column holding lesion volume (baseline)");
        cmd->add_option("--runs", runs, "repeated CV runs");
        cmd->add_option("--folds", folds, "folds per run");
        cmd->add_option("--seed", seed, "base seed");
        cmd->add_option("--workers", workers, "parallel workers (0: all cores)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--hidden", hidden, "three hidden widths")->expected(3);
        cmd->add_option("--embedding-dim", embedding_dim, "embedding width");
        cmd->add_option("--attention-dim", attention_dim, "attention width");
        cmd->add_option("--learning-rate", learning_rate, "optimizer learning rate");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--batch-bags", batch_bags, "bags per optimizer step");
        cmd->add_option("--weight-decay", weight_decay, "decoupled weight decay");
        cmd->add_option("--lambda", lambda, "L1 strength for the baseline");
        cmd->add_option("--lambda-grid", lambda_grid, "L1 grid for inner-fold selection");
        cmd->add_option("--inner-folds", inner_folds, "inner folds for lambda selection");
        cmd->add_flag("--roc", roc_flag, "export per-run ROC curves");
    };

    CLI::App* cv_cmd = app.add_subcommand("cv", "repeated stratified cross-validation");
    add_experiment_flags(cv_cmd, true);
    CLI::App* baseline_cmd =
        app.add_subcommand("baseline", "LASSO-LR unifocal baseline cross-validation");
    add_experiment_flags(baseline_cmd, false);
    CLI::App* train_cmd = app.add_subcommand("train", "single fit on the full dataset");
    add_experiment_flags(train_cmd, true);

    CLI::App* predict_cmd = app.add_subcommand("predict", "apply a checkpoint to a feature CSV");
    std::string checkpoint_path;
    predict_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    predict_cmd->add_option("--data", data_path, "feature CSV")->required();
    predict_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI::App* synth_cmd = app.add_subcommand("synth", "emit synthetic datasets");
    synth_cmd->require_subcommand(1);
    CLI::App* counting_cmd = synth_cmd->add_subcommand("counting", "two-Gaussian counting task");
    CountingTaskConfig counting;
    std::string synth_out = "counting.csv";
    counting_cmd->add_option("--n-bags", counting.n_bags, "number of bags");
    counting_cmd->add_option("--min-bag", counting.min_bag_size, "smallest bag size");
    counting_cmd->add_option("--max-bag", counting.max_bag_size, "largest bag size");
    counting_cmd->add_option("--dim", counting.dim, "feature width");
    counting_cmd->add_option("--threshold", counting.threshold, "high-risk count threshold");
    counting_cmd->add_option("--rate", counting.high_risk_rate, "per-instance high-risk rate");
    counting_cmd->add_option("--seed", counting.seed, "generator seed");
    counting_cmd->add_option("--out", synth_out, "output CSV");

    CLI::App* fig2_cmd = synth_cmd->add_subcommand("fig2", "counterexample bag pairs");
    std::size_t fig2_dim = 8;
    std::uint64_t fig2_seed = 0;
    std::string fig2_out = "fig2.csv";
    fig2_cmd->add_option("--dim", fig2_dim, "embedding width");
    fig2_cmd->add_option("--seed", fig2_seed, "generator seed");
    fig2_cmd->add_option("--out", fig2_out, "output CSV");

    CLI::App* inj_cmd =
        app.add_subcommand("injectivity-check", "which poolings separate the bag pairs");
    std::size_t inj_dim = 8, inj_att = 32;
    std::uint64_t inj_seed = 0;
    std::string inj_out;
    inj_cmd->add_option("--dim", inj_dim, "embedding width");
    inj_cmd->add_option("--attention-dim", inj_att, "attention width");
    inj_cmd->add_option("--seed", inj_seed, "generator seed");
    inj_cmd->add_option("--out", inj_out, "output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (inj_cmd->parsed()) return run_injectivity_check(inj_dim, inj_att, inj_seed, inj_out);
        if (synth_cmd->parsed()) {
            if (counting_cmd->parsed()) return run_synth_counting(counting, synth_out);
            return run_synth_fig2(fig2_dim, fig2_seed, fig2_out);
        }
        if (predict_cmd->parsed()) return run_predict(checkpoint_path, data_path, out_dir);

        // cv / baseline / train share the experiment config resolution
        CLI::App* cmd = cv_cmd->parsed() ? cv_cmd : (baseline_cmd->parsed() ? baseline_cmd : train_cmd);
        ExperimentConfig cfg;
        if (cmd->count("--config")) cfg = load_config_file(config_path);
        if (cmd->count("--data")) cfg.data = data_path;
        if (cmd->count("--horizon-days")) cfg.horizon_days = horizon_days;
        if (baseline_cmd->parsed() || baseline_flag) cfg.method = "baseline";
        else if (cmd->count("--pooling")) cfg.method = pooling;
        if (cmd->count("--volume-feature")) cfg.volume_feature = volume_feature;
        if (cmd->count("--runs")) cfg.runs = runs;
        if (cmd->count("--folds")) cfg.folds = folds;
        if (cmd->count("--seed")) cfg.seed = seed;
        if (cmd->count("--workers")) cfg.workers = workers;
        if (cmd->count("--out")) cfg.out = out_dir;
        if (cmd->count("--hidden")) cfg.hidden = hidden;
        if (cmd->count("--embedding-dim")) cfg.embedding_dim = embedding_dim;
        if (cmd->count("--attention-dim")) cfg.attention_dim = attention_dim;
        if (cmd->count("--learning-rate")) cfg.learning_rate = learning_rate;
        if (cmd->count("--epochs")) cfg.epochs = epochs;
        if (cmd->count("--batch-bags")) cfg.batch_bags = batch_bags;
        if (cmd->count("--weight-decay")) cfg.weight_decay = weight_decay;
        if (cmd->count("--lambda")) cfg.lambda = lambda;
        if (cmd->count("--lambda-grid")) cfg.lambda_grid = lambda_grid;
        if (cmd->count("--inner-folds")) cfg.inner_folds = inner_folds;
        if (cmd->count("--roc")) cfg.roc = roc_flag;

        if (train_cmd->parsed()) return run_train(cfg);
        return run_cv(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const LabelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace minn::cli
