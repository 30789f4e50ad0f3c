#include "minn/report.hpp"

#include <fstream>

#include "minn/csv.hpp"
#include "minn/error.hpp"

namespace minn {

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json doc;
    doc["method"] = report.method_label;
    doc["runs"] = report.runs;
    doc["folds"] = report.folds;
    doc["base_seed"] = report.base_seed;
    doc["mean_auc"] = report.mean_auc;
    doc["ci_low"] = report.ci_low;
    doc["ci_high"] = report.ci_high;
    doc["excluded_censored"] = report.excluded_censored;
    doc["ci_method"] = report.ci_method;
    doc["per_run"] = nlohmann::json::array();
    for (const auto& run : report.run_results)
        doc["per_run"].push_back({{"seed", run.run_seed},
                                  {"auc", run.auc},
                                  {"delong_variance", run.delong_variance}});
    return doc;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& out_dir,
                        bool roc) {
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir / "report.json");
        if (!out) throw Error("cannot write report.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(out_dir / "runs.csv");
        out << "run,seed,auc,delong_variance\n";
        for (std::size_t r = 0; r < report.run_results.size(); ++r) {
            const auto& run = report.run_results[r];
            out << r << ',' << run.run_seed << ',' << format_double(run.auc) << ','
                << format_double(run.delong_variance) << '\n';
        }
    }
    {
        std::ofstream out(out_dir / "summary.csv");
        out << "method,mean_auc,ci_low,ci_high\n";
        out << report.method_label << ',' << format_double(report.mean_auc) << ','
            << format_double(report.ci_low) << ',' << format_double(report.ci_high) << '\n';
    }

    if (roc) {
        std::filesystem::create_directories(out_dir / "roc");
        for (std::size_t r = 0; r < report.run_results.size(); ++r) {
            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& p : report.run_results[r].predictions) {
                scores.push_back(p.probability);
                labels.push_back(p.label);
            }
            std::ofstream out(out_dir / "roc" / ("run-" + std::to_string(r) + ".csv"));
            out << "fpr,tpr\n";
            for (const auto& pt : roc_points(scores, labels))
                out << format_double(pt.fpr) << ',' << format_double(pt.tpr) << '\n';
        }
    }
}

} // namespace minn
