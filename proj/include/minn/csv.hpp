#pragma once

#include <filesystem>
#include <string>

#include "minn/types.hpp"

namespace minn {

// Column-name mapping for feature tables. Every header column that does not
// match one of these names is treated as a feature, in header order.
struct CsvSchema {
    std::string patient_col = "patient_id";
    std::string tumor_col = "tumor_id";
    std::string label_col = "label";
    std::string survival_col = "survival_days";
    std::string event_col = "event";
    std::string true_class_col = "true_class";
};

// Loads a per-lesion feature table and groups rows into one bag per patient.
// Bag order follows first appearance; instance order follows row order.
Dataset load_feature_table(const std::filesystem::path& path, const CsvSchema& schema = {});

// Inverse of load_feature_table: doubles are written in shortest form that
// round-trips bit-for-bit. Optional columns appear only when some bag has them.
void save_feature_table(const Dataset& dataset, const std::filesystem::path& path,
                        const CsvSchema& schema = {});

// Shortest decimal string that parses back to exactly this double.
std::string format_double(double v);

} // namespace minn
