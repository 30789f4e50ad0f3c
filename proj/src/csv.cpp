#include "minn/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "minn/error.hpp"

namespace minn {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_double_cell(const std::string& cell, std::size_t line_no, const std::string& col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError("row " + std::to_string(line_no) + ", column '" + col +
                         "': cannot parse '" + cell + "' as a number");
    if (!std::isfinite(v))
        throw ParseError("row " + std::to_string(line_no) + ", column '" + col +
                         "': non-finite value '" + cell + "'");
    return v;
}

int parse_binary_cell(const std::string& cell, std::size_t line_no, const std::string& col) {
    if (cell == "0") return 0;
    if (cell == "1") return 1;
    throw ParseError("row " + std::to_string(line_no) + ", column '" + col +
                     "': expected 0 or 1, got '" + cell + "'");
}

int parse_int_cell(const std::string& cell, std::size_t line_no, const std::string& col) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError("row " + std::to_string(line_no) + ", column '" + col +
                         "': cannot parse '" + cell + "' as an integer");
    return v;
}

constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? kNoColumn : static_cast<std::size_t>(it - header.begin());
}

// Merge an optional field parsed from one row into the bag, rejecting
// contradictions between rows of the same patient.
template <typename T>
void merge_field(std::optional<T>& bag_value, const std::optional<T>& row_value,
                 const std::string& patient, const std::string& col) {
    if (!row_value) return;
    if (bag_value && *bag_value != *row_value)
        throw IntegrityError("patient '" + patient + "' has conflicting values in column '" +
                             col + "'");
    bag_value = row_value;
}

} // namespace

Dataset load_feature_table(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' is empty");
    const auto header = split_line(line);

    const std::size_t patient_idx = find_column(header, schema.patient_col);
    const std::size_t tumor_idx = find_column(header, schema.tumor_col);
    if (patient_idx == kNoColumn)
        throw SchemaError("missing required column '" + schema.patient_col + "'");
    if (tumor_idx == kNoColumn)
        throw SchemaError("missing required column '" + schema.tumor_col + "'");

    const std::size_t label_idx = find_column(header, schema.label_col);
    const std::size_t survival_idx = find_column(header, schema.survival_col);
    const std::size_t event_idx = find_column(header, schema.event_col);
    const std::size_t true_class_idx = find_column(header, schema.true_class_col);

    Dataset dataset;
    std::vector<std::size_t> feature_idx;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == patient_idx || j == tumor_idx || j == label_idx || j == survival_idx ||
            j == event_idx || j == true_class_idx)
            continue;
        feature_idx.push_back(j);
        dataset.feature_names.push_back(header[j]);
    }
    if (feature_idx.empty()) throw SchemaError("no feature columns in '" + path.string() + "'");

    std::map<std::string, std::size_t> bag_of;          // patient -> bag index
    std::set<std::pair<std::string, std::string>> seen; // (patient, tumor)

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("row " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));

        Instance inst;
        inst.patient_id = cells[patient_idx];
        inst.tumor_id = cells[tumor_idx];
        if (inst.patient_id.empty())
            throw ParseError("row " + std::to_string(line_no) + ": empty patient_id");
        if (!seen.insert({inst.patient_id, inst.tumor_id}).second)
            throw IntegrityError("duplicate (patient_id, tumor_id) = ('" + inst.patient_id +
                                 "', '" + inst.tumor_id + "') at row " + std::to_string(line_no));

        inst.features.reserve(feature_idx.size());
        for (std::size_t f = 0; f < feature_idx.size(); ++f)
            inst.features.push_back(
                parse_double_cell(cells[feature_idx[f]], line_no, dataset.feature_names[f]));

        std::optional<int> label, event, true_class;
        std::optional<double> survival;
        if (label_idx != kNoColumn && !cells[label_idx].empty())
            label = parse_binary_cell(cells[label_idx], line_no, schema.label_col);
        if (event_idx != kNoColumn && !cells[event_idx].empty())
            event = parse_binary_cell(cells[event_idx], line_no, schema.event_col);
        if (survival_idx != kNoColumn && !cells[survival_idx].empty()) {
            survival = parse_double_cell(cells[survival_idx], line_no, schema.survival_col);
            if (*survival < 0)
                throw ParseError("row " + std::to_string(line_no) + ", column '" +
                                 schema.survival_col + "': negative survival time");
        }
        if (true_class_idx != kNoColumn && !cells[true_class_idx].empty())
            true_class = parse_int_cell(cells[true_class_idx], line_no, schema.true_class_col);
        inst.true_class = true_class;

        auto [it, inserted] = bag_of.try_emplace(inst.patient_id, dataset.bags.size());
        if (inserted) {
            Bag bag;
            bag.patient_id = inst.patient_id;
            dataset.bags.push_back(std::move(bag));
        }
        Bag& bag = dataset.bags[it->second];
        merge_field(bag.label, label, inst.patient_id, schema.label_col);
        merge_field(bag.survival_days, survival, inst.patient_id, schema.survival_col);
        merge_field(bag.event, event, inst.patient_id, schema.event_col);
        bag.instances.push_back(std::move(inst));
    }

    if (dataset.bags.empty()) throw ParseError("'" + path.string() + "' has no data rows");
    return dataset;
}

void save_feature_table(const Dataset& dataset, const std::filesystem::path& path,
                        const CsvSchema& schema) {
    bool has_label = false, has_survival = false, has_event = false, has_true_class = false;
    for (const auto& bag : dataset.bags) {
        has_label |= bag.label.has_value();
        has_survival |= bag.survival_days.has_value();
        has_event |= bag.event.has_value();
        for (const auto& inst : bag.instances) has_true_class |= inst.true_class.has_value();
    }

    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");

    out << schema.patient_col << ',' << schema.tumor_col;
    if (has_label) out << ',' << schema.label_col;
    if (has_survival) out << ',' << schema.survival_col;
    if (has_event) out << ',' << schema.event_col;
    if (has_true_class) out << ',' << schema.true_class_col;
    for (const auto& name : dataset.feature_names) out << ',' << name;
    out << '\n';

    for (const auto& bag : dataset.bags) {
        for (const auto& inst : bag.instances) {
            out << bag.patient_id << ',' << inst.tumor_id;
            if (has_label) {
                out << ',';
                if (bag.label) out << *bag.label;
            }
            if (has_survival) {
                out << ',';
                if (bag.survival_days) out << format_double(*bag.survival_days);
            }
            if (has_event) {
                out << ',';
                if (bag.event) out << *bag.event;
            }
            if (has_true_class) {
                out << ',';
                if (inst.true_class) out << *inst.true_class;
            }
            for (double v : inst.features) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

} // namespace minn
