#include "varitab/schema.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace varitab {

namespace {

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string column_kind_name(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::binary: return "binary";
        case ColumnKind::numerical: return "numerical";
    }
    return "?";
}

ColumnKind parse_column_kind(const std::string& text) {
    const std::string t = trimmed(text);
    if (t == "categorical" || t == "cat") return ColumnKind::categorical;
    if (t == "binary" || t == "bin") return ColumnKind::binary;
    if (t == "numerical" || t == "num") return ColumnKind::numerical;
    throw std::invalid_argument("unknown column kind '" + text + "'");
}

std::string split_mode_name(SplitMode mode) {
    switch (mode) {
        case SplitMode::incremental: return "incremental";
        case SplitMode::transfer: return "transfer";
        case SplitMode::zeroshot: return "zeroshot";
    }
    return "?";
}

SplitMode parse_split_mode(const std::string& text) {
    const std::string t = trimmed(text);
    if (t == "incremental") return SplitMode::incremental;
    if (t == "transfer") return SplitMode::transfer;
    if (t == "zeroshot") return SplitMode::zeroshot;
    throw std::invalid_argument("unknown split mode '" + text + "'");
}

void ColumnSchema::validate() const {
    if (trimmed(name).empty()) throw std::invalid_argument("column name is empty");
    if (has_range && observed_min > observed_max) {
        throw std::invalid_argument("column '" + name + "': observed_min > observed_max");
    }
    // std::map keys are unique by construction; nothing further to check there
}

const ColumnSchema* TableDataset::find_column(const std::string& col) const {
    for (const auto& c : schema)
        if (c.name == col) return &c;
    return nullptr;
}

int TableDataset::class_count() const {
    if (!labels || labels->empty()) return 0;
    return *std::max_element(labels->begin(), labels->end()) + 1;
}

void TableDataset::validate() const {
    std::set<std::string> names;
    for (const auto& col : schema) {
        col.validate();
        if (!names.insert(col.name).second) {
            throw std::invalid_argument("duplicate column '" + col.name + "' in dataset '" + name + "'");
        }
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        for (const auto& col : schema) {
            auto it = rows[r].find(col.name);
            if (it == rows[r].end() || cell_missing(it->second)) continue;
            const Cell& cell = it->second;
            const bool ok = (col.kind == ColumnKind::categorical && std::holds_alternative<std::string>(cell)) ||
                            (col.kind == ColumnKind::binary && std::holds_alternative<bool>(cell)) ||
                            (col.kind == ColumnKind::numerical && std::holds_alternative<double>(cell));
            if (!ok) {
                throw std::invalid_argument("row " + std::to_string(r + 1) + ", column '" + col.name +
                                            "': cell does not match kind " + column_kind_name(col.kind));
            }
        }
    }
    if (labels) {
        if (labels->size() != rows.size()) {
            throw std::invalid_argument("dataset '" + name + "': " + std::to_string(labels->size()) +
                                        " labels for " + std::to_string(rows.size()) + " rows");
        }
        for (int y : *labels) {
            if (y < 0) throw std::invalid_argument("dataset '" + name + "': negative class id");
        }
    }
}

}  // namespace varitab
