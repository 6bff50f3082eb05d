#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace varitab {

enum class ColumnKind { categorical, binary, numerical };

std::string column_kind_name(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& text);

// monostate = missing. Missing cells contribute no tokens downstream, the
// same elision rule binary-zero cells get.
using Cell = std::variant<std::monostate, std::string, bool, double>;

inline bool cell_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;

    // numerical columns only; fit on the training split
    double observed_min = 0.0;
    double observed_max = 0.0;
    bool has_range = false;

    // categorical columns may map raw codes to descriptive text
    std::map<std::string, std::string> codebook;

    void validate() const;
};

using Row = std::map<std::string, Cell>;

struct TableDataset {
    std::string name;
    std::vector<ColumnSchema> schema;
    std::vector<Row> rows;
    std::optional<std::vector<int>> labels;

    size_t row_count() const { return rows.size(); }
    size_t column_count() const { return schema.size(); }
    const ColumnSchema* find_column(const std::string& name) const;

    // 0-based contiguous class ids; 0 when unlabeled
    int class_count() const;

    void validate() const;
};

enum class SplitMode { incremental, transfer, zeroshot };

std::string split_mode_name(SplitMode mode);
SplitMode parse_split_mode(const std::string& text);

struct SplitSpec {
    SplitMode mode = SplitMode::incremental;
    uint64_t seed = 0;
    double overlap_ratio = 0.5;  // transfer mode only
};

}  // namespace varitab
