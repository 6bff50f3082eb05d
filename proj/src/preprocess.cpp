#include "varitab/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "varitab/rng.hpp"

namespace varitab {

namespace {

double rescale(double x, double lo, double hi, bool clamp) {
    if (hi <= lo) return 0.0;  // constant column convention
    double v = (x - lo) / (hi - lo);
    if (clamp) v = std::min(1.0, std::max(0.0, v));
    return v;
}

TableDataset scale_numericals(const TableDataset& dataset,
                              const std::vector<ColumnSchema>& fitted, bool clamp) {
    TableDataset out = dataset;
    out.schema = fitted;
    for (const auto& col : fitted) {
        if (col.kind != ColumnKind::numerical || !col.has_range) continue;
        for (auto& row : out.rows) {
            auto it = row.find(col.name);
            if (it == row.end() || cell_missing(it->second)) continue;
            it->second = rescale(std::get<double>(it->second), col.observed_min, col.observed_max, clamp);
        }
    }
    return out;
}

// part k of `parts` over n items: [floor(k*n/parts), floor((k+1)*n/parts))
std::pair<size_t, size_t> slice_bounds(size_t n, size_t parts, size_t k) {
    return {k * n / parts, (k + 1) * n / parts};
}

TableDataset subset(const TableDataset& dataset, const std::vector<size_t>& col_order,
                    size_t col_begin, size_t col_end, const std::vector<size_t>& row_order,
                    size_t row_begin, size_t row_end, const std::string& name) {
    TableDataset out;
    out.name = name;
    // keep schema order of the parent table for readability
    std::vector<bool> keep(dataset.schema.size(), false);
    for (size_t i = col_begin; i < col_end; ++i) keep[col_order[i]] = true;
    for (size_t c = 0; c < dataset.schema.size(); ++c)
        if (keep[c]) out.schema.push_back(dataset.schema[c]);

    std::vector<int> labels;
    for (size_t i = row_begin; i < row_end; ++i) {
        const size_t r = row_order[i];
        Row row;
        for (const auto& col : out.schema) {
            auto it = dataset.rows[r].find(col.name);
            if (it != dataset.rows[r].end()) row[col.name] = it->second;
        }
        out.rows.push_back(std::move(row));
        if (dataset.labels) labels.push_back((*dataset.labels)[r]);
    }
    if (dataset.labels) out.labels = std::move(labels);
    return out;
}

}  // namespace

TableDataset fit_normalization(const TableDataset& dataset) {
    if (dataset.rows.empty()) throw std::invalid_argument("fit_normalization: dataset has no rows");
    std::vector<ColumnSchema> fitted = dataset.schema;
    for (auto& col : fitted) {
        if (col.kind != ColumnKind::numerical) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& row : dataset.rows) {
            auto it = row.find(col.name);
            if (it == row.end() || cell_missing(it->second)) continue;
            const double v = std::get<double>(it->second);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!std::isfinite(lo)) {  // every cell missing
            lo = 0.0;
            hi = 0.0;
        }
        col.observed_min = lo;
        col.observed_max = hi;
        col.has_range = true;
    }
    return scale_numericals(dataset, fitted, /*clamp=*/false);
}

TableDataset normalize_with_schema(const TableDataset& dataset,
                                   const std::vector<ColumnSchema>& fitted) {
    return scale_numericals(dataset, fitted, /*clamp=*/true);
}

TableDataset apply_codebook(const TableDataset& dataset) {
    TableDataset out = dataset;
    for (const auto& col : out.schema) {
        if (col.kind != ColumnKind::categorical || col.codebook.empty()) continue;
        for (auto& row : out.rows) {
            auto it = row.find(col.name);
            if (it == row.end() || cell_missing(it->second)) continue;
            const auto& raw = std::get<std::string>(it->second);
            auto hit = col.codebook.find(raw);
            if (hit != col.codebook.end()) it->second = hit->second;
        }
    }
    return out;
}

std::vector<TableDataset> split_columns(const TableDataset& dataset, const SplitSpec& spec) {
    const size_t C = dataset.column_count();
    const size_t N = dataset.row_count();
    const size_t min_cols = spec.mode == SplitMode::transfer ? 2 : 3;
    if (C < min_cols) {
        throw std::invalid_argument("split_columns: " + split_mode_name(spec.mode) + " needs >= " +
                                    std::to_string(min_cols) + " columns, dataset has " +
                                    std::to_string(C));
    }
    if (spec.mode == SplitMode::transfer &&
        (spec.overlap_ratio < 0.0 || spec.overlap_ratio > 1.0)) {
        throw std::invalid_argument("split_columns: overlap_ratio must be in [0,1]");
    }

    Rng rng(spec.seed);
    std::vector<size_t> cols(C), rows(N);
    for (size_t i = 0; i < C; ++i) cols[i] = i;
    for (size_t i = 0; i < N; ++i) rows[i] = i;
    rng.shuffle(cols);
    rng.shuffle(rows);

    std::vector<TableDataset> out;
    switch (spec.mode) {
        case SplitMode::incremental: {
            // nested column sets v1, v1+v2, v1+v2+v3; disjoint row thirds
            for (size_t k = 0; k < 3; ++k) {
                auto [cb, ce] = slice_bounds(C, 3, k);
                auto [rb, re] = slice_bounds(N, 3, k);
                out.push_back(subset(dataset, cols, 0, ce, rows, rb, re,
                                     dataset.name + ".set" + std::to_string(k + 1)));
                (void)cb;
            }
            break;
        }
        case SplitMode::transfer: {
            // shared block of round(r*C) columns plus a private half each
            const size_t shared = static_cast<size_t>(std::llround(spec.overlap_ratio * static_cast<double>(C)));
            const size_t rest = C - shared;
            const size_t left = (rest + 1) / 2;
            // set1: [0, shared+left), set2: shared block plus the remaining tail
            std::vector<size_t> cols2(cols.begin(), cols.begin() + static_cast<long>(shared));
            cols2.insert(cols2.end(), cols.begin() + static_cast<long>(shared + left), cols.end());
            auto [r1b, r1e] = slice_bounds(N, 2, 0);
            auto [r2b, r2e] = slice_bounds(N, 2, 1);
            out.push_back(subset(dataset, cols, 0, shared + left, rows, r1b, r1e,
                                 dataset.name + ".set1"));
            out.push_back(subset(dataset, cols2, 0, cols2.size(), rows, r2b, r2e,
                                 dataset.name + ".set2"));
            break;
        }
        case SplitMode::zeroshot: {
            for (size_t k = 0; k < 3; ++k) {
                auto [cb, ce] = slice_bounds(C, 3, k);
                auto [rb, re] = slice_bounds(N, 3, k);
                out.push_back(subset(dataset, cols, cb, ce, rows, rb, re,
                                     dataset.name + ".set" + std::to_string(k + 1)));
            }
            break;
        }
    }
    return out;
}

}  // namespace varitab
