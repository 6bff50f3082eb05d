#pragma once

#include <vector>

#include "varitab/schema.hpp"

namespace varitab {

// Fits observed_min/observed_max per numerical column from the non-missing
// cells and min-max scales them to [0,1]. Constant columns map to 0.
TableDataset fit_normalization(const TableDataset& dataset);

// Scales with previously fitted ranges, clamping out-of-range values into
// [0,1]; used for data the ranges were not fit on.
TableDataset normalize_with_schema(const TableDataset& dataset,
                                   const std::vector<ColumnSchema>& fitted);

// Replaces categorical cells through their column codebook; unmapped values
// pass through unchanged.
TableDataset apply_codebook(const TableDataset& dataset);

// Column-split subsets for the incremental / transfer / zero-shot protocols.
// Deterministic in (dataset, spec): columns and rows are shuffled by a
// generator seeded with spec.seed before slicing.
std::vector<TableDataset> split_columns(const TableDataset& dataset, const SplitSpec& spec);

}  // namespace varitab
