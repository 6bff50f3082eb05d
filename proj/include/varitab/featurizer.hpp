#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "varitab/adam.hpp"
#include "varitab/schema.hpp"
#include "varitab/tensor.hpp"
#include "varitab/tokenizer.hpp"

namespace varitab {

// Token-level view of one table row. Categorical features contribute
// column-name + cell tokens, binary features contribute their column name
// only when the value is 1, numerical features contribute their column-name
// tokens plus the scalar value. Missing cells and binary zeros contribute
// nothing at all.
struct FeaturizedRow {
    std::vector<int64_t> cat_ids;
    std::vector<int64_t> bin_ids;
    std::vector<std::vector<int64_t>> num_col_ids;  // per numerical feature
    std::vector<double> num_values;                 // aligned with num_col_ids

    int64_t feature_token_count() const;
    // n = |cat| + |bin| + sum |num| + 1 for [cls]
    int64_t token_count() const { return feature_token_count() + 1; }

    bool operator==(const FeaturizedRow&) const = default;
};

struct EmbeddingTables {
    int64_t dim = 0;
    double ln_eps = 1e-5;

    Tensor token_embedding;     // [vocab_size, d], grows with the vocabulary
    Tensor overflow_embedding;  // [kOverflowSize, d], fixed random rows
    Tensor cls_embedding;       // [1, d]
    Tensor align_w;             // [d, d], shared by all three pathways
    Tensor align_b;             // [d]
    Tensor ln_cat_gain, ln_cat_bias;  // [d] each, one set per pathway
    Tensor ln_num_gain, ln_num_bias;
    Tensor ln_bin_gain, ln_bin_bias;

    static EmbeddingTables create(int64_t dim, int64_t vocab_size, Rng& rng);
    // append rows for newly grown vocabulary entries
    void grow_to(int64_t vocab_size, Rng& rng);
    int64_t vocab_rows() const { return token_embedding.extent(0); }
};

FeaturizedRow featurize_row(const Row& row, const std::vector<ColumnSchema>& schema,
                            Vocabulary& vocab, bool allow_grow, size_t row_index = SIZE_MAX);

// Pre-layer-norm blocks; undefined tensors for absent pathways. The numeric
// block is linear in the cell values at this stage.
struct FeatureBlocks {
    Tensor cat;
    Tensor num;
    Tensor bin;
};
FeatureBlocks embed_feature_blocks(const FeaturizedRow& fr, const EmbeddingTables& tables);

// Full row embedding [n, d]: each block through its layer norm and the shared
// alignment linear, concatenated cat|num|bin with the [cls] row appended last.
Tensor embed_row(const FeaturizedRow& fr, const EmbeddingTables& tables);

struct PaddedBatch {
    Tensor embeddings;             // [B, n_max, d], zero rows as padding
    Tensor mask;                   // [B, n_max], 1 = real token
    std::vector<int64_t> lengths;  // per-row token counts (incl. [cls])
};
PaddedBatch pad_batch(const std::vector<FeaturizedRow>& rows, const EmbeddingTables& tables);

}  // namespace varitab
