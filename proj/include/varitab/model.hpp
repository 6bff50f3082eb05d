#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "varitab/encoder.hpp"
#include "varitab/featurizer.hpp"
#include "varitab/schema.hpp"
#include "varitab/tokenizer.hpp"

namespace varitab {

struct ModelConfig {
    int64_t dim = 128;
    int64_t heads = 8;
    int64_t layers = 2;
    int classes = 2;  // binary tasks use a single logit
    uint64_t seed = 42;

    void validate() const;
};

// All learnable state plus the vocabulary snapshot it is aligned with.
// The embedding table always has exactly one row per vocabulary entry.
struct ModelState {
    ModelConfig config;
    Vocabulary vocab;
    EmbeddingTables tables;
    std::vector<EncoderLayerParams> layers;
    Heads heads;
    Rng rng{0};  // initialization and growth stream

    static ModelState create(const ModelConfig& config);

    int64_t logit_dim() const { return config.classes == 2 ? 1 : config.classes; }

    // stable name -> tensor registry; order is the checkpoint contract
    std::vector<std::pair<std::string, Tensor>> parameters();
    std::vector<std::pair<std::string, Tensor>> named_tensors();

    void zero_grads();

    // append embedding rows for vocabulary entries grown since creation
    void sync_vocab();

    // fresh classifier head for a new task; everything else retained
    void replace_head(int classes);

    std::vector<FeaturizedRow> featurize_rows(const TableDataset& dataset,
                                              const std::vector<size_t>& idx, bool allow_grow);
    Tensor encode_rows(const std::vector<FeaturizedRow>& rows);  // z_cls [B, d]
    Tensor logits_for_rows(const TableDataset& dataset, const std::vector<size_t>& idx,
                           bool allow_grow);

    // class probability rows from logits (sigmoid for the single-logit case)
    std::vector<std::vector<double>> probabilities(const Tensor& logits) const;
};

}  // namespace varitab
