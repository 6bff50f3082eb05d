#include "varitab/featurizer.hpp"

#include <algorithm>
#include <stdexcept>

#include "varitab/ops.hpp"

namespace varitab {

int64_t FeaturizedRow::feature_token_count() const {
    int64_t n = static_cast<int64_t>(cat_ids.size() + bin_ids.size());
    for (const auto& ids : num_col_ids) n += static_cast<int64_t>(ids.size());
    return n;
}

EmbeddingTables EmbeddingTables::create(int64_t dim, int64_t vocab_size, Rng& rng) {
    EmbeddingTables t;
    t.dim = dim;
    t.token_embedding = init_parameter({vocab_size, dim}, InitScheme::uniform_fan, dim, rng);
    t.overflow_embedding =
        init_parameter({Vocabulary::kOverflowSize, dim}, InitScheme::uniform_fan, dim, rng);
    t.overflow_embedding.set_requires_grad(false);  // hashing fallback, never trained
    t.cls_embedding = init_parameter({1, dim}, InitScheme::uniform_fan, dim, rng);
    t.align_w = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    t.align_b = init_parameter({dim}, InitScheme::zeros, dim, rng);
    t.ln_cat_gain = init_parameter({dim}, InitScheme::ones, dim, rng);
    t.ln_cat_bias = init_parameter({dim}, InitScheme::zeros, dim, rng);
    t.ln_num_gain = init_parameter({dim}, InitScheme::ones, dim, rng);
    t.ln_num_bias = init_parameter({dim}, InitScheme::zeros, dim, rng);
    t.ln_bin_gain = init_parameter({dim}, InitScheme::ones, dim, rng);
    t.ln_bin_bias = init_parameter({dim}, InitScheme::zeros, dim, rng);
    return t;
}

void EmbeddingTables::grow_to(int64_t vocab_size, Rng& rng) {
    const int64_t have = vocab_rows();
    if (vocab_size < have) {
        throw std::logic_error("EmbeddingTables::grow_to: vocabulary shrank");
    }
    if (vocab_size == have) return;
    auto& impl = token_embedding.impl();
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    impl->values.resize(static_cast<size_t>(vocab_size * dim));
    for (int64_t i = have * dim; i < vocab_size * dim; ++i) {
        impl->values[static_cast<size_t>(i)] = rng.uniform(-bound, bound);
    }
    if (!impl->grad.empty()) impl->grad.resize(static_cast<size_t>(vocab_size * dim), 0.0);
    impl->shape[0] = vocab_size;
}

FeaturizedRow featurize_row(const Row& row, const std::vector<ColumnSchema>& schema,
                            Vocabulary& vocab, bool allow_grow, size_t row_index) {
    FeaturizedRow fr;
    for (const auto& col : schema) {
        auto it = row.find(col.name);
        const bool missing = it == row.end() || cell_missing(it->second);
        switch (col.kind) {
            case ColumnKind::categorical: {
                if (missing) break;
                auto tokens = tokenize(col.name);
                auto cell_tokens = tokenize(std::get<std::string>(it->second));
                tokens.insert(tokens.end(), cell_tokens.begin(), cell_tokens.end());
                auto seq = encode(tokens, vocab, allow_grow);
                fr.cat_ids.insert(fr.cat_ids.end(), seq.ids.begin(), seq.ids.end());
                break;
            }
            case ColumnKind::binary: {
                // value 0 is elided entirely, same as missing
                if (missing || !std::get<bool>(it->second)) break;
                auto seq = encode(tokenize(col.name), vocab, allow_grow);
                fr.bin_ids.insert(fr.bin_ids.end(), seq.ids.begin(), seq.ids.end());
                break;
            }
            case ColumnKind::numerical: {
                if (missing) break;
                auto seq = encode(tokenize(col.name), vocab, allow_grow);
                if (seq.ids.empty()) break;
                fr.num_col_ids.push_back(std::move(seq.ids));
                fr.num_values.push_back(std::get<double>(it->second));
                break;
            }
        }
    }
    if (fr.feature_token_count() == 0) {
        std::string where = row_index == SIZE_MAX ? "row" : "row " + std::to_string(row_index);
        throw std::runtime_error(where + " produced no tokens (all cells missing or zero)");
    }
    return fr;
}

FeatureBlocks embed_feature_blocks(const FeaturizedRow& fr, const EmbeddingTables& tables) {
    FeatureBlocks blocks;
    if (!fr.cat_ids.empty()) {
        blocks.cat = embed_rows(tables.token_embedding, tables.overflow_embedding, fr.cat_ids);
    }
    if (!fr.num_col_ids.empty()) {
        std::vector<int64_t> ids;
        std::vector<double> scales;
        for (size_t f = 0; f < fr.num_col_ids.size(); ++f) {
            for (int64_t id : fr.num_col_ids[f]) {
                ids.push_back(id);
                scales.push_back(fr.num_values[f]);
            }
        }
        Tensor cols = embed_rows(tables.token_embedding, tables.overflow_embedding, ids);
        Tensor s = Tensor::from({static_cast<int64_t>(scales.size()), 1}, std::move(scales));
        blocks.num = mul_last(cols, s);  // x_u times its column-name embedding
    }
    if (!fr.bin_ids.empty()) {
        blocks.bin = embed_rows(tables.token_embedding, tables.overflow_embedding, fr.bin_ids);
    }
    return blocks;
}

Tensor embed_row(const FeaturizedRow& fr, const EmbeddingTables& tables) {
    FeatureBlocks blocks = embed_feature_blocks(fr, tables);
    auto align = [&](const Tensor& block, const Tensor& gain, const Tensor& bias) {
        Tensor normed = layer_norm_lastdim(block, gain, bias, tables.ln_eps);
        return add_bias(linear(normed, tables.align_w), tables.align_b);
    };
    std::vector<Tensor> parts;
    if (blocks.cat.defined()) parts.push_back(align(blocks.cat, tables.ln_cat_gain, tables.ln_cat_bias));
    if (blocks.num.defined()) parts.push_back(align(blocks.num, tables.ln_num_gain, tables.ln_num_bias));
    if (blocks.bin.defined()) parts.push_back(align(blocks.bin, tables.ln_bin_gain, tables.ln_bin_bias));
    if (parts.empty()) throw std::runtime_error("embed_row: row has no feature tokens");
    parts.push_back(tables.cls_embedding);  // appended raw, not aligned
    return concat_rows(parts);
}

PaddedBatch pad_batch(const std::vector<FeaturizedRow>& rows, const EmbeddingTables& tables) {
    if (rows.empty()) throw std::invalid_argument("pad_batch: empty batch");
    PaddedBatch batch;
    std::vector<Tensor> embedded;
    embedded.reserve(rows.size());
    int64_t n_max = 0;
    for (const auto& fr : rows) {
        Tensor e = embed_row(fr, tables);
        n_max = std::max(n_max, e.extent(0));
        batch.lengths.push_back(e.extent(0));
        embedded.push_back(std::move(e));
    }
    batch.embeddings = pad_stack(embedded, n_max);
    std::vector<double> mask(rows.size() * static_cast<size_t>(n_max), 0.0);
    for (size_t b = 0; b < rows.size(); ++b) {
        for (int64_t i = 0; i < batch.lengths[b]; ++i) {
            mask[b * static_cast<size_t>(n_max) + static_cast<size_t>(i)] = 1.0;
        }
    }
    batch.mask = Tensor::from({static_cast<int64_t>(rows.size()), n_max}, std::move(mask));
    return batch;
}

}  // namespace varitab
