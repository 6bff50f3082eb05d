#include "varitab/model.hpp"

#include <cmath>
#include <stdexcept>

#include "varitab/ops.hpp"

namespace varitab {

void ModelConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("ModelConfig: dim must be positive");
    if (heads < 1 || dim % heads != 0) {
        throw std::invalid_argument("ModelConfig: dim must be divisible by heads");
    }
    if (layers < 1) throw std::invalid_argument("ModelConfig: need at least one layer");
    if (classes < 2) throw std::invalid_argument("ModelConfig: need at least two classes");
}

ModelState ModelState::create(const ModelConfig& config) {
    config.validate();
    ModelState m;
    m.config = config;
    m.rng = Rng(config.seed);
    m.tables = EmbeddingTables::create(config.dim, m.vocab.size(), m.rng);
    for (int64_t l = 0; l < config.layers; ++l) {
        m.layers.push_back(EncoderLayerParams::create(config.dim, m.rng));
    }
    m.heads = Heads::create(config.dim, m.logit_dim(), m.rng);
    return m;
}

std::vector<std::pair<std::string, Tensor>> ModelState::parameters() {
    std::vector<std::pair<std::string, Tensor>> out = {
        {"embed.token", tables.token_embedding},
        {"embed.cls", tables.cls_embedding},
        {"align.w", tables.align_w},
        {"align.b", tables.align_b},
        {"ln.cat.gain", tables.ln_cat_gain},
        {"ln.cat.bias", tables.ln_cat_bias},
        {"ln.num.gain", tables.ln_num_gain},
        {"ln.num.bias", tables.ln_num_bias},
        {"ln.bin.gain", tables.ln_bin_gain},
        {"ln.bin.bias", tables.ln_bin_bias},
    };
    for (size_t l = 0; l < layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        out.emplace_back(p + "wq", layers[l].w_q);
        out.emplace_back(p + "wk", layers[l].w_k);
        out.emplace_back(p + "wv", layers[l].w_v);
        out.emplace_back(p + "wo", layers[l].w_o);
        out.emplace_back(p + "gate", layers[l].w_gate);
        out.emplace_back(p + "inner.w", layers[l].inner_w);
        out.emplace_back(p + "inner.b", layers[l].inner_b);
        out.emplace_back(p + "outer.w", layers[l].outer_w);
        out.emplace_back(p + "outer.b", layers[l].outer_b);
    }
    out.emplace_back("head.clf.w", heads.clf_w);
    out.emplace_back("head.clf.b", heads.clf_b);
    out.emplace_back("head.proj.w", heads.proj_w);
    return out;
}

std::vector<std::pair<std::string, Tensor>> ModelState::named_tensors() {
    auto out = parameters();
    out.emplace_back("embed.overflow", tables.overflow_embedding);
    return out;
}

void ModelState::zero_grads() {
    for (auto& [name, t] : parameters()) {
        Tensor tensor = t;
        tensor.zero_grad();
    }
}

void ModelState::sync_vocab() {
    tables.grow_to(vocab.size(), rng);
}

void ModelState::replace_head(int classes) {
    if (classes < 2) throw std::invalid_argument("replace_head: need at least two classes");
    config.classes = classes;
    const Tensor proj = heads.proj_w;  // projector survives head replacement
    heads = Heads::create(config.dim, logit_dim(), rng);
    heads.proj_w = proj;
}

std::vector<FeaturizedRow> ModelState::featurize_rows(const TableDataset& dataset,
                                                      const std::vector<size_t>& idx,
                                                      bool allow_grow) {
    std::vector<FeaturizedRow> rows;
    rows.reserve(idx.size());
    for (size_t r : idx) {
        if (r >= dataset.rows.size()) throw std::out_of_range("featurize_rows: row index");
        rows.push_back(featurize_row(dataset.rows[r], dataset.schema, vocab, allow_grow, r));
    }
    if (allow_grow) sync_vocab();
    return rows;
}

Tensor ModelState::encode_rows(const std::vector<FeaturizedRow>& rows) {
    if (vocab.size() != tables.vocab_rows()) {
        throw std::logic_error("model: embedding rows out of sync with vocabulary");
    }
    PaddedBatch batch = pad_batch(rows, tables);
    return encode_batch(batch.embeddings, batch.mask, layers, config.heads);
}

Tensor ModelState::logits_for_rows(const TableDataset& dataset, const std::vector<size_t>& idx,
                                   bool allow_grow) {
    return classify(encode_rows(featurize_rows(dataset, idx, allow_grow)), heads);
}

std::vector<std::vector<double>> ModelState::probabilities(const Tensor& logits) const {
    const int64_t B = logits.extent(0);
    const int64_t C = logits.extent(1);
    std::vector<std::vector<double>> out(static_cast<size_t>(B));
    for (int64_t b = 0; b < B; ++b) {
        if (C == 1) {
            const double p = 1.0 / (1.0 + std::exp(-logits.values()[b]));
            out[static_cast<size_t>(b)] = {1.0 - p, p};
        } else {
            double mx = logits.values()[b * C];
            for (int64_t c = 1; c < C; ++c) mx = std::max(mx, logits.values()[b * C + c]);
            double sum = 0.0;
            std::vector<double> probs(static_cast<size_t>(C));
            for (int64_t c = 0; c < C; ++c) {
                probs[static_cast<size_t>(c)] = std::exp(logits.values()[b * C + c] - mx);
                sum += probs[static_cast<size_t>(c)];
            }
            for (double& p : probs) p /= sum;
            out[static_cast<size_t>(b)] = std::move(probs);
        }
    }
    return out;
}

}  // namespace varitab
