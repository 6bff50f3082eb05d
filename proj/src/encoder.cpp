#include "varitab/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "varitab/ops.hpp"

namespace varitab {

EncoderLayerParams EncoderLayerParams::create(int64_t dim, Rng& rng) {
    EncoderLayerParams p;
    p.w_q = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    p.w_k = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    p.w_v = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    p.w_o = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    p.w_gate = init_parameter({dim, 1}, InitScheme::uniform_fan, dim, rng);
    p.inner_w = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    p.inner_b = init_parameter({dim}, InitScheme::zeros, dim, rng);
    p.outer_w = init_parameter({2 * dim, dim}, InitScheme::uniform_fan, 2 * dim, rng);
    p.outer_b = init_parameter({dim}, InitScheme::zeros, dim, rng);
    return p;
}

Heads Heads::create(int64_t dim, int64_t out_dim, Rng& rng) {
    Heads h;
    h.clf_w = init_parameter({dim, out_dim}, InitScheme::uniform_fan, dim, rng);
    h.clf_b = init_parameter({out_dim}, InitScheme::zeros, dim, rng);
    h.proj_w = init_parameter({dim, dim}, InitScheme::uniform_fan, dim, rng);
    return h;
}

Tensor multi_head_attention(const Tensor& z, const Tensor& mask,
                            const EncoderLayerParams& params, int64_t heads) {
    if (z.rank() != 3) throw std::invalid_argument("multi_head_attention: z must be [B, n, d]");
    const int64_t B = z.extent(0), n = z.extent(1), d = z.extent(2);
    if (heads < 1 || d % heads != 0) {
        throw std::invalid_argument("multi_head_attention: d=" + std::to_string(d) +
                                    " not divisible by h=" + std::to_string(heads));
    }
    const int64_t dh = d / heads;

    // additive key mask, 0 for real tokens and -1e9 for padding
    std::vector<double> bias(static_cast<size_t>(B * n * n), 0.0);
    if (mask.defined()) {
        if (mask.rank() != 2 || mask.extent(0) != B || mask.extent(1) != n) {
            throw std::invalid_argument("multi_head_attention: mask must be [B, n]");
        }
        for (int64_t b = 0; b < B; ++b)
            for (int64_t k = 0; k < n; ++k)
                if (mask.values()[b * n + k] == 0.0)
                    for (int64_t q = 0; q < n; ++q) bias[(b * n + q) * n + k] = -1e9;
    }
    Tensor mask_bias = Tensor::from({B, n, n}, std::move(bias));

    Tensor q = linear(z, params.w_q);
    Tensor k = linear(z, params.w_k);
    Tensor v = linear(z, params.w_v);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<Tensor> head_outputs;
    head_outputs.reserve(static_cast<size_t>(heads));
    for (int64_t h = 0; h < heads; ++h) {
        Tensor qh = slice_last(q, h * dh, dh);
        Tensor kh = slice_last(k, h * dh, dh);
        Tensor vh = slice_last(v, h * dh, dh);
        Tensor scores = add(scale(batch_matmul_bt(qh, kh), inv_sqrt), mask_bias);
        Tensor attn = softmax_lastdim(scores);
        head_outputs.push_back(batch_matmul(attn, vh));
    }
    return linear(concat_last(head_outputs), params.w_o);
}

Tensor gated_layer(const Tensor& z_att, const EncoderLayerParams& params) {
    if (z_att.rank() != 3) throw std::invalid_argument("gated_layer: input must be [B, n, d]");
    Tensor gate = sigmoid(linear(z_att, params.w_gate));  // [B, n, 1], one scalar per token
    Tensor gated = mul_last(z_att, gate);
    Tensor inner = add_bias(linear(z_att, params.inner_w), params.inner_b);
    Tensor widened = concat_last({gated, inner});  // [B, n, 2d]
    return relu(add_bias(linear(widened, params.outer_w), params.outer_b));
}

Tensor encode_batch(const Tensor& e_batch, const Tensor& mask,
                    const std::vector<EncoderLayerParams>& layers, int64_t heads) {
    if (layers.empty()) throw std::invalid_argument("encode_batch: need at least one layer");
    Tensor z = e_batch;
    for (const auto& layer : layers) {
        z = gated_layer(multi_head_attention(z, mask, layer, heads), layer);
    }
    const int64_t B = e_batch.extent(0), n = e_batch.extent(1);
    std::vector<int64_t> cls_pos(static_cast<size_t>(B), n - 1);
    if (mask.defined()) {
        for (int64_t b = 0; b < B; ++b) {
            int64_t len = 0;
            for (int64_t i = 0; i < n; ++i) len += mask.values()[b * n + i] != 0.0 ? 1 : 0;
            if (len == 0) throw std::invalid_argument("encode_batch: batch row " + std::to_string(b) +
                                                      " is fully masked");
            cls_pos[static_cast<size_t>(b)] = len - 1;
        }
    }
    return gather_rows(z, cls_pos);
}

Tensor classify(const Tensor& z_cls, const Heads& heads) {
    return add_bias(linear(z_cls, heads.clf_w), heads.clf_b);
}

Tensor project(const Tensor& z_cls, const Heads& heads) {
    return linear(z_cls, heads.proj_w);
}

}  // namespace varitab
