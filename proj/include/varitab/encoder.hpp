#pragma once

#include <cstdint>
#include <vector>

#include "varitab/adam.hpp"
#include "varitab/tensor.hpp"

namespace varitab {

// One gated transformer layer: multi-head self-attention followed by a
// token-wise gate over the attention output, concatenated with an inner
// linear and squeezed back to d by the outer linear under ReLU. There are
// no residual connections and no inter-layer norms.
struct EncoderLayerParams {
    Tensor w_q, w_k, w_v;     // [d, d]; per-head slices of width d/h
    Tensor w_o;               // [d, d]
    Tensor w_gate;            // [d, 1]
    Tensor inner_w, inner_b;  // [d, d], [d]
    Tensor outer_w, outer_b;  // [2d, d], [d]

    static EncoderLayerParams create(int64_t dim, Rng& rng);
};

struct Heads {
    Tensor clf_w, clf_b;  // [d, out]; out = 1 logit for binary tasks
    Tensor proj_w;        // [d, d], bias-free projection for contrastive views

    static Heads create(int64_t dim, int64_t out_dim, Rng& rng);
};

// z [B, n, d] -> [B, n, d]; masked key positions get -1e9 before softmax.
Tensor multi_head_attention(const Tensor& z, const Tensor& mask,
                            const EncoderLayerParams& params, int64_t heads);

Tensor gated_layer(const Tensor& z_att, const EncoderLayerParams& params);

// Full stack; returns the [cls] row of the final layer, [B, d]. The [cls]
// token sits at position length-1 of each row, recovered from the mask.
Tensor encode_batch(const Tensor& e_batch, const Tensor& mask,
                    const std::vector<EncoderLayerParams>& layers, int64_t heads);

Tensor classify(const Tensor& z_cls, const Heads& heads);
Tensor project(const Tensor& z_cls, const Heads& heads);

}  // namespace varitab
