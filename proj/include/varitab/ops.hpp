#pragma once

#include <vector>

#include "varitab/tensor.hpp"

namespace varitab {

// Differentiable operation set. Everything the model computes is composed
// from these primitives so reverse-mode gradients stay checkable against
// finite differences.

// elementwise, same shape
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// broadcast over the trailing axis
Tensor add_bias(const Tensor& a, const Tensor& bias);        // a[..., d] + bias[d]
Tensor mul_last(const Tensor& a, const Tensor& s);           // a[..., d] * s[..., 1]

// linear algebra
Tensor linear(const Tensor& a, const Tensor& w);             // a[..., k] x w[k, m]
Tensor matmul_bt(const Tensor& a, const Tensor& b);          // a[m, k] x b[n, k]^T
Tensor batch_matmul(const Tensor& a, const Tensor& b);       // a[B,n,m] x b[B,m,k]
Tensor batch_matmul_bt(const Tensor& a, const Tensor& b);    // a[B,n,k] x b[B,m,k]^T

// structure
Tensor concat_last(const std::vector<Tensor>& parts);
Tensor slice_last(const Tensor& a, int64_t start, int64_t len);
Tensor concat_rows(const std::vector<Tensor>& parts);        // rank-2 along axis 0
Tensor pad_stack(const std::vector<Tensor>& rows, int64_t n_max);  // [n_i,d] -> [B,n_max,d]
Tensor gather_rows(const Tensor& a, const std::vector<int64_t>& idx);  // a[B,n,d] -> [B,d]

// embedding lookup; ids >= main rows index into overflow (never trained)
Tensor embed_rows(const Tensor& main, const Tensor& overflow, const std::vector<int64_t>& ids);

// nonlinear
Tensor softmax_lastdim(const Tensor& a);
Tensor layer_norm_lastdim(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);
Tensor reciprocal(const Tensor& a);

// reductions
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor sum_last(const Tensor& a);                            // a[..., d] -> [..., 1]

}  // namespace varitab
