#include "varitab/vpcl.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "varitab/ops.hpp"
#include "varitab/rng.hpp"

namespace varitab {

std::vector<std::vector<ColumnSchema>> partition_columns(const std::vector<ColumnSchema>& schema,
                                                         const PartitionSpec& spec) {
    const int64_t C = static_cast<int64_t>(schema.size());
    const int64_t K = spec.partitions;
    if (K < 1) throw std::invalid_argument("partition_columns: need K >= 1");
    if (K > C) {
        throw std::invalid_argument("partition_columns: K=" + std::to_string(K) + " exceeds " +
                                    std::to_string(C) + " columns");
    }
    std::vector<std::vector<ColumnSchema>> parts;
    int64_t prev_begin = 0, prev_end = 0;
    for (int64_t k = 0; k < K; ++k) {
        const int64_t begin = k * C / K;
        const int64_t end = (k + 1) * C / K;
        int64_t ext_begin = begin;
        if (k > 0) {
            int64_t o = std::llround(spec.overlap_ratio * static_cast<double>(end - begin));
            o = std::min(o, prev_end - prev_begin);
            ext_begin = begin - o;  // borrow the tail of the previous base slice
        }
        parts.emplace_back(schema.begin() + ext_begin, schema.begin() + end);
        prev_begin = begin;
        prev_end = end;
    }
    return parts;
}

std::pair<int64_t, int64_t> sample_partition_pair(int64_t partitions, uint64_t seed) {
    if (partitions < 2) throw std::invalid_argument("sample_partition_pair: need K >= 2");
    if (partitions == 2) return {0, 1};
    Rng rng(seed);
    const int64_t first = static_cast<int64_t>(rng.bounded(static_cast<uint64_t>(partitions)));
    int64_t second = static_cast<int64_t>(rng.bounded(static_cast<uint64_t>(partitions - 1)));
    if (second >= first) ++second;
    return {first, second};
}

double cosine_sim(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size() || u.empty()) {
        throw std::invalid_argument("cosine_sim: length mismatch");
    }
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) {
        throw std::domain_error("cosine_sim: zero-norm input (degenerate projection)");
    }
    return uv / (std::sqrt(uu) * std::sqrt(vv));
}

namespace {

void check_batch(const ContrastBatch& batch) {
    const Tensor& p = batch.projections;
    if (!p.defined() || p.rank() != 2) {
        throw std::invalid_argument("vpcl: projections must be [B*views, d]");
    }
    if (p.extent(0) != batch.batch_size * batch.views) {
        throw std::invalid_argument("vpcl: projection rows do not match batch_size * views");
    }
    const int64_t d = p.extent(1);
    for (int64_t r = 0; r < p.extent(0); ++r) {
        double norm = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double x = p.values()[r * d + j];
            norm += x * x;
        }
        if (norm == 0.0) {
            throw std::domain_error("vpcl: projection " + std::to_string(r) +
                                    " has zero norm (degenerate projection)");
        }
    }
}

// pairwise cosine similarities of the projection rows, differentiable
Tensor similarity_matrix(const Tensor& p) {
    Tensor normalized = mul_last(p, reciprocal(sqrt_t(sum_last(mul(p, p)))));
    return matmul_bt(normalized, normalized);
}

Tensor masked_loss(const Tensor& sims, const std::vector<double>& pos_mask,
                   const std::vector<double>& denom_mask, int64_t m) {
    Tensor pos = Tensor::from({m, m}, pos_mask);
    Tensor denom = Tensor::from({m, m}, denom_mask);
    std::vector<double> counts(static_cast<size_t>(m), 0.0);
    for (int64_t a = 0; a < m; ++a)
        for (int64_t c = 0; c < m; ++c) counts[a] += pos_mask[a * m + c];
    Tensor pos_count = Tensor::from({m, 1}, std::move(counts));
    // sum_a #pos(a) * log D_a  -  sum over positive pairs of psi
    Tensor log_denom = log_t(sum_last(mul(exp_t(sims), denom)));
    return sub(sum_all(mul(log_denom, pos_count)), sum_all(mul(sims, pos)));
}

}  // namespace

Tensor self_vpcl_loss(const ContrastBatch& batch, const VpclOptions& options) {
    if (batch.views < 2) throw std::invalid_argument("self_vpcl_loss: need >= 2 views");
    check_batch(batch);
    const int64_t m = batch.batch_size * batch.views;
    std::vector<double> pos(static_cast<size_t>(m * m), 0.0);
    std::vector<double> denom(static_cast<size_t>(m * m), 1.0);
    for (int64_t a = 0; a < m; ++a) {
        const int64_t i = a / batch.views;
        for (int64_t k = 0; k < batch.views; ++k) {
            const int64_t c = i * batch.views + k;
            if (c != a) pos[a * m + c] = 1.0;
        }
        if (options.exclude_self) denom[a * m + a] = 0.0;
    }
    return masked_loss(similarity_matrix(batch.projections), pos, denom, m);
}

Tensor sup_vpcl_loss(const ContrastBatch& batch, const VpclOptions& options) {
    if (!batch.labels || static_cast<int64_t>(batch.labels->size()) != batch.batch_size) {
        throw std::invalid_argument("sup_vpcl_loss: labels required, one per sample");
    }
    check_batch(batch);
    const std::set<int> classes(batch.labels->begin(), batch.labels->end());
    if (classes.size() < 2) {
        throw std::domain_error("sup_vpcl_loss: batch holds a single class (degenerate batch)");
    }
    const int64_t m = batch.batch_size * batch.views;
    std::vector<double> pos(static_cast<size_t>(m * m), 0.0);
    std::vector<double> denom(static_cast<size_t>(m * m), 0.0);
    for (int64_t a = 0; a < m; ++a) {
        const int ya = (*batch.labels)[static_cast<size_t>(a / batch.views)];
        for (int64_t c = 0; c < m; ++c) {
            const int yc = (*batch.labels)[static_cast<size_t>(c / batch.views)];
            if (options.exclude_self) {
                if (c != a && yc == ya) pos[a * m + c] = 1.0;
                if (c != a) denom[a * m + c] = 1.0;
            } else {
                if (yc == ya) pos[a * m + c] = 1.0;
                if (yc != ya) denom[a * m + c] = 1.0;
            }
        }
    }
    return masked_loss(similarity_matrix(batch.projections), pos, denom, m);
}

}  // namespace varitab
