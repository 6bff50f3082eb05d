#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "varitab/schema.hpp"
#include "varitab/tensor.hpp"

namespace varitab {

struct PartitionSpec {
    int64_t partitions = 2;     // K
    double overlap_ratio = 0.0; // fraction of a partition taken from its left neighbour
    uint64_t seed = 0;          // drives the K>2 pair draw, not the partitioning
};

// Contiguous schema-order slices; partition k>0 is extended on its left by
// round(overlap_ratio * |base_k|) columns from the tail of base_{k-1}.
std::vector<std::vector<ColumnSchema>> partition_columns(const std::vector<ColumnSchema>& schema,
                                                         const PartitionSpec& spec);

// Uniform distinct pair of partition indices (0-based). K == 2 always
// returns (0, 1).
std::pair<int64_t, int64_t> sample_partition_pair(int64_t partitions, uint64_t seed);

// Plain cosine similarity; throws on a zero-norm input.
double cosine_sim(const std::vector<double>& u, const std::vector<double>& v);

// Projections of every (sample, view) pair, indexed row i*views + k.
struct ContrastBatch {
    Tensor projections;  // [batch_size * views, d]
    std::optional<std::vector<int>> labels;
    int64_t batch_size = 0;
    int64_t views = 0;  // 2 when K > 2 (sampled pair), else K
};

struct VpclOptions {
    // The losses follow the typeset equations by default: the self-supervised
    // denominator keeps the anchor's self-similarity term and the supervised
    // denominator holds only different-class terms. exclude_self switches both
    // to the conventional InfoNCE form (denominator over everything but the
    // anchor itself, positives never the anchor itself).
    bool exclude_self = false;
};

// Positives are the other views of the same sample.
Tensor self_vpcl_loss(const ContrastBatch& batch, const VpclOptions& options = {});

// Positives are all views of same-class samples; requires >= 2 classes in
// the batch.
Tensor sup_vpcl_loss(const ContrastBatch& batch, const VpclOptions& options = {});

}  // namespace varitab
