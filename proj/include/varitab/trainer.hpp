#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varitab/model.hpp"
#include "varitab/schema.hpp"
#include "varitab/vpcl.hpp"

namespace varitab {

struct TrainConfig {
    // protocol defaults: lr in {2e-5, 5e-5, 1e-4}, batch in {16, 64, 128},
    // 100 supervised epochs / 50 pretraining epochs, patience 10
    double learning_rate = 1e-4;
    int64_t batch_size = 64;
    int64_t max_epochs = 100;
    int64_t patience = 10;
    uint64_t seed = 42;
    double eval_fraction = 0.2;

    enum class VpclMode { self_supervised, supervised };
    PartitionSpec vpcl;
    VpclMode vpcl_mode = VpclMode::self_supervised;
    VpclOptions vpcl_options;

    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_auroc;   // per epoch; 0.5 when validation is degenerate
    int64_t best_epoch = -1;         // 0-based; -1 when no usable validation metric
    int64_t stop_epoch = 0;          // epochs actually run
    double best_val_auroc = 0.0;
    int64_t skipped_single_class_batches = 0;
    int64_t skipped_empty_view_rows = 0;

    std::string to_csv() const;
    void save_csv(const std::string& path) const;
    std::string summary() const;
};

// Cross-entropy training with Adam and AUROC early stopping on a held-out
// fraction of the rows. Returns the best-validation-epoch parameters.
TrainReport train_supervised(ModelState& model, const TableDataset& dataset,
                             const TrainConfig& config);

// Vertical-partition contrastive pretraining over one or more tables,
// round-robin batches, up to max_epochs (no early stopping).
TrainReport pretrain_vpcl(ModelState& model, const std::vector<TableDataset>& datasets,
                          const TrainConfig& config);

// Drops the classifier head for the target class count, keeps everything
// else, then trains as train_supervised with fresh optimizer state.
TrainReport finetune(ModelState& model, const TableDataset& dataset, const TrainConfig& config);

// Frozen-vocabulary inference; never mutates the model. Returns one class
// distribution per row.
std::vector<std::vector<double>> zero_shot_predict(ModelState& model, const TableDataset& dataset);

// Positive-class scores for binary models (probability of class 1).
std::vector<double> positive_scores(const std::vector<std::vector<double>>& distributions);

// Probability a random positive outscores a random negative, ties half.
double evaluate_auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean batch loss without an optimizer step; the training objective itself.
double supervised_loss(ModelState& model, const TableDataset& dataset,
                       const std::vector<size_t>& idx);

}  // namespace varitab
