#include "varitab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "varitab/adam.hpp"
#include "varitab/ops.hpp"

namespace varitab {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be positive");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be positive");
    if (patience < 1 || patience > max_epochs) {
        throw std::invalid_argument("TrainConfig: patience must be in [1, max_epochs]");
    }
    if (eval_fraction < 0.0 || eval_fraction >= 1.0) {
        throw std::invalid_argument("TrainConfig: eval_fraction must be in [0, 1)");
    }
}

std::string TrainReport::to_csv() const {
    std::ostringstream os;
    os << "epoch,train_loss,val_auroc\n";
    for (size_t e = 0; e < train_loss.size(); ++e) {
        os << (e + 1) << ',' << train_loss[e] << ','
           << (e < val_auroc.size() ? val_auroc[e] : 0.0) << '\n';
    }
    return os.str();
}

void TrainReport::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report '" + path + "'");
    out << to_csv();
}

std::string TrainReport::summary() const {
    std::ostringstream os;
    os << "epochs=" << stop_epoch;
    if (best_epoch >= 0) {
        os << " best_epoch=" << (best_epoch + 1) << " best_val_auroc=" << best_val_auroc;
    }
    if (skipped_single_class_batches > 0) {
        os << " skipped_single_class_batches=" << skipped_single_class_batches;
    }
    if (skipped_empty_view_rows > 0) os << " skipped_empty_view_rows=" << skipped_empty_view_rows;
    return os.str();
}

namespace {

struct LabelTensors {
    Tensor binary_targets;  // [B, 1] when single-logit
    Tensor one_hot;         // [B, C] otherwise
};

Tensor batch_loss_from_logits(const Tensor& logits, const std::vector<int>& labels) {
    const int64_t B = logits.extent(0);
    const int64_t C = logits.extent(1);
    if (static_cast<int64_t>(labels.size()) != B) {
        throw std::invalid_argument("loss: label count does not match batch");
    }
    if (C == 1) {
        // logistic loss, softplus(z) - y*z, with softplus composed stably as
        // relu(z) + log(1 + exp(-|z|))
        std::vector<double> y(static_cast<size_t>(B));
        for (int64_t b = 0; b < B; ++b) y[static_cast<size_t>(b)] = labels[static_cast<size_t>(b)];
        Tensor targets = Tensor::from({B, 1}, std::move(y));
        Tensor abs = add(relu(logits), relu(neg(logits)));
        Tensor softplus = add(relu(logits), log_t(add_scalar(exp_t(neg(abs)), 1.0)));
        return mean_all(sub(softplus, mul(targets, logits)));
    }
    std::vector<double> onehot(static_cast<size_t>(B * C), 0.0);
    for (int64_t b = 0; b < B; ++b) {
        const int y = labels[static_cast<size_t>(b)];
        if (y < 0 || y >= C) throw std::invalid_argument("loss: class id out of range");
        onehot[static_cast<size_t>(b * C + y)] = 1.0;
    }
    Tensor mask = Tensor::from({B, C}, std::move(onehot));
    Tensor log_probs = log_t(softmax_lastdim(logits));
    return scale(sum_all(mul(mask, log_probs)), -1.0 / static_cast<double>(B));
}

std::vector<int> gather_labels(const TableDataset& dataset, const std::vector<size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (size_t r : idx) out.push_back((*dataset.labels)[r]);
    return out;
}

double auroc_or_default(const std::vector<double>& scores, const std::vector<int>& labels) {
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (scores.empty() || !has_pos || !has_neg) return 0.5;
    return evaluate_auroc(scores, labels);
}

// validation metric: AUROC for binary tasks, macro one-vs-rest otherwise
double validation_metric(ModelState& model, const TableDataset& dataset,
                         const std::vector<size_t>& idx) {
    if (idx.empty()) return 0.5;
    NoGradGuard no_grad;
    std::vector<std::vector<double>> dists;
    dists.reserve(idx.size());
    constexpr size_t kEvalChunk = 256;
    for (size_t off = 0; off < idx.size(); off += kEvalChunk) {
        std::vector<size_t> chunk(idx.begin() + off,
                                  idx.begin() + std::min(idx.size(), off + kEvalChunk));
        Tensor logits = model.logits_for_rows(dataset, chunk, /*allow_grow=*/false);
        for (auto& p : model.probabilities(logits)) dists.push_back(std::move(p));
    }
    std::vector<int> labels = gather_labels(dataset, idx);
    const int C = model.config.classes;
    if (C == 2) return auroc_or_default(positive_scores(dists), labels);
    double acc = 0.0;
    int counted = 0;
    for (int c = 0; c < C; ++c) {
        std::vector<double> s(dists.size());
        std::vector<int> y(labels.size());
        bool pos = false, neg = false;
        for (size_t i = 0; i < dists.size(); ++i) {
            s[i] = dists[i][static_cast<size_t>(c)];
            y[i] = labels[i] == c ? 1 : 0;
            (y[i] ? pos : neg) = true;
        }
        if (pos && neg) {
            acc += evaluate_auroc(s, y);
            ++counted;
        }
    }
    return counted ? acc / counted : 0.5;
}

struct ParamSnapshot {
    std::vector<std::pair<std::string, std::vector<double>>> values;
};

ParamSnapshot snapshot_params(ModelState& model) {
    ParamSnapshot snap;
    for (auto& [name, t] : model.parameters()) snap.values.emplace_back(name, t.values());
    return snap;
}

void restore_params(ModelState& model, const ParamSnapshot& snap) {
    std::map<std::string, const std::vector<double>*> by_name;
    for (const auto& [name, vals] : snap.values) by_name[name] = &vals;
    for (auto& [name, t] : model.parameters()) {
        auto it = by_name.find(name);
        if (it == by_name.end()) continue;
        Tensor tensor = t;
        auto& dst = tensor.values();
        const auto& src = *it->second;
        // rows grown after the snapshot keep their current values
        std::copy(src.begin(), src.begin() + static_cast<long>(std::min(src.size(), dst.size())),
                  dst.begin());
    }
}

}  // namespace

double evaluate_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("evaluate_auroc: scores and labels must align and be non-empty");
    }
    size_t pos = 0, neg = 0;
    for (int y : labels) {
        if (y == 1) ++pos;
        else if (y == 0) ++neg;
        else throw std::invalid_argument("evaluate_auroc: labels must be 0 or 1");
    }
    if (pos == 0 || neg == 0) {
        throw std::invalid_argument("evaluate_auroc: both classes must be present");
    }
    // Mann-Whitney with average ranks over tied groups
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos), n = static_cast<double>(neg);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

std::vector<double> positive_scores(const std::vector<std::vector<double>>& distributions) {
    std::vector<double> out;
    out.reserve(distributions.size());
    for (const auto& d : distributions) {
        if (d.size() < 2) throw std::invalid_argument("positive_scores: need class-1 probability");
        out.push_back(d[1]);
    }
    return out;
}

double supervised_loss(ModelState& model, const TableDataset& dataset,
                       const std::vector<size_t>& idx) {
    if (!dataset.labels) throw std::invalid_argument("supervised_loss: dataset is unlabeled");
    NoGradGuard no_grad;
    Tensor logits = model.logits_for_rows(dataset, idx, /*allow_grow=*/false);
    return batch_loss_from_logits(logits, gather_labels(dataset, idx)).item();
}

TrainReport train_supervised(ModelState& model, const TableDataset& dataset,
                             const TrainConfig& config) {
    config.validate();
    dataset.validate();
    if (!dataset.labels) throw std::invalid_argument("train_supervised: dataset is unlabeled");
    if (dataset.rows.empty()) throw std::invalid_argument("train_supervised: dataset is empty");
    if (dataset.class_count() > model.config.classes) {
        throw std::invalid_argument("train_supervised: dataset has " +
                                    std::to_string(dataset.class_count()) +
                                    " classes, model head has " +
                                    std::to_string(model.config.classes));
    }

    Rng rng(config.seed);
    std::vector<size_t> all(dataset.rows.size());
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    const size_t val_count =
        static_cast<size_t>(static_cast<double>(all.size()) * config.eval_fraction);
    std::vector<size_t> val_idx(all.begin(), all.begin() + static_cast<long>(val_count));
    std::vector<size_t> train_idx(all.begin() + static_cast<long>(val_count), all.end());
    if (train_idx.empty()) throw std::invalid_argument("train_supervised: no training rows left");

    // grow the vocabulary over the training split once, up front, so epoch
    // snapshots always cover every parameter value
    model.featurize_rows(dataset, train_idx, /*allow_grow=*/true);

    bool val_usable = !val_idx.empty();
    if (val_usable && model.config.classes == 2) {
        std::set<int> seen;
        for (size_t r : val_idx) seen.insert((*dataset.labels)[r]);
        val_usable = seen.size() >= 2;
    }

    AdamOptimizer adam({.learning_rate = config.learning_rate});
    TrainReport report;
    ParamSnapshot best;
    double best_metric = -1.0;
    int64_t epochs_since_best = 0;

    for (int64_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(train_idx);
        double loss_sum = 0.0;
        size_t loss_rows = 0;
        for (size_t off = 0; off < train_idx.size();
             off += static_cast<size_t>(config.batch_size)) {
            std::vector<size_t> batch(
                train_idx.begin() + static_cast<long>(off),
                train_idx.begin() +
                    static_cast<long>(std::min(train_idx.size(),
                                               off + static_cast<size_t>(config.batch_size))));
            Tensor logits = model.logits_for_rows(dataset, batch, /*allow_grow=*/true);
            Tensor loss = batch_loss_from_logits(logits, gather_labels(dataset, batch));
            model.zero_grads();
            backward(loss);
            adam.step(model.parameters());
            loss_sum += loss.item() * static_cast<double>(batch.size());
            loss_rows += batch.size();
        }
        report.train_loss.push_back(loss_sum / static_cast<double>(loss_rows));

        const double metric = val_usable ? validation_metric(model, dataset, val_idx) : 0.5;
        report.val_auroc.push_back(metric);
        report.stop_epoch = epoch + 1;

        if (val_usable && metric > best_metric) {
            best_metric = metric;
            report.best_epoch = epoch;
            report.best_val_auroc = metric;
            best = snapshot_params(model);
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (val_usable && epochs_since_best >= config.patience) break;
    }

    if (report.best_epoch >= 0) restore_params(model, best);
    return report;
}

TrainReport pretrain_vpcl(ModelState& model, const std::vector<TableDataset>& datasets,
                          const TrainConfig& config) {
    config.validate();
    if (datasets.empty()) throw std::invalid_argument("pretrain_vpcl: no datasets");
    if (config.vpcl.partitions < 2) {
        throw std::invalid_argument("pretrain_vpcl: need at least 2 partitions");
    }
    for (const auto& ds : datasets) {
        ds.validate();
        if (ds.rows.empty()) throw std::invalid_argument("pretrain_vpcl: dataset '" + ds.name +
                                                         "' is empty");
        if (config.vpcl_mode == TrainConfig::VpclMode::supervised && !ds.labels) {
            throw std::invalid_argument("pretrain_vpcl: supervised mode needs labels on '" +
                                        ds.name + "'");
        }
    }

    // shared vocabulary over every table, grown once up front
    for (const auto& ds : datasets) {
        std::vector<size_t> idx(ds.rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        model.featurize_rows(ds, idx, /*allow_grow=*/true);
    }

    std::vector<std::vector<std::vector<ColumnSchema>>> partitions;
    for (const auto& ds : datasets) {
        PartitionSpec spec = config.vpcl;
        spec.partitions = std::min<int64_t>(spec.partitions,
                                            static_cast<int64_t>(ds.schema.size()));
        if (spec.partitions < 2) {
            throw std::invalid_argument("pretrain_vpcl: dataset '" + ds.name +
                                        "' has too few columns to partition");
        }
        partitions.push_back(partition_columns(ds.schema, spec));
    }

    Rng rng(config.seed);
    AdamOptimizer adam({.learning_rate = config.learning_rate});
    TrainReport report;

    for (int64_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        // per-dataset shuffled row queues, consumed round-robin one batch at a time
        std::vector<std::vector<size_t>> queues;
        std::vector<size_t> cursor(datasets.size(), 0);
        for (const auto& ds : datasets) {
            std::vector<size_t> idx(ds.rows.size());
            std::iota(idx.begin(), idx.end(), 0);
            rng.shuffle(idx);
            queues.push_back(std::move(idx));
        }
        // when K > 2, one freshly seeded view pair per dataset per epoch
        std::vector<std::pair<int64_t, int64_t>> pairs;
        for (size_t d = 0; d < datasets.size(); ++d) {
            const int64_t K = static_cast<int64_t>(partitions[d].size());
            if (K > 2) {
                pairs.push_back(sample_partition_pair(
                    K, config.vpcl.seed + 0x9e3779b9ull * static_cast<uint64_t>(epoch + 1) +
                           static_cast<uint64_t>(d)));
            } else {
                pairs.emplace_back(0, 1);
            }
        }

        double loss_sum = 0.0;
        size_t loss_rows = 0;
        bool any = true;
        while (any) {
            any = false;
            for (size_t d = 0; d < datasets.size(); ++d) {
                if (cursor[d] >= queues[d].size()) continue;
                any = true;
                const size_t end = std::min(queues[d].size(),
                                            cursor[d] + static_cast<size_t>(config.batch_size));
                std::vector<size_t> batch(queues[d].begin() + static_cast<long>(cursor[d]),
                                          queues[d].begin() + static_cast<long>(end));
                cursor[d] = end;

                const auto [ka, kb] = pairs[d];
                std::vector<const std::vector<ColumnSchema>*> views = {&partitions[d][ka],
                                                                       &partitions[d][kb]};

                std::vector<FeaturizedRow> featurized;
                std::vector<int> labels;
                for (size_t r : batch) {
                    std::vector<FeaturizedRow> row_views;
                    bool ok = true;
                    for (const auto* view : views) {
                        try {
                            row_views.push_back(featurize_row(datasets[d].rows[r], *view,
                                                              model.vocab, /*allow_grow=*/true, r));
                        } catch (const std::runtime_error&) {
                            ok = false;  // a partition view with no tokens drops the row
                            break;
                        }
                    }
                    if (!ok) {
                        ++report.skipped_empty_view_rows;
                        continue;
                    }
                    for (auto& fv : row_views) featurized.push_back(std::move(fv));
                    if (datasets[d].labels) labels.push_back((*datasets[d].labels)[r]);
                }
                model.sync_vocab();
                const int64_t rows_kept = static_cast<int64_t>(featurized.size()) / 2;
                if (rows_kept < 2) continue;  // contrast needs at least two samples

                ContrastBatch cbatch;
                cbatch.batch_size = rows_kept;
                cbatch.views = 2;
                if (config.vpcl_mode == TrainConfig::VpclMode::supervised) {
                    std::set<int> classes(labels.begin(), labels.end());
                    if (classes.size() < 2) {
                        ++report.skipped_single_class_batches;
                        continue;
                    }
                    cbatch.labels = labels;
                }
                cbatch.projections = project(model.encode_rows(featurized), model.heads);

                Tensor loss = config.vpcl_mode == TrainConfig::VpclMode::supervised
                                  ? sup_vpcl_loss(cbatch, config.vpcl_options)
                                  : self_vpcl_loss(cbatch, config.vpcl_options);
                model.zero_grads();
                backward(loss);
                adam.step(model.parameters());
                loss_sum += loss.item();
                loss_rows += static_cast<size_t>(rows_kept);
            }
        }
        report.train_loss.push_back(loss_rows ? loss_sum / static_cast<double>(loss_rows) : 0.0);
        report.stop_epoch = epoch + 1;
    }
    return report;
}

TrainReport finetune(ModelState& model, const TableDataset& dataset, const TrainConfig& config) {
    if (!dataset.labels) throw std::invalid_argument("finetune: dataset is unlabeled");
    model.replace_head(std::max(2, dataset.class_count()));
    return train_supervised(model, dataset, config);
}

std::vector<std::vector<double>> zero_shot_predict(ModelState& model, const TableDataset& dataset) {
    NoGradGuard no_grad;
    std::vector<std::vector<double>> out;
    out.reserve(dataset.rows.size());
    constexpr size_t kChunk = 256;
    for (size_t off = 0; off < dataset.rows.size(); off += kChunk) {
        std::vector<size_t> idx;
        for (size_t r = off; r < std::min(dataset.rows.size(), off + kChunk); ++r) idx.push_back(r);
        Tensor logits = model.logits_for_rows(dataset, idx, /*allow_grow=*/false);
        for (auto& p : model.probabilities(logits)) out.push_back(std::move(p));
    }
    return out;
}

}  // namespace varitab
