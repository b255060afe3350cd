#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jan/adam.hpp"
#include "jan/checkpoint.hpp"
#include "jan/dataset.hpp"
#include "jan/folds.hpp"
#include "jan/joint_net.hpp"
#include "jan/train_config.hpp"

namespace jan {

struct LossParts {
    double total = 0.0;        // L = phi*Ls + (1-phi)*Lu, or Ls in backbone mode
    double supervised = 0.0;   // Ls
    double unsupervised = 0.0; // Lu
};

/// Per-sample loss recorded on `tape`. In backbone mode the decoder is still
/// evaluated so Lu can be reported, but the loss is Ls alone.
struct SampleGraph {
    Var loss;
    LossParts parts;
    int predicted = 0;
};
SampleGraph record_sample_loss(Tape& tape, const JointNetwork& net, const Sample& sample, double phi, TrainMode mode);

struct BatchGradients {
    Gradients grads; // mean over the batch; decoder entries omitted in backbone mode
    LossParts sum;   // summed (not averaged) per-sample losses
};

/// Gradient of the batch-mean loss. Sample indices are sorted before the
/// per-sample gradients are summed, so the result is order independent.
BatchGradients batch_gradients(const JointNetwork& net, const Dataset& data, std::span<const std::size_t> batch,
                               double phi, TrainMode mode);

struct DatasetLoss {
    LossParts mean;
    double accuracy = 0.0;
};

/// Mean losses and accuracy over a dataset, accumulated in sample order.
DatasetLoss evaluate_loss(const JointNetwork& net, const Dataset& data, double phi, TrainMode mode);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double train_supervised = 0.0;
    double train_unsupervised = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double lr = 0.0;
    double phi = 0.0;
};

inline constexpr const char* kLogColumns = "epoch,train_L,train_Ls,train_Lu,val_L,val_acc,lr,phi";
std::string format_log_row(const EpochLog& row);

struct TrainResult {
    Checkpoint best;        // lowest validation loss; ties keep the earlier epoch
    double best_val_accuracy = 0.0;
    std::vector<EpochLog> log;
    AdamState final_optimizer;
};

struct TrainOptions {
    /// Continue from an existing optimizer state instead of zeros.
    const AdamState* initial_optimizer = nullptr;
    /// Epoch numbering continues after this value.
    int start_epoch = 0;
    std::function<void(const EpochLog&)> on_epoch;
};

/// Mini-batch Adam with seeded shuffling, plateau lr decay and
/// checkpoint-on-best. `net` is left at its final-epoch weights.
TrainResult train(JointNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  TrainMode mode, const TrainOptions& options = {});

struct KFoldResult {
    std::size_t best_fold = 0;
    std::vector<Fold> splits;
    std::vector<TrainResult> folds;
    const Checkpoint& best() const { return folds.at(best_fold).best; }
};

/// One model per stratified fold (network and shuffling seeded with
/// seed + fold index). Best fold: highest validation accuracy, then lowest
/// validation loss, then lowest index.
KFoldResult kfold_train(const Dataset& dataset, const ArchConfig& arch, const TrainConfig& config, TrainMode mode,
                        const std::function<void(std::size_t fold, const EpochLog&)>& on_epoch = {});

} // namespace jan
