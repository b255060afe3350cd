#include "jan/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

#include "jan/error.hpp"
#include "jan/losses.hpp"
#include "jan/metrics.hpp"
#include "jan/ops.hpp"
#include "jan/rng.hpp"
#include "jan/scheduler.hpp"

namespace jan {

SampleGraph record_sample_loss(Tape& tape, const JointNetwork& net, const Sample& sample, double phi,
                               TrainMode mode) {
    Var image = tape.constant(sample.image);
    const JointGraph g = record_joint(tape, net, image);
    Var target = tape.constant(one_hot(sample.label, net.config().n_classes));
    Var ls = cross_entropy(target, g.class_probs);
    Var lu = mse(image, g.reconstruction);

    SampleGraph out;
    out.loss = mode == TrainMode::Joint ? combined_loss(ls, lu, phi) : ls;
    out.parts.total = out.loss.value().item();
    out.parts.supervised = ls.value().item();
    out.parts.unsupervised = lu.value().item();
    out.predicted = predict_label(g.class_probs.value());
    return out;
}

BatchGradients batch_gradients(const JointNetwork& net, const Dataset& data, std::span<const std::size_t> batch,
                               double phi, TrainMode mode) {
    if (batch.empty()) throw DataError("empty mini-batch");
    std::vector<std::size_t> order(batch.begin(), batch.end());
    std::sort(order.begin(), order.end());

    BatchGradients out;
    Gradients sum;
    for (std::size_t idx : order) {
        Tape tape;
        SampleGraph s = record_sample_loss(tape, net, data.samples.at(idx), phi, mode);
        Gradients g = tape.backward(s.loss);
        for (std::size_t p = 0; p < net.parameters().size(); ++p) {
            const ParamId id{p};
            if (mode == TrainMode::Backbone && net.parameter(id).group == ParamGroup::Decoder) continue;
            sum.accumulate(id, g.at(id));
        }
        out.sum.total += s.parts.total;
        out.sum.supervised += s.parts.supervised;
        out.sum.unsupervised += s.parts.unsupervised;
    }
    const double inv = 1.0 / static_cast<double>(order.size());
    for (std::size_t p = 0; p < net.parameters().size(); ++p) {
        if (!sum.contains(ParamId{p})) continue;
        for (double& v : sum.at(ParamId{p}).data()) v *= inv;
    }
    out.grads = std::move(sum);
    return out;
}

DatasetLoss evaluate_loss(const JointNetwork& net, const Dataset& data, double phi, TrainMode mode) {
    if (data.size() == 0) throw DataError("cannot evaluate an empty dataset");
    DatasetLoss out;
    std::size_t correct = 0;
    for (const auto& sample : data.samples) {
        Tape tape;
        SampleGraph s = record_sample_loss(tape, net, sample, phi, mode);
        out.mean.total += s.parts.total;
        out.mean.supervised += s.parts.supervised;
        out.mean.unsupervised += s.parts.unsupervised;
        if (s.predicted == sample.label) ++correct;
    }
    const double n = static_cast<double>(data.size());
    out.mean.total /= n;
    out.mean.supervised /= n;
    out.mean.unsupervised /= n;
    out.accuracy = static_cast<double>(correct) / n;
    return out;
}

std::string format_log_row(const EpochLog& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.6f,%.6g,%.6g", r.epoch, r.train_loss,
                  r.train_supervised, r.train_unsupervised, r.val_loss, r.val_accuracy, r.lr, r.phi);
    return buf;
}

namespace {

void check_split(const JointNetwork& net, const Dataset& data, const char* what) {
    if (data.size() == 0) throw DataError(std::string(what) + " set is empty");
    for (const auto& s : data.samples) {
        if (s.label < 0 || s.label >= net.config().n_classes) {
            throw DataError(std::string(what) + " sample " + s.source_id + " has label " + std::to_string(s.label) +
                            " >= n_classes " + std::to_string(net.config().n_classes));
        }
        check_image(net, s.image);
    }
}

} // namespace

TrainResult train(JointNetwork& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  TrainMode mode, const TrainOptions& options) {
    config.validate();
    check_split(net, train_set, "training");
    check_split(net, val_set, "validation");

    TrainResult result;
    AdamState optimizer = options.initial_optimizer ? *options.initial_optimizer
                                                    : AdamState::zeros_like(net.parameters());
    PlateauScheduler scheduler(config.patience, config.kappa, config.lr_floor);
    Rng rng(config.seed);
    double lr = config.lr;
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    double best = std::numeric_limits<double>::infinity();
    auto snapshot = [&](int epoch, double val_loss, double val_acc) {
        result.best = make_checkpoint(net, config, mode, optimizer, static_cast<std::uint32_t>(epoch), val_loss);
        result.best_val_accuracy = val_acc;
        best = val_loss;
    };

    if (config.epochs == 0) {
        const double phi = mode == TrainMode::Joint ? config.phi_at(options.start_epoch) : 1.0;
        const DatasetLoss v = evaluate_loss(net, val_set, phi, mode);
        snapshot(options.start_epoch, v.mean.total, v.accuracy);
    }

    for (int e = 1; e <= config.epochs; ++e) {
        const int epoch = options.start_epoch + e;
        const double phi = mode == TrainMode::Joint ? config.phi_at(epoch) : 1.0;
        rng.shuffle(std::span<std::size_t>(order));

        LossParts train_sum;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(start + batch, order.size());
            BatchGradients bg =
                batch_gradients(net, train_set, std::span<const std::size_t>(order).subspan(start, end - start), phi,
                                mode);
            adam_step(net.mutable_parameters(), bg.grads, optimizer, lr);
            train_sum.total += bg.sum.total;
            train_sum.supervised += bg.sum.supervised;
            train_sum.unsupervised += bg.sum.unsupervised;
        }

        const double n = static_cast<double>(train_set.size());
        const DatasetLoss v = evaluate_loss(net, val_set, phi, mode);
        EpochLog row{epoch, train_sum.total / n, train_sum.supervised / n, train_sum.unsupervised / n,
                     v.mean.total, v.accuracy, lr, phi};
        result.log.push_back(row);
        if (options.on_epoch) options.on_epoch(row);

        if (v.mean.total < best) snapshot(epoch, v.mean.total, v.accuracy);
        lr = scheduler.update(v.mean.total, lr);
    }
    result.final_optimizer = std::move(optimizer);
    return result;
}

KFoldResult kfold_train(const Dataset& dataset, const ArchConfig& arch, const TrainConfig& config, TrainMode mode,
                        const std::function<void(std::size_t, const EpochLog&)>& on_epoch) {
    config.validate();
    KFoldResult out;
    out.splits = stratified_folds(dataset, config.folds, config.seed);
    for (const auto& f : out.splits) {
        if (f.train.empty() || f.val.empty()) throw DataError("fold split produced an empty partition");
    }
    for (std::size_t f = 0; f < out.splits.size(); ++f) {
        TrainConfig fold_cfg = config;
        fold_cfg.seed = config.seed + f;
        JointNetwork net = JointNetwork::build(arch, fold_cfg.seed);
        TrainOptions opts;
        if (on_epoch) opts.on_epoch = [&, f](const EpochLog& row) { on_epoch(f, row); };
        out.folds.push_back(train(net, dataset.subset(out.splits[f].train), dataset.subset(out.splits[f].val),
                                  fold_cfg, mode, opts));
    }
    for (std::size_t f = 1; f < out.folds.size(); ++f) {
        const TrainResult& cand = out.folds[f];
        const TrainResult& cur = out.folds[out.best_fold];
        if (cand.best_val_accuracy > cur.best_val_accuracy ||
            (cand.best_val_accuracy == cur.best_val_accuracy && cand.best.best_val_loss < cur.best.best_val_loss)) {
            out.best_fold = f;
        }
    }
    return out;
}

} // namespace jan
