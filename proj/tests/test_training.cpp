#include "helpers.hpp"

#include <cmath>
#include <fstream>

#include "jan/adam.hpp"
#include "jan/checkpoint.hpp"
#include "jan/error.hpp"
#include "jan/losses.hpp"
#include "jan/metrics.hpp"
#include "jan/ops.hpp"
#include "jan/rng.hpp"
#include "jan/run_config.hpp"
#include "jan/scheduler.hpp"
#include "jan/synth.hpp"
#include "jan/trainer.hpp"

using namespace jan;
using jan::test::bit_equal;
using jan::test::TempDir;

namespace {

ArchConfig small_arch() {
    ArchConfig a;
    a.n_stages = 2;
    a.input_size = 16;
    a.base_channels = 4;
    return a;
}

TrainConfig quick_config(int epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.lr = 1e-3;
    return c;
}

Gradients sample_grads(const JointNetwork& net, const Sample& s, double phi) {
    Tape tape;
    const SampleGraph g = record_sample_loss(tape, net, s, phi, TrainMode::Joint);
    return tape.backward(g.loss);
}

} // namespace

TEST_CASE("cross_entropy examples") {
    CHECK(cross_entropy(Tensor::vector({1, 0, 0}), Tensor::vector({1, 0, 0})) == 0.0);
    CHECK(std::abs(cross_entropy(Tensor::vector({0, 1, 0}), Tensor::vector({1.0 / 3, 1.0 / 3, 1.0 / 3})) -
                   std::log(3.0)) < 1e-12);
    CHECK(std::abs(cross_entropy(Tensor::vector({0, 1, 0}), Tensor::vector({0.1, 0.8, 0.1})) - 0.22314) < 1e-5);
    CHECK_THROWS_AS(cross_entropy(Tensor::vector({0.5, 0.5, 0}), Tensor::vector({0.1, 0.8, 0.1})), DataError);
    CHECK_THROWS_AS(cross_entropy(Tensor::vector({0, 1}), Tensor::vector({0.1, 0.8, 0.1})), ShapeError);
}

TEST_CASE("mse examples") {
    CHECK(mse(Tensor::vector({0.3, 0.7}), Tensor::vector({0.3, 0.7})) == 0.0);
    CHECK(mse(Tensor::vector({1, 0}), Tensor::vector({0, 1})) == 1.0);
    CHECK(std::abs(mse(Tensor::vector({0.2, 0.4, 0.6}), Tensor::vector({0.2, 0.1, 0.9})) - 0.06) <= 1e-12);
    CHECK_THROWS_AS(mse(Tensor::vector({1, 0}), Tensor::vector({1, 0, 0})), ShapeError);
}

TEST_CASE("combined_loss examples") {
    CHECK(combined_loss(2.0, 0.5, 0.5) == 1.25);
    CHECK(combined_loss(2.0, 0.5, 1.0) == 2.0);
    CHECK(combined_loss(2.0, 0.5, 0.0) == 0.5);
    CHECK(std::abs(combined_loss(2.0, 0.5, 0.3) - 0.95) < 1e-15);
    CHECK_THROWS_AS(combined_loss(2.0, 0.5, 1.5), ConfigError);
    CHECK_THROWS_AS(combined_loss(2.0, 0.5, -0.1), ConfigError);
}

TEST_CASE("adam first step moves by about lr against the gradient") {
    std::vector<Parameter> params{{"w", ParamGroup::Encoder, Tensor::vector({0.0})},
                                  {"u", ParamGroup::Encoder, Tensor::vector({0.0})}};
    AdamState state = AdamState::zeros_like(params);
    Gradients g;
    g.accumulate(ParamId{0}, Tensor::vector({1.0}));
    g.accumulate(ParamId{1}, Tensor::vector({1.0}));
    adam_step(params, g, state, 1e-4);
    CHECK(std::abs(params[0].value[0] + 1e-4) < 1e-12);
    CHECK(bit_equal(params[0].value, params[1].value));
    CHECK(state.step == 1);
}

TEST_CASE("adam with zero gradient leaves parameters and decays moments") {
    std::vector<Parameter> params{{"w", ParamGroup::Encoder, Tensor::vector({0.5})}};
    AdamState state = AdamState::zeros_like(params);
    state.m[0][0] = 0.2;
    state.v[0][0] = 0.04;
    state.step = 3;
    Gradients g;
    g.accumulate(ParamId{0}, Tensor::vector({0.0}));
    const Tensor before = params[0].value;
    adam_step(params, g, state, 1e-4);
    CHECK(std::abs(state.m[0][0] - 0.18) < 1e-15);
    CHECK(std::abs(state.v[0][0] - 0.04 * 0.999) < 1e-15);
    // A nonzero m still moves w; what matters is that moments only decay.
    CHECK(params[0].value[0] < before[0]);
}

TEST_CASE("adam rejects a non-finite gradient naming the parameter") {
    std::vector<Parameter> params{{"encoder.x", ParamGroup::Encoder, Tensor::vector({0.0})}};
    AdamState state = AdamState::zeros_like(params);
    Gradients g;
    g.accumulate(ParamId{0}, Tensor::vector({std::nan("")}));
    CHECK_THROWS_WITH_AS(adam_step(params, g, state, 1e-4), doctest::Contains("encoder.x"), NumericError);
}

TEST_CASE("plateau_update examples") {
    const std::vector<double> trace{1.0, 0.9, 0.91, 0.92, 0.93, 0.94};
    PlateauScheduler s(4, 0.1, 1e-7);
    double lr = 1e-4;
    std::vector<double> lrs;
    for (double v : trace) lrs.push_back(lr = s.update(v, lr));
    CHECK(lrs == std::vector<double>{1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4 * 0.1});
    CHECK(plateau_update(trace, 1e-4, 4, 0.1, 1e-7) == 1e-4 * 0.1);

    const std::vector<double> falling{1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
    CHECK(plateau_update(falling, 1e-4, 4, 0.1, 1e-7) == 1e-4);

    const std::vector<double> flat{1.0, 1.0, 1.0, 1.0, 1.0};
    CHECK(plateau_update(flat, 1e-7, 4, 0.1, 1e-7) == 1e-7);
}

TEST_CASE("loss routing: phi=1 zeroes decoder gradients, phi=0 zeroes head gradients") {
    const Dataset ds = synth_generate(1, 16, Shift::None, 3);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const JointNetwork net = JointNetwork::build(small_arch(), seed);
        const Gradients g1 = sample_grads(net, ds.samples[0], 1.0);
        for (ParamId id : net.group(ParamGroup::Decoder)) CHECK(g1.at(id) == Tensor(g1.at(id).shape()));
        const Gradients g0 = sample_grads(net, ds.samples[1], 0.0);
        for (ParamId id : net.group(ParamGroup::ClassifierHead)) CHECK(g0.at(id) == Tensor(g0.at(id).shape()));
    }
}

TEST_CASE("loss is linear in phi, value and gradient") {
    const Dataset ds = synth_generate(1, 16, Shift::None, 4);
    const JointNetwork net = JointNetwork::build(small_arch(), 2);
    auto loss_at = [&](double phi) {
        Tape tape;
        return record_sample_loss(tape, net, ds.samples[2], phi, TrainMode::Joint).loss.value().item();
    };
    CHECK(std::abs(loss_at(0.5) - 0.5 * (loss_at(0.0) + loss_at(1.0))) <= 1e-12);

    const Gradients g0 = sample_grads(net, ds.samples[2], 0.0);
    const Gradients g1 = sample_grads(net, ds.samples[2], 1.0);
    const Gradients gq = sample_grads(net, ds.samples[2], 0.25);
    for (std::size_t p = 0; p < net.parameters().size(); ++p) {
        const ParamId id{p};
        for (std::size_t i = 0; i < gq.at(id).size(); ++i) {
            const double expect = 0.25 * g1.at(id)[i] + 0.75 * g0.at(id)[i];
            CHECK(std::abs(gq.at(id)[i] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("batch gradients do not depend on sample order") {
    const Dataset ds = synth_generate(2, 16, Shift::None, 5);
    const JointNetwork net = JointNetwork::build(small_arch(), 3);
    const std::vector<std::size_t> ab{1, 4}, ba{4, 1};
    const BatchGradients x = batch_gradients(net, ds, ab, 0.5, TrainMode::Joint);
    const BatchGradients y = batch_gradients(net, ds, ba, 0.5, TrainMode::Joint);
    for (std::size_t p = 0; p < net.parameters().size(); ++p) CHECK(bit_equal(x.grads.at(ParamId{p}), y.grads.at(ParamId{p})));
    CHECK(x.sum.total == y.sum.total);
}

TEST_CASE("backbone training never changes decoder parameters") {
    const Dataset tr = synth_generate(4, 16, Shift::None, 6);
    const Dataset va = synth_generate(2, 16, Shift::None, 7);
    JointNetwork net = JointNetwork::build(small_arch(), 4);
    const JointNetwork before = net;
    const TrainResult r = train(net, tr, va, quick_config(2), TrainMode::Backbone);
    for (ParamId id : net.group(ParamGroup::Decoder)) CHECK(bit_equal(net.parameter(id).value, before.parameter(id).value));
    bool encoder_moved = false;
    for (ParamId id : net.group(ParamGroup::Encoder))
        encoder_moved = encoder_moved || !(net.parameter(id).value == before.parameter(id).value);
    CHECK(encoder_moved);
    CHECK(r.log.size() == 2);
    for (const auto& row : r.log) CHECK(row.phi == 1.0);
}

TEST_CASE("two-class bright vs dark set reaches 100% training accuracy in 30 epochs") {
    ArchConfig a = small_arch();
    a.n_classes = 2;
    Dataset ds;
    ds.class_names = {"bright", "dark"};
    Rng rng(12);
    for (int i = 0; i < 64; ++i) {
        const int label = i % 2;
        Tensor img({3, 16, 16});
        for (double& v : img.data()) v = label == 0 ? rng.uniform(0.7, 1.0) : rng.uniform(0.0, 0.3);
        ds.samples.push_back({img, label, "img" + std::to_string(i)});
    }
    JointNetwork net = JointNetwork::build(a, 1);
    TrainConfig c;
    c.epochs = 30;
    train(net, ds, ds, c, TrainMode::Joint);
    int correct = 0;
    for (const auto& s : ds.samples) correct += predict_label(forward_backbone(net, s.image)) == s.label;
    CHECK(correct == 64);
}

TEST_CASE("training rejects bad inputs before the first step") {
    const Dataset tr = synth_generate(2, 16, Shift::None, 1);
    JointNetwork net = JointNetwork::build(small_arch(), 1);
    CHECK_THROWS_AS(train(net, tr, Dataset{}, quick_config(1), TrainMode::Joint), DataError);
    TrainConfig bad = quick_config(1);
    bad.phi = 1.5;
    CHECK_THROWS_WITH_AS(train(net, tr, tr, bad, TrainMode::Joint), doctest::Contains("[0, 1]"), ConfigError);
    ArchConfig two = small_arch();
    two.n_classes = 2;
    JointNetwork net2 = JointNetwork::build(two, 1);
    CHECK_THROWS_AS(train(net2, tr, tr, quick_config(1), TrainMode::Joint), DataError);
}

TEST_CASE("phi schedule switches phi at the given epoch") {
    TrainConfig c;
    c.phi_schedule = {{1, 0.5}, {3, 0.8}};
    CHECK(c.phi_at(1) == 0.5);
    CHECK(c.phi_at(2) == 0.5);
    CHECK(c.phi_at(3) == 0.8);
    CHECK(c.phi_at(30) == 0.8);
    TrainConfig none;
    CHECK(none.phi_at(5) == 0.5);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const Dataset tr = synth_generate(3, 16, Shift::None, 8);
    const Dataset va = synth_generate(2, 16, Shift::None, 9);
    JointNetwork a = JointNetwork::build(small_arch(), 5), b = JointNetwork::build(small_arch(), 5);
    const TrainResult ra = train(a, tr, va, quick_config(3), TrainMode::Joint);
    const TrainResult rb = train(b, tr, va, quick_config(3), TrainMode::Joint);
    CHECK(encode_checkpoint(ra.best) == encode_checkpoint(rb.best));
    REQUIRE(ra.log.size() == rb.log.size());
    for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(format_log_row(ra.log[i]) == format_log_row(rb.log[i]));
}

TEST_CASE("best checkpoint has the lowest validation loss") {
    const Dataset tr = synth_generate(3, 16, Shift::None, 10);
    const Dataset va = synth_generate(2, 16, Shift::None, 11);
    JointNetwork net = JointNetwork::build(small_arch(), 6);
    const TrainResult r = train(net, tr, va, quick_config(4), TrainMode::Joint);
    double best = r.log.front().val_loss;
    int best_epoch = r.log.front().epoch;
    for (const auto& row : r.log) {
        if (row.val_loss < best) {
            best = row.val_loss;
            best_epoch = row.epoch;
        }
    }
    CHECK(r.best.best_val_loss == best);
    CHECK(r.best.epoch == static_cast<std::uint32_t>(best_epoch));
}

TEST_CASE("stratified folds partition the dataset") {
    const Dataset ds = synth_generate(5, 16, Shift::None, 1);
    const auto folds = stratified_folds(ds, 5, 3);
    REQUIRE(folds.size() == 5);
    std::vector<int> hits(ds.size(), 0);
    for (const auto& f : folds) {
        CHECK(f.val.size() == 3);
        std::vector<int> per_class(3, 0);
        for (std::size_t i : f.val) {
            ++hits[i];
            ++per_class[static_cast<std::size_t>(ds.samples[i].label)];
        }
        CHECK(per_class == std::vector<int>{1, 1, 1});
        CHECK(f.train.size() + f.val.size() == ds.size());
        CHECK(std::is_sorted(f.train.begin(), f.train.end()));
    }
    for (int h : hits) CHECK(h == 1);

    const auto again = stratified_folds(ds, 5, 3);
    for (std::size_t k = 0; k < 5; ++k) CHECK(again[k].val == folds[k].val);
}

TEST_CASE("ten samples in five folds give two per validation split") {
    Dataset ds;
    ds.class_names = {"a", "b"};
    for (int i = 0; i < 10; ++i) ds.samples.push_back({Tensor({1, 2, 2}), i % 2, std::to_string(i)});
    std::vector<int> hits(10, 0);
    for (const auto& f : stratified_folds(ds, 5, 1)) {
        CHECK(f.val.size() == 2);
        for (std::size_t i : f.val) ++hits[i];
    }
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("stratified folds reject a class smaller than the fold count") {
    Dataset ds = synth_generate(5, 16, Shift::None, 1);
    ds.samples.pop_back();
    CHECK_THROWS_WITH_AS(stratified_folds(ds, 5, 1), doctest::Contains("NORMAL"), DataError);
}

TEST_CASE("kfold_train picks the best fold by accuracy then loss") {
    const Dataset ds = synth_generate(3, 16, Shift::None, 12);
    TrainConfig c = quick_config(1);
    c.folds = 3;
    const KFoldResult r = kfold_train(ds, small_arch(), c, TrainMode::Joint);
    REQUIRE(r.folds.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(r.folds[f].best.config.train.seed == c.seed + f);
        const auto& best = r.folds[r.best_fold];
        CHECK(best.best_val_accuracy >= r.folds[f].best_val_accuracy);
    }
}

TEST_CASE("config parsing") {
    CHECK(parse_config_text("phi = 0.5\n").train.phi == 0.5);
    CHECK(parse_config_text("") == RunConfig{});
    CHECK_THROWS_WITH_AS(parse_config_text("phi = two\n"), doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("# c\nbogus = 1\n"), doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("lr = 1\nlr = 2\n"), doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("phi = 1.5\n"), ConfigError);

    const RunConfig c = parse_config_text(
        "n_stages = 3\ninput_size = 64\ninput_channels = 1\nbase_channels = 4\nn_classes = 4\nphi = 0.25\n"
        "lr = 0.001 # comment\nkappa = 0.5\npatience = 2\nepochs = 7\nbatch_size = 8\nfolds = 3\nseed = 99\n"
        "mode = backbone\nphi_schedule = 1:0.5,10:0.8\n");
    CHECK(c.arch.n_stages == 3);
    CHECK(c.arch.input_channels == 1);
    CHECK(c.train.lr == 0.001);
    CHECK(c.train.seed == 99);
    CHECK(c.mode == TrainMode::Backbone);
    CHECK(c.train.phi_schedule.size() == 2);
    CHECK(parse_config_text(format_config(c)) == c);
}

TEST_CASE("config defaults match the reference hyper-parameters") {
    const RunConfig c;
    CHECK(c.train.phi == 0.5);
    CHECK(c.train.lr == 1e-4);
    CHECK(c.train.kappa == 0.1);
    CHECK(c.train.patience == 4);
    CHECK(c.train.epochs == 30);
    CHECK(c.train.batch_size == 4);
    CHECK(c.train.folds == 5);
    CHECK(c.mode == TrainMode::Joint);
}

TEST_CASE("checkpoint round trip is byte-identical and bit-exact") {
    const Dataset tr = synth_generate(2, 16, Shift::None, 13);
    JointNetwork net = JointNetwork::build(small_arch(), 7);
    const TrainResult r = train(net, tr, tr, quick_config(2), TrainMode::Joint);
    TempDir dir("ckpt");
    save_checkpoint(r.best, dir / "a.ckpt");
    const Checkpoint loaded = load_checkpoint(dir / "a.ckpt");
    CHECK(loaded == r.best);
    save_checkpoint(loaded, dir / "b.ckpt");
    CHECK(encode_checkpoint(loaded) == encode_checkpoint(r.best));

    const JointNetwork restored = restore_network(loaded);
    JointNetwork direct = JointNetwork::build(small_arch(), 7);
    for (const auto& p : r.best.params) direct.parameter(*direct.find(p.name)).value = p.value;
    for (const auto& s : tr.samples) CHECK(bit_equal(forward_backbone(restored, s.image), forward_backbone(direct, s.image)));
}

TEST_CASE("resuming for zero epochs reproduces the saved evaluation") {
    const Dataset tr = synth_generate(2, 16, Shift::None, 14);
    JointNetwork net = JointNetwork::build(small_arch(), 8);
    const TrainResult r = train(net, tr, tr, quick_config(2), TrainMode::Joint);
    JointNetwork restored = restore_network(decode_checkpoint(encode_checkpoint(r.best)));
    TrainConfig zero = r.best.config.train;
    zero.epochs = 0;
    TrainOptions opts;
    opts.initial_optimizer = &r.best.optimizer;
    const TrainResult again = train(restored, tr, tr, zero, TrainMode::Joint, opts);
    CHECK(again.best.best_val_loss == r.best.best_val_loss);
    CHECK(again.best_val_accuracy == r.best_val_accuracy);
}

TEST_CASE("corrupted checkpoints are rejected with an offset") {
    const JointNetwork net = JointNetwork::build(small_arch(), 1);
    const Checkpoint c = make_checkpoint(net, TrainConfig{}, TrainMode::Joint, AdamState::zeros_like(net.parameters()), 0, 1.0);
    const auto good = encode_checkpoint(c);
    CHECK(decode_checkpoint(good) == c);

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_checkpoint(bad_magic), doctest::Contains("offset 4: bad magic"), FormatError);

    auto bad_version = good;
    bad_version[4] = 9;
    CHECK_THROWS_WITH_AS(decode_checkpoint(bad_version), doctest::Contains("version"), FormatError);

    const std::vector<std::uint8_t> truncated(good.begin(), good.end() - 5);
    CHECK_THROWS_WITH_AS(decode_checkpoint(truncated), doctest::Contains("truncated"), FormatError);

    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_WITH_AS(decode_checkpoint(trailing), doctest::Contains("trailing"), FormatError);

    CHECK_THROWS_AS(decode_checkpoint(std::vector<std::uint8_t>{}), FormatError);
}

TEST_CASE("log rows carry all eight columns") {
    const EpochLog row{3, 0.5, 0.75, 0.25, 0.6, 0.9, 1e-4, 0.5};
    const std::string s = format_log_row(row);
    CHECK(std::count(s.begin(), s.end(), ',') == 7);
    CHECK(s.rfind("3,0.5,0.75,0.25,0.6,", 0) == 0);
}
