#include "jan/gradcheck_suite.hpp"

#include <cmath>

#include "jan/joint_net.hpp"
#include "jan/losses.hpp"
#include "jan/ops.hpp"
#include "jan/rng.hpp"

namespace jan {

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

// Values in [-1,-0.1] U [0.1,1] so ReLU never sees a kink within the step.
Tensor away_from_zero(Rng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        const double m = rng.uniform(0.1, 1.0);
        v = rng.uniform() < 0.5 ? -m : m;
    }
    return t;
}

// sum(w * x) with a fixed random w, turning any tensor into a scalar loss.
Var readout(Tape& tape, Var x, Rng& rng) {
    return sum(mul(x, tape.constant(random_tensor(rng, x.shape()))));
}

} // namespace

std::vector<GradcheckCase> reference_gradchecks(std::uint64_t seed, double tolerance) {
    std::vector<GradcheckCase> out;
    Rng rng(seed);
    auto run = [&](std::string name, std::vector<NamedTensor> params, auto body) {
        const std::uint64_t readout_seed = rng.next();
        LossGraph graph = [&, readout_seed](Tape& tape, std::span<const Var> p) {
            Rng local(readout_seed);
            return body(tape, p, local);
        };
        out.push_back({std::move(name), gradcheck(graph, std::move(params), tolerance)});
    };

    for (auto [label, stride, padding] : {std::tuple{"conv2d same", 1, Padding::Same},
                                          std::tuple{"conv2d valid", 1, Padding::Valid},
                                          std::tuple{"conv2d stride2", 2, Padding::Same}}) {
        run(label,
            {{"input", random_tensor(rng, {2, 6, 5})},
             {"kernel", random_tensor(rng, {3, 2, 3, 3})},
             {"bias", random_tensor(rng, {3})}},
            [stride, padding](Tape& t, std::span<const Var> p, Rng& r) {
                return readout(t, conv2d(p[0], p[1], p[2], static_cast<std::size_t>(stride), padding), r);
            });
    }
    run("maxpool2x2", {{"input", random_tensor(rng, {2, 4, 6})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, maxpool2x2(p[0]), r); });
    run("upsample2x2", {{"input", random_tensor(rng, {2, 3, 3})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, upsample2x2(p[0]), r); });
    run("dense",
        {{"input", random_tensor(rng, {5})}, {"weights", random_tensor(rng, {3, 5})}, {"bias", random_tensor(rng, {3})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, dense(p[0], p[1], p[2]), r); });
    run("relu", {{"input", away_from_zero(rng, {2, 3, 3})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, relu(p[0]), r); });
    run("sigmoid", {{"input", random_tensor(rng, {2, 3, 3}, -4.0, 4.0)}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, sigmoid(p[0]), r); });
    run("softmax", {{"input", random_tensor(rng, {4}, -3.0, 3.0)}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, softmax(p[0]), r); });
    run("global_avg_pool", {{"input", random_tensor(rng, {3, 4, 4})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, global_avg_pool(p[0]), r); });
    run("add", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, add(p[0], p[1]), r); });
    run("mul", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, mul(p[0], p[1]), r); });
    run("scale", {{"a", random_tensor(rng, {2, 3})}},
        [](Tape& t, std::span<const Var> p, Rng& r) { return readout(t, scale(p[0], -0.7), r); });
    run("sum", {{"a", random_tensor(rng, {2, 3})}},
        [](Tape&, std::span<const Var> p, Rng&) { return sum(p[0]); });
    run("cross_entropy", {{"logits", random_tensor(rng, {3}, -2.0, 2.0)}},
        [](Tape& t, std::span<const Var> p, Rng&) {
            return cross_entropy(t.constant(one_hot(1, 3)), softmax(p[0]));
        });
    run("mse", {{"predicted", random_tensor(rng, {2, 3, 3}, 0.0, 1.0)}},
        [target = random_tensor(rng, {2, 3, 3}, 0.0, 1.0)](Tape& t, std::span<const Var> p, Rng&) {
            return mse(t.constant(target), p[0]);
        });
    run("combined_loss", {{"logits", random_tensor(rng, {3}, -2.0, 2.0)}, {"predicted", random_tensor(rng, {4}, 0.0, 1.0)}},
        [target = random_tensor(rng, {4}, 0.0, 1.0)](Tape& t, std::span<const Var> p, Rng&) {
            Var ls = cross_entropy(t.constant(one_hot(2, 3)), softmax(p[0]));
            return combined_loss(ls, mse(t.constant(target), p[1]), 0.5);
        });

    ArchConfig arch;
    arch.n_stages = 2;
    arch.input_size = 16;
    arch.base_channels = 4;
    const JointNetwork net = JointNetwork::build(arch, seed);
    const Tensor image = random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.n_classes)));
    std::vector<NamedTensor> params;
    for (const auto& p : net.parameters()) params.push_back({p.name, p.value});
    run("joint network", std::move(params), [&net, &image, label](Tape& t, std::span<const Var> p, Rng&) {
        Var x = t.constant(image);
        const JointGraph g = record_joint(net, x, p);
        Var ls = cross_entropy(t.constant(one_hot(label, net.config().n_classes)), g.class_probs);
        return combined_loss(ls, mse(x, g.reconstruction), 0.5);
    });
    return out;
}

} // namespace jan
