#include "helpers.hpp"

#include <set>

#include "jan/error.hpp"
#include "jan/joint_net.hpp"
#include "jan/ops.hpp"
#include "jan/rng.hpp"

using namespace jan;
using jan::test::bit_equal;

namespace {

ArchConfig arch(int n, int size, int base = 8, int channels = 3, int classes = 3) {
    ArchConfig a;
    a.n_stages = n;
    a.input_size = size;
    a.base_channels = base;
    a.input_channels = channels;
    a.n_classes = classes;
    return a;
}

Tensor random_image(std::uint64_t seed, const ArchConfig& a) {
    Rng rng(seed);
    const auto s = static_cast<std::size_t>(a.input_size);
    Tensor t({static_cast<std::size_t>(a.input_channels), s, s});
    for (double& v : t.data()) v = rng.uniform();
    return t;
}

} // namespace

TEST_CASE("stage, bottleneck and classifier shapes for the default config") {
    const ArchConfig a = arch(2, 32);
    const JointNetwork net = JointNetwork::build(a, 1);
    Tape tape;
    const JointGraph g = record_joint(tape, net, tape.constant(random_image(1, a)));
    REQUIRE(g.skips.size() == 2);
    CHECK(g.skips[0].shape() == Shape{8, 32, 32});
    CHECK(g.skips[1].shape() == Shape{16, 16, 16});
    CHECK(g.bottleneck.shape() == Shape{16, 8, 8});
    CHECK(g.class_probs.shape() == Shape{3});
    CHECK(g.reconstruction.shape() == Shape{3, 32, 32});
}

TEST_CASE("skip convolutions map stage depth to bottleneck depth") {
    const JointNetwork net = JointNetwork::build(arch(2, 32), 1);
    CHECK(net.parameter(net.skip(1).weight).value.shape() == Shape{16, 16, 3, 3});
    CHECK(net.parameter(net.skip(2).weight).value.shape() == Shape{16, 8, 3, 3});
    Tape tape;
    const JointGraph g = record_joint(tape, net, tape.constant(random_image(2, net.config())));
    CHECK(g.attention[0].shape() == Shape{16, 16, 16});
    CHECK(g.attention[1].shape() == Shape{16, 32, 32});
}

TEST_CASE("build is deterministic per seed") {
    const JointNetwork a = JointNetwork::build(arch(2, 32), 7);
    const JointNetwork b = JointNetwork::build(arch(2, 32), 7);
    const JointNetwork c = JointNetwork::build(arch(2, 32), 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
        CHECK(a.parameters()[i].name == b.parameters()[i].name);
        CHECK(bit_equal(a.parameters()[i].value, b.parameters()[i].value));
        any_diff = any_diff || !(a.parameters()[i].value == c.parameters()[i].value);
    }
    CHECK(any_diff);
}

TEST_CASE("init is uniform within sqrt(6/fan_in) with zero biases") {
    const JointNetwork net = JointNetwork::build(arch(2, 32), 3);
    for (const auto& p : net.parameters()) {
        CAPTURE(p.name);
        if (p.value.rank() == 1) {
            CHECK(p.value == Tensor(p.value.shape()));
            continue;
        }
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < p.value.rank(); ++d) fan_in *= p.value.dim(d);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double v : p.value.data()) CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("invalid configs are rejected naming the constraint") {
    CHECK_THROWS_WITH_AS(JointNetwork::build(arch(3, 24), 1), doctest::Contains("divisible"), ConfigError);
    CHECK_THROWS_AS(JointNetwork::build(arch(0, 32), 1), ConfigError);
    CHECK_THROWS_AS(JointNetwork::build(arch(2, 32, 8, 3, 1), 1), ConfigError);
    CHECK_THROWS_AS(JointNetwork::build(arch(2, 32, 0), 1), ConfigError);
}

TEST_CASE("zero image with zeroed decoder reconstructs constant 0.5") {
    const ArchConfig a = arch(2, 16, 4);
    JointNetwork net = JointNetwork::build(a, 5);
    for (auto& p : net.mutable_parameters()) {
        if (p.group == ParamGroup::Decoder) p.value = Tensor(p.value.shape());
    }
    const JointOutput out = forward_joint(net, Tensor({3, 16, 16}));
    CHECK(out.reconstruction == Tensor({3, 16, 16}, 0.5));
}

TEST_CASE("attention sizes follow input / 2^(n-i) for every valid config") {
    for (int n : {1, 2, 3}) {
        for (int size : {16, 32, 64}) {
            if (size % (1 << (n + 1)) != 0) continue;
            const ArchConfig a = arch(n, size, 2, 1);
            const JointOutput out = forward_joint(JointNetwork::build(a, 1), random_image(3, a));
            REQUIRE(out.attention_maps.size() == static_cast<std::size_t>(n));
            for (int i = 1; i <= n; ++i) {
                const auto expect = static_cast<std::size_t>(size >> (n - i));
                CHECK(out.attention_maps[static_cast<std::size_t>(i - 1)].dim(1) == expect);
                CHECK(out.attention_maps[static_cast<std::size_t>(i - 1)].dim(2) == expect);
            }
            CHECK(out.reconstruction.shape() == Shape{1, static_cast<std::size_t>(size), static_cast<std::size_t>(size)});
        }
    }
}

TEST_CASE("backbone probabilities equal joint probabilities bit for bit") {
    const ArchConfig a = arch(2, 32);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const JointNetwork net = JointNetwork::build(a, seed);
        const Tensor img = random_image(seed + 10, a);
        const Tensor p = forward_backbone(net, img);
        CHECK(bit_equal(p, forward_joint(net, img).class_probs));
        CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("forward pass is deterministic") {
    const ArchConfig a = arch(2, 16, 4);
    const JointNetwork net = JointNetwork::build(a, 2);
    const Tensor img = random_image(4, a);
    const JointOutput x = forward_joint(net, img), y = forward_joint(net, img);
    CHECK(bit_equal(x.class_probs, y.class_probs));
    CHECK(bit_equal(x.reconstruction, y.reconstruction));
    for (std::size_t i = 0; i < x.attention_maps.size(); ++i) CHECK(bit_equal(x.attention_maps[i], y.attention_maps[i]));
}

TEST_CASE("parameters partition into encoder, head and decoder") {
    const JointNetwork net = JointNetwork::build(arch(3, 32, 4), 1);
    std::set<std::size_t> seen;
    std::size_t total = 0;
    for (ParamGroup g : {ParamGroup::Encoder, ParamGroup::ClassifierHead, ParamGroup::Decoder}) {
        const auto ids = net.group(g);
        CHECK_FALSE(ids.empty());
        for (ParamId id : ids) {
            CHECK(seen.insert(id.index).second);
            ++total;
        }
    }
    CHECK(total == net.parameters().size());
    CHECK(net.group(ParamGroup::ClassifierHead).size() == 2);
}

TEST_CASE("backbone recording registers no decoder parameters") {
    const JointNetwork net = JointNetwork::build(arch(2, 16, 4), 1);
    Tape tape;
    const JointGraph g = record_backbone(tape, net, tape.constant(random_image(1, net.config())));
    CHECK(g.attention.empty());
    CHECK_FALSE(g.reconstruction.valid());
    const Gradients grads = tape.backward(sum(g.logits));
    for (ParamId id : net.group(ParamGroup::Decoder)) CHECK_FALSE(grads.contains(id));
}

TEST_CASE("images of the wrong shape or range are rejected") {
    const JointNetwork net = JointNetwork::build(arch(2, 16, 4), 1);
    CHECK_THROWS_AS(forward_joint(net, Tensor({3, 32, 32})), ShapeError);
    CHECK_THROWS_AS(forward_joint(net, Tensor({1, 16, 16})), ShapeError);
    CHECK_THROWS_AS(forward_joint(net, Tensor({3, 16, 16}, 1.5)), DataError);
}

TEST_CASE("extract_attention examples") {
    JointOutput out;
    out.attention_maps.push_back(Tensor({1, 1, 3}, {0.2, 0.6, 1.0}));
    const Tensor m = extract_attention(out, 1);
    CHECK(m.shape() == Shape{1, 1, 3});
    CHECK(m[0] == 0.0);
    CHECK(std::abs(m[1] - 0.5) < 1e-15);
    CHECK(m[2] == 1.0);

    out.attention_maps[0] = Tensor({4, 2, 2}, 3.0);
    CHECK(extract_attention(out, 1) == Tensor({1, 2, 2}));

    out.attention_maps[0] = Tensor({2, 1, 2}, {0, 2, 2, 0});
    CHECK(extract_attention(out, 1) == Tensor({1, 1, 2}));

    CHECK_THROWS_AS(extract_attention(out, 0), ShapeError);
    CHECK_THROWS_AS(extract_attention(out, 2), ShapeError);
}
