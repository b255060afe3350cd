#include "jan/joint_net.hpp"

#include <algorithm>
#include <cmath>

#include "jan/error.hpp"
#include "jan/ops.hpp"
#include "jan/rng.hpp"

namespace jan {

void ArchConfig::validate() const {
    if (n_stages < 1) throw ConfigError("n_stages must be >= 1, got " + std::to_string(n_stages));
    if (n_classes < 2) throw ConfigError("n_classes must be >= 2, got " + std::to_string(n_classes));
    if (input_channels < 1) throw ConfigError("input_channels must be >= 1, got " + std::to_string(input_channels));
    if (base_channels < 1) throw ConfigError("base_channels must be >= 1, got " + std::to_string(base_channels));
    if (input_size < 1) throw ConfigError("input_size must be >= 1, got " + std::to_string(input_size));
    if (n_stages > 20) throw ConfigError("n_stages must be <= 20, got " + std::to_string(n_stages));
    const long divisor = 1L << (n_stages + 1);
    if (input_size % divisor != 0) {
        throw ConfigError("input_size must be divisible by 2^(n_stages+1) = " + std::to_string(divisor) + ", got " +
                          std::to_string(input_size));
    }
}

std::size_t ArchConfig::stage_channels(int stage) const {
    return static_cast<std::size_t>(base_channels) << (stage - 1);
}

std::size_t ArchConfig::stage_size(int stage) const {
    return static_cast<std::size_t>(input_size) >> (stage - 1);
}

const char* group_name(ParamGroup group) noexcept {
    switch (group) {
    case ParamGroup::Encoder: return "encoder";
    case ParamGroup::ClassifierHead: return "classifier_head";
    case ParamGroup::Decoder: return "decoder";
    }
    return "unknown";
}

ParamId JointNetwork::add(std::string name, ParamGroup group, Tensor value) {
    params_.push_back(Parameter{std::move(name), group, std::move(value)});
    return ParamId{params_.size() - 1};
}

JointNetwork JointNetwork::build(const ArchConfig& config, std::uint64_t seed) {
    config.validate();
    JointNetwork net;
    net.config_ = config;
    Rng rng(seed);

    auto conv = [&](const std::string& prefix, ParamGroup group, std::size_t cin, std::size_t cout,
                    std::size_t k) -> ConvParams {
        const double limit = std::sqrt(6.0 / static_cast<double>(cin * k * k));
        Tensor w(Shape{cout, cin, k, k});
        for (double& v : w.data()) v = rng.uniform(-limit, limit);
        ConvParams p;
        p.weight = net.add(prefix + ".weight", group, std::move(w));
        p.bias = net.add(prefix + ".bias", group, Tensor(Shape{cout}, 0.0));
        return p;
    };

    const int n = config.n_stages;
    std::size_t cin = static_cast<std::size_t>(config.input_channels);
    for (int k = 1; k <= n; ++k) {
        const std::size_t c = config.stage_channels(k);
        const std::string prefix = "encoder.stage" + std::to_string(k);
        ConvParams a = conv(prefix + ".conv1", ParamGroup::Encoder, cin, c, 3);
        ConvParams b = conv(prefix + ".conv2", ParamGroup::Encoder, c, c, 3);
        net.stages_.emplace_back(a, b);
        cin = c;
    }
    const std::size_t depth = config.decoder_channels();
    net.bottleneck_ = conv("encoder.bottleneck", ParamGroup::Encoder, depth, depth, 3);

    {
        const std::size_t k = static_cast<std::size_t>(config.n_classes);
        const double limit = std::sqrt(6.0 / static_cast<double>(depth));
        Tensor w(Shape{k, depth});
        for (double& v : w.data()) v = rng.uniform(-limit, limit);
        net.head_.weight = net.add("head.dense.weight", ParamGroup::ClassifierHead, std::move(w));
        net.head_.bias = net.add("head.dense.bias", ParamGroup::ClassifierHead, Tensor(Shape{k}, 0.0));
    }

    // C_i pairs with S_{n+1-i}.
    for (int i = 1; i <= n; ++i) {
        const std::size_t skip_depth = config.stage_channels(n + 1 - i);
        net.skips_.push_back(conv("decoder.skip" + std::to_string(i), ParamGroup::Decoder, skip_depth, depth, 3));
    }
    net.recon_ = conv("decoder.reconstruction", ParamGroup::Decoder, depth,
                      static_cast<std::size_t>(config.input_channels), 1);
    return net;
}

std::optional<ParamId> JointNetwork::find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return ParamId{i};
    }
    return std::nullopt;
}

std::size_t JointNetwork::weight_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::vector<ParamId> JointNetwork::group(ParamGroup g) const {
    std::vector<ParamId> out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].group == g) out.push_back(ParamId{i});
    }
    return out;
}

namespace {

struct Registered {
    std::vector<Var> vars; // indexed by ParamId; unregistered entries invalid
    Var operator[](ParamId id) const { return vars[id.index]; }
};

Registered register_params(Tape& tape, const JointNetwork& net, bool with_decoder) {
    Registered r;
    auto params = net.parameters();
    r.vars.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!with_decoder && params[i].group == ParamGroup::Decoder) continue;
        r.vars[i] = tape.parameter(ParamId{i}, params[i].value);
    }
    return r;
}

Var conv_same(Var x, const Registered& r, const ConvParams& p) {
    return conv2d(x, r[p.weight], r[p.bias], 1, Padding::Same);
}

JointGraph record(const Registered& r, const JointNetwork& net, Var image, bool with_decoder) {
    JointGraph g;
    Var x = image;
    for (std::size_t k = 0; k < net.stages().size(); ++k) {
        if (k > 0) x = maxpool2x2(x);
        x = relu(conv_same(x, r, net.stages()[k].first));
        x = relu(conv_same(x, r, net.stages()[k].second));
        g.skips.push_back(x);
    }
    g.bottleneck = relu(conv_same(maxpool2x2(x), r, net.bottleneck()));

    Var pooled = global_avg_pool(maxpool2x2(g.bottleneck));
    g.logits = dense(pooled, r[net.head().weight], r[net.head().bias]);
    g.class_probs = softmax(g.logits);

    if (!with_decoder) return g;

    const int n = net.config().n_stages;
    Var state = g.bottleneck;
    for (int i = 1; i <= n; ++i) {
        Var skip = conv_same(g.skips[static_cast<std::size_t>(n - i)], r, net.skip(i));
        Var up = upsample2x2(state);
        if (skip.shape() != up.shape()) {
            throw ShapeError("fusion step " + std::to_string(i) + ": C_" + std::to_string(i) + " output " +
                             shape_string(skip.shape()) + " vs upsampled " + shape_string(up.shape()));
        }
        state = add(skip, up);
        g.attention.push_back(state);
    }
    g.reconstruction = sigmoid(conv_same(state, r, net.reconstruction_head()));
    return g;
}

} // namespace

JointGraph record_joint(Tape& tape, const JointNetwork& net, Var image) {
    check_image(net, image.value());
    return record(register_params(tape, net, true), net, image, true);
}

JointGraph record_joint(const JointNetwork& net, Var image, std::span<const Var> params) {
    check_image(net, image.value());
    if (params.size() != net.parameters().size()) {
        throw ShapeError("record_joint: " + std::to_string(params.size()) + " parameter handles for " +
                         std::to_string(net.parameters().size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape() != net.parameters()[i].value.shape()) {
            throw ShapeError("record_joint: handle for " + net.parameters()[i].name + " has shape " +
                             shape_string(params[i].shape()));
        }
    }
    return record(Registered{std::vector<Var>(params.begin(), params.end())}, net, image, true);
}

JointGraph record_backbone(Tape& tape, const JointNetwork& net, Var image) {
    check_image(net, image.value());
    return record(register_params(tape, net, false), net, image, false);
}

void check_image(const JointNetwork& net, const Tensor& image) {
    const auto& c = net.config();
    const Shape expected{static_cast<std::size_t>(c.input_channels), static_cast<std::size_t>(c.input_size),
                         static_cast<std::size_t>(c.input_size)};
    if (image.shape() != expected) {
        throw ShapeError("image shape " + shape_string(image.shape()) + " does not match network input " +
                         shape_string(expected));
    }
    for (double v : image.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("image pixel outside [0,1]: " + std::to_string(v));
    }
}

JointOutput forward_joint(const JointNetwork& net, const Tensor& image) {
    Tape tape;
    JointGraph g = record_joint(tape, net, tape.constant(image));
    JointOutput out;
    out.class_probs = g.class_probs.value();
    out.reconstruction = g.reconstruction.value();
    for (const Var& a : g.attention) out.attention_maps.push_back(a.value());
    return out;
}

Tensor forward_backbone(const JointNetwork& net, const Tensor& image) {
    Tape tape;
    return record_backbone(tape, net, tape.constant(image)).class_probs.value();
}

Tensor extract_attention(const JointOutput& output, int stage) {
    const int n = static_cast<int>(output.attention_maps.size());
    if (stage < 1 || stage > n) {
        throw ShapeError("attention stage " + std::to_string(stage) + " out of range 1.." + std::to_string(n));
    }
    const Tensor& x = output.attention_maps[static_cast<std::size_t>(stage - 1)];
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor m(Shape{1, h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < h * w; ++i) m[i] += x[ch * h * w + i];
    for (double& v : m.data()) v /= static_cast<double>(c);
    const auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
    const double mn = *lo, range = *hi - *lo;
    if (!(range > 0.0)) return Tensor(m.shape(), 0.0);
    for (double& v : m.data()) v = (v - mn) / range;
    return m;
}

} // namespace jan
