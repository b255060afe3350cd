#include "jan/tape.hpp"

#include <string>

#include "backprop.hpp"
#include "jan/error.hpp"

namespace jan {

const char* op_name(OpKind kind) noexcept {
    switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Parameter: return "parameter";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::MaxPool2x2: return "maxpool2x2";
    case OpKind::Upsample2x2: return "upsample2x2";
    case OpKind::Dense: return "dense";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Softmax: return "softmax";
    case OpKind::GlobalAvgPool: return "global_avg_pool";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Sum: return "sum";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::Mse: return "mse";
    }
    return "unknown";
}

bool Gradients::contains(ParamId id) const noexcept {
    return id.index < grads_.size() && grads_[id.index].size() > 0;
}

Tensor& Gradients::at(ParamId id) {
    if (!contains(id)) throw Error("no gradient for parameter " + std::to_string(id.index));
    return grads_[id.index];
}

const Tensor& Gradients::at(ParamId id) const {
    if (!contains(id)) throw Error("no gradient for parameter " + std::to_string(id.index));
    return grads_[id.index];
}

void Gradients::accumulate(ParamId id, const Tensor& g) {
    if (id.index >= grads_.size()) grads_.resize(id.index + 1);
    Tensor& slot = grads_[id.index];
    if (slot.size() == 0) {
        slot = g;
        return;
    }
    if (slot.shape() != g.shape()) {
        throw ShapeError("gradient shape " + shape_string(g.shape()) + " conflicts with " +
                         shape_string(slot.shape()) + " for parameter " + std::to_string(id.index));
    }
    auto dst = slot.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

const Tensor& Var::value() const {
    if (!tape_) throw Error("use of an unbound Var");
    return tape_->node(id_).value;
}

Var Tape::constant(Tensor value) {
    require_finite(value, "constant");
    Node n;
    n.kind = OpKind::Constant;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParamId id, Tensor value) {
    require_finite(value, "parameter " + std::to_string(id.index));
    Node n;
    n.kind = OpKind::Parameter;
    n.value = std::move(value);
    n.requires_grad = true;
    n.param = id;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind kind, std::vector<Var> inputs, Tensor value, NodeState state) {
    Node n;
    n.kind = kind;
    n.inputs.reserve(inputs.size());
    for (const Var& v : inputs) {
        if (&v.tape() != this) throw Error(std::string(op_name(kind)) + ": input belongs to another tape");
        n.inputs.push_back(v.id());
        n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    }
    require_finite(value, op_name(kind));
    n.value = std::move(value);
    n.state = std::move(state);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var seed) const {
    if (&seed.tape() != this) throw Error("backward: seed belongs to another tape");
    const Node& root = nodes_.at(seed.id());
    if (root.value.size() != 1) {
        throw ShapeError("backward: seed must be a scalar, got shape " + shape_string(root.value.shape()));
    }

    std::vector<Tensor> grads(seed.id() + 1);
    grads[seed.id()] = Tensor(root.value.shape(), 1.0);

    std::vector<Tensor*> slots;
    for (std::size_t i = seed.id() + 1; i-- > 0;) {
        const Node& n = nodes_[i];
        if (grads[i].size() == 0 || !n.requires_grad || n.inputs.empty()) continue;
        require_finite(grads[i], std::string("gradient of ") + op_name(n.kind) + " node " + std::to_string(i));
        slots.assign(n.inputs.size(), nullptr);
        for (std::size_t s = 0; s < n.inputs.size(); ++s) {
            std::size_t in = n.inputs[s];
            if (!nodes_[in].requires_grad) continue;
            if (grads[in].size() == 0) grads[in] = Tensor(nodes_[in].value.shape(), 0.0);
            slots[s] = &grads[in];
        }
        detail::backprop(*this, n, grads[i], slots);
        // Intermediate gradients are dead once propagated.
        grads[i] = Tensor();
    }

    Gradients out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.kind != OpKind::Parameter) continue;
        if (i < grads.size() && grads[i].size() > 0) {
            require_finite(grads[i], "gradient of parameter " + std::to_string(n.param->index));
            out.accumulate(*n.param, grads[i]);
        } else {
            out.accumulate(*n.param, Tensor(n.value.shape(), 0.0));
        }
    }
    return out;
}

} // namespace jan
