#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

#include "jan/tensor.hpp"

namespace jan {

/// Index of a trainable tensor in a parameter store.
struct ParamId {
    std::size_t index = 0;
    friend auto operator<=>(ParamId, ParamId) = default;
};

enum class Padding { Same, Valid };

enum class OpKind {
    Constant,
    Parameter,
    Conv2d,
    MaxPool2x2,
    Upsample2x2,
    Dense,
    Relu,
    Sigmoid,
    Softmax,
    GlobalAvgPool,
    Add,
    Mul,
    Scale,
    Sum,
    CrossEntropy,
    Mse,
};

const char* op_name(OpKind kind) noexcept;

/// dLoss/dParam for every parameter that was registered on a tape.
class Gradients {
public:
    bool contains(ParamId id) const noexcept;
    Tensor& at(ParamId id);
    const Tensor& at(ParamId id) const;
    std::size_t capacity() const noexcept { return grads_.size(); }

    /// Inserts `g` or adds it element-wise to an existing entry.
    void accumulate(ParamId id, const Tensor& g);

private:
    std::vector<Tensor> grads_;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Saved forward state a node needs for its backward pass.
struct NodeState {
    std::vector<std::size_t> indices; // maxpool argmax positions
    std::size_t stride = 1;
    std::size_t pad_top = 0;
    std::size_t pad_left = 0;
    double factor = 0.0; // Scale
};

struct Node {
    OpKind kind = OpKind::Constant;
    std::vector<std::size_t> inputs;
    Tensor value;
    bool requires_grad = false;
    std::optional<ParamId> param;
    NodeState state;
};

/// Reverse-mode record. Nodes are appended in execution order, so every
/// node's inputs precede it. Not copyable: Vars point back into the tape.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var parameter(ParamId id, Tensor value);

    /// Appends a primitive's output. Inputs must already be on this tape.
    Var record(OpKind kind, std::vector<Var> inputs, Tensor value, NodeState state = {});

    const Node& node(std::size_t id) const { return nodes_.at(id); }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Reverse traversal from a scalar seed. Every registered parameter gets an
    /// entry; unreachable ones get exact zeros.
    Gradients backward(Var seed) const;

private:
    std::vector<Node> nodes_;
};

} // namespace jan
