#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jan/tape.hpp"
#include "jan/tensor.hpp"

namespace jan {

/// Geometry of a joint network. Stage k (1-based) runs at
/// input_size / 2^(k-1) with base_channels * 2^(k-1) channels.
struct ArchConfig {
    int n_stages = 2;
    int input_channels = 3;
    int input_size = 32;
    int base_channels = 8;
    int n_classes = 3;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;

    std::size_t stage_channels(int stage) const;
    std::size_t stage_size(int stage) const;
    /// Depth of the bottleneck, and therefore of every decoder tensor.
    std::size_t decoder_channels() const { return stage_channels(n_stages); }

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

enum class ParamGroup { Encoder, ClassifierHead, Decoder };

const char* group_name(ParamGroup group) noexcept;

struct Parameter {
    std::string name;
    ParamGroup group;
    Tensor value;
};

struct ConvParams {
    ParamId weight;
    ParamId bias;
};

/// Encoder stages + bottleneck + classifier head, with a reconstruction
/// decoder fused to the encoder through per-stage skip convolutions.
///
///   S_k  = relu(conv(relu(conv(pool(S_{k-1})))))       (S_0 pool skipped)
///   B    = relu(conv(pool(S_n)))                        bottleneck, X_0
///   X_i  = conv(C_i, S_{n+1-i}) + upsample2x2(X_{i-1})  i = 1..n
///   P'   = sigmoid(conv1x1(X_n))
///   Y'   = softmax(dense(gap(pool(B))))
class JointNetwork {
public:
    static JointNetwork build(const ArchConfig& config, std::uint64_t seed);

    const ArchConfig& config() const noexcept { return config_; }

    std::span<const Parameter> parameters() const noexcept { return params_; }
    std::span<Parameter> mutable_parameters() noexcept { return params_; }
    Parameter& parameter(ParamId id) { return params_.at(id.index); }
    const Parameter& parameter(ParamId id) const { return params_.at(id.index); }
    std::optional<ParamId> find(std::string_view name) const;

    /// Total number of scalar weights.
    std::size_t weight_count() const;
    std::vector<ParamId> group(ParamGroup g) const;

    const std::vector<std::pair<ConvParams, ConvParams>>& stages() const noexcept { return stages_; }
    const ConvParams& bottleneck() const noexcept { return bottleneck_; }
    const ConvParams& head() const noexcept { return head_; }
    /// skip(i) is C_i, 1-based.
    const ConvParams& skip(int i) const { return skips_.at(static_cast<std::size_t>(i - 1)); }
    const ConvParams& reconstruction_head() const noexcept { return recon_; }

private:
    JointNetwork() = default;
    ParamId add(std::string name, ParamGroup group, Tensor value);

    ArchConfig config_;
    std::vector<Parameter> params_;
    std::vector<std::pair<ConvParams, ConvParams>> stages_;
    ConvParams bottleneck_{};
    ConvParams head_{};
    std::vector<ConvParams> skips_;
    ConvParams recon_{};
};

/// Tape handles for one forward pass.
struct JointGraph {
    std::vector<Var> skips;     // S_1..S_n
    Var bottleneck;             // B == X_0
    Var logits;
    Var class_probs;
    std::vector<Var> attention; // X_1..X_n (empty in backbone mode)
    Var reconstruction;         // invalid in backbone mode
};

/// Registers every parameter on `tape` and records the full forward pass.
JointGraph record_joint(Tape& tape, const JointNetwork& net, Var image);

/// Records the full forward pass using caller-registered parameter handles,
/// one per net.parameters() entry in the same order.
JointGraph record_joint(const JointNetwork& net, Var image, std::span<const Var> params);

/// Registers only encoder and classifier-head parameters; no decoder nodes.
JointGraph record_backbone(Tape& tape, const JointNetwork& net, Var image);

struct JointOutput {
    Tensor class_probs;
    Tensor reconstruction;
    std::vector<Tensor> attention_maps;
};

/// Rejects images whose shape differs from the config or with values outside [0,1].
void check_image(const JointNetwork& net, const Tensor& image);

JointOutput forward_joint(const JointNetwork& net, const Tensor& image);
Tensor forward_backbone(const JointNetwork& net, const Tensor& image);

/// Channel mean of X_stage, min-max scaled to [0,1]; constant maps become zeros.
Tensor extract_attention(const JointOutput& output, int stage);

} // namespace jan
