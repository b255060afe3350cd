#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "jan/adam.hpp"
#include "jan/gradcheck.hpp"
#include "jan/joint_net.hpp"
#include "jan/run_config.hpp"

namespace jan {

/// Snapshot of a training run: resolved config, weights, optimizer state.
struct Checkpoint {
    RunConfig config;
    std::vector<NamedTensor> params;
    AdamState optimizer;
    std::uint32_t epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();

    friend bool operator==(const Checkpoint&, const Checkpoint&);
};

inline constexpr char kCheckpointMagic[4] = {'J', 'A', 'N', 'W'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

Checkpoint make_checkpoint(const JointNetwork& net, const TrainConfig& train, TrainMode mode, const AdamState& optimizer,
                           std::uint32_t epoch, double best_val_loss);

/// Rebuilds the network from the stored config and overwrites every weight.
JointNetwork restore_network(const Checkpoint& ckpt);

/// Layout (all integers little-endian):
///   "JANW" u8 version=1
///   u32 length + UTF-8 config text (key = value lines, plus epoch and best_val_loss)
///   u32 count, then per tensor: u16 name length + name, u8 rank, u32 dims, f64 values
///   u32 count of optimizer tensors (<name>.m, <name>.v per parameter), same records
///   u64 optimizer step
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& origin = "<checkpoint>");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace jan
