#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "jan/joint_net.hpp"
#include "jan/train_config.hpp"

namespace jan {

/// Everything needed to reproduce a run: architecture, optimisation, mode.
struct RunConfig {
    ArchConfig arch;
    TrainConfig train;
    TrainMode mode = TrainMode::Joint;

    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Splits `key = value` lines. '#' starts a comment; blank lines are skipped.
/// Duplicate keys and lines without '=' are rejected with their line number.
std::vector<ConfigEntry> parse_key_values(std::string_view text, std::string_view origin);

/// Recognised keys, in the order format_config writes them.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form. Throws ConfigError on unknown keys or
/// unparsable values (the message carries `where`, e.g. "line 3").
void apply_setting(RunConfig& config, std::string_view key, std::string_view value, const std::string& where);

/// Typed, validated config; keys not present keep their defaults.
RunConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// One `key = value` line per key, in config_keys() order. Doubles use the
/// shortest representation that round-trips exactly.
std::string format_config(const RunConfig& config);

/// Shortest round-trip text for a double.
std::string format_double(double v);

} // namespace jan
