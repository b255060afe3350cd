#include "jan/run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "jan/error.hpp"

namespace jan {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, const std::string& where) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError(where + ": " + std::string(key) + ": cannot parse '" + std::string(text) + "'");
    }
    return value;
}

int parse_int(std::string_view key, std::string_view text, const std::string& where) {
    return parse_number<int>(key, text, where);
}

double parse_real(std::string_view key, std::string_view text, const std::string& where) {
    return parse_number<double>(key, text, where);
}

std::vector<std::pair<int, double>> parse_schedule(std::string_view text, const std::string& where) {
    std::vector<std::pair<int, double>> out;
    if (trim(text).empty()) return out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        std::string_view item = trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
        auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ConfigError(where + ": phi_schedule: expected epoch:phi, got '" + std::string(item) + "'");
        }
        out.emplace_back(parse_int("phi_schedule", trim(item.substr(0, colon)), where),
                         parse_real("phi_schedule", trim(item.substr(colon + 1)), where));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

void RunConfig::validate() const {
    arch.validate();
    train.validate();
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<ConfigEntry> parse_key_values(std::string_view text, std::string_view origin) {
    std::vector<ConfigEntry> out;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = std::string(origin) + ": line " + std::to_string(line_no);
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
        out.push_back(ConfigEntry{std::move(key), std::move(value), line_no});
    }
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "n_stages", "input_size", "input_channels", "base_channels", "n_classes", "phi",          "lr",
        "kappa",    "patience",   "epochs",         "batch_size",    "folds",     "seed",         "mode",
        "lr_floor", "phi_schedule"};
    return keys;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value, const std::string& where) {
    if (key == "n_stages") c.arch.n_stages = parse_int(key, value, where);
    else if (key == "input_size") c.arch.input_size = parse_int(key, value, where);
    else if (key == "input_channels") c.arch.input_channels = parse_int(key, value, where);
    else if (key == "base_channels") c.arch.base_channels = parse_int(key, value, where);
    else if (key == "n_classes") c.arch.n_classes = parse_int(key, value, where);
    else if (key == "phi") c.train.phi = parse_real(key, value, where);
    else if (key == "lr") c.train.lr = parse_real(key, value, where);
    else if (key == "kappa") c.train.kappa = parse_real(key, value, where);
    else if (key == "patience") c.train.patience = parse_int(key, value, where);
    else if (key == "epochs") c.train.epochs = parse_int(key, value, where);
    else if (key == "batch_size") c.train.batch_size = parse_int(key, value, where);
    else if (key == "folds") c.train.folds = parse_int(key, value, where);
    else if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, value, where);
    else if (key == "lr_floor") c.train.lr_floor = parse_real(key, value, where);
    else if (key == "phi_schedule") c.train.phi_schedule = parse_schedule(value, where);
    else if (key == "mode") {
        if (value == "joint") c.mode = TrainMode::Joint;
        else if (value == "backbone") c.mode = TrainMode::Backbone;
        else throw ConfigError(where + ": mode: expected joint or backbone, got '" + std::string(value) + "'");
    } else {
        throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    }
}

RunConfig parse_config_text(std::string_view text, std::string_view origin) {
    RunConfig config;
    for (const auto& e : parse_key_values(text, origin)) {
        const std::string where = std::string(origin) + ": line " + std::to_string(e.line);
        apply_setting(config, e.key, e.value, where);
    }
    config.validate();
    return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    os << "n_stages = " << c.arch.n_stages << '\n'
       << "input_size = " << c.arch.input_size << '\n'
       << "input_channels = " << c.arch.input_channels << '\n'
       << "base_channels = " << c.arch.base_channels << '\n'
       << "n_classes = " << c.arch.n_classes << '\n'
       << "phi = " << format_double(c.train.phi) << '\n'
       << "lr = " << format_double(c.train.lr) << '\n'
       << "kappa = " << format_double(c.train.kappa) << '\n'
       << "patience = " << c.train.patience << '\n'
       << "epochs = " << c.train.epochs << '\n'
       << "batch_size = " << c.train.batch_size << '\n'
       << "folds = " << c.train.folds << '\n'
       << "seed = " << c.train.seed << '\n'
       << "mode = " << mode_name(c.mode) << '\n'
       << "lr_floor = " << format_double(c.train.lr_floor) << '\n'
       << "phi_schedule = ";
    for (std::size_t i = 0; i < c.train.phi_schedule.size(); ++i) {
        if (i) os << ',';
        os << c.train.phi_schedule[i].first << ':' << format_double(c.train.phi_schedule[i].second);
    }
    os << '\n';
    return os.str();
}

} // namespace jan
