#include "jan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "jan/error.hpp"

namespace jan {

bool operator==(const Checkpoint& a, const Checkpoint& b) {
    if (!(a.config == b.config) || a.epoch != b.epoch || !(a.optimizer == b.optimizer)) return false;
    if (std::memcmp(&a.best_val_loss, &b.best_val_loss, sizeof(double)) != 0) return false;
    if (a.params.size() != b.params.size()) return false;
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        if (a.params[i].name != b.params[i].name || !(a.params[i].value == b.params[i].value)) return false;
    }
    return true;
}

Checkpoint make_checkpoint(const JointNetwork& net, const TrainConfig& train, TrainMode mode, const AdamState& optimizer,
                           std::uint32_t epoch, double best_val_loss) {
    Checkpoint c;
    c.config = RunConfig{net.config(), train, mode};
    for (const auto& p : net.parameters()) c.params.push_back(NamedTensor{p.name, p.value});
    c.optimizer = optimizer;
    c.epoch = epoch;
    c.best_val_loss = best_val_loss;
    return c;
}

JointNetwork restore_network(const Checkpoint& ckpt) {
    JointNetwork net = JointNetwork::build(ckpt.config.arch, ckpt.config.train.seed);
    if (ckpt.params.size() != net.parameters().size()) {
        throw FormatError("checkpoint has " + std::to_string(ckpt.params.size()) + " tensors, network expects " +
                          std::to_string(net.parameters().size()));
    }
    for (const auto& nt : ckpt.params) {
        auto id = net.find(nt.name);
        if (!id) throw FormatError("checkpoint tensor '" + nt.name + "' is not a network parameter");
        Parameter& p = net.parameter(*id);
        if (p.value.shape() != nt.value.shape()) {
            throw FormatError("checkpoint tensor '" + nt.name + "' has shape " + shape_string(nt.value.shape()) +
                              ", expected " + shape_string(p.value.shape()));
        }
        p.value = nt.value;
    }
    return net;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class Writer {
public:
    template <typename T>
    void put(T v) {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        out.insert(out.end(), raw, raw + sizeof(T));
    }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void record(const std::string& name, const Tensor& t) {
        if (name.size() > 0xFFFF) throw FormatError("tensor name too long: " + name);
        if (t.rank() > 0xFF) throw FormatError("tensor rank too large: " + name);
        put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
        bytes(name.data(), name.size());
        put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
        for (auto d : t.shape()) put<std::uint32_t>(static_cast<std::uint32_t>(d));
        for (double v : t.data()) put<double>(v);
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(origin_ + ": offset " + std::to_string(pos_) + ": " + what);
    }
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
    }
    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        T v;
        std::memcpy(&v, raw, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    NamedTensor record() {
        NamedTensor nt;
        const auto len = get<std::uint16_t>("tensor name length");
        nt.name = text(len, "tensor name");
        const auto rank = get<std::uint8_t>("tensor rank");
        Shape shape;
        std::size_t count = 1;
        for (std::uint8_t i = 0; i < rank; ++i) {
            const auto d = get<std::uint32_t>("tensor dimension");
            if (d == 0) fail("zero dimension in tensor '" + nt.name + "'");
            shape.push_back(d);
            count *= d;
            if (count > bytes_.size()) fail("tensor '" + nt.name + "' larger than the file");
        }
        need(count * sizeof(double), "tensor values");
        std::vector<double> data(count);
        for (auto& v : data) v = get<double>("tensor value");
        nt.value = Tensor(std::move(shape), std::move(data));
        return nt;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    const std::string& origin_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    if (c.optimizer.m.size() != c.params.size() || c.optimizer.v.size() != c.params.size()) {
        throw FormatError("optimizer state does not match parameter count");
    }
    Writer w;
    w.bytes(kCheckpointMagic, 4);
    w.put<std::uint8_t>(kCheckpointVersion);
    const std::string text = format_config(c.config) + "epoch = " + std::to_string(c.epoch) + "\n" +
                             "best_val_loss = " + format_double(c.best_val_loss) + "\n";
    w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
    w.bytes(text.data(), text.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.params.size()));
    for (const auto& p : c.params) w.record(p.name, p.value);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(2 * c.params.size()));
    for (std::size_t i = 0; i < c.params.size(); ++i) {
        w.record(c.params[i].name + ".m", c.optimizer.m[i]);
        w.record(c.params[i].name + ".v", c.optimizer.v[i]);
    }
    w.put<std::uint64_t>(c.optimizer.step);
    return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& origin) {
    Reader r(bytes, origin);
    const std::string magic = r.text(4, "magic");
    if (magic != std::string(kCheckpointMagic, 4)) r.fail("bad magic, expected JANW");
    const auto version = r.get<std::uint8_t>("version");
    if (version != kCheckpointVersion) {
        r.fail("unsupported version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
    }

    Checkpoint c;
    const auto text_len = r.get<std::uint32_t>("config length");
    const std::string text = r.text(text_len, "config text");
    try {
        RunConfig cfg;
        bool have_epoch = false, have_best = false;
        for (const auto& e : parse_key_values(text, origin + " config")) {
            const std::string where = origin + " config: line " + std::to_string(e.line);
            if (e.key == "epoch") {
                c.epoch = static_cast<std::uint32_t>(std::stoul(e.value));
                have_epoch = true;
            } else if (e.key == "best_val_loss") {
                c.best_val_loss = std::stod(e.value);
                have_best = true;
            } else {
                apply_setting(cfg, e.key, e.value, where);
            }
        }
        if (!have_epoch || !have_best) throw ConfigError("missing epoch or best_val_loss");
        cfg.validate();
        c.config = cfg;
    } catch (const std::exception& e) {
        throw FormatError(origin + ": invalid config block: " + e.what());
    }

    const auto count = r.get<std::uint32_t>("tensor count");
    for (std::uint32_t i = 0; i < count; ++i) c.params.push_back(r.record());

    const auto opt_count = r.get<std::uint32_t>("optimizer tensor count");
    if (opt_count != 2 * count) r.fail("optimizer tensor count " + std::to_string(opt_count) + " != 2 x " + std::to_string(count));
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor m = r.record();
        NamedTensor v = r.record();
        const std::string& base = c.params[i].name;
        if (m.name != base + ".m" || v.name != base + ".v") r.fail("optimizer state out of order near '" + base + "'");
        if (m.value.shape() != c.params[i].value.shape() || v.value.shape() != c.params[i].value.shape()) {
            r.fail("optimizer state shape mismatch for '" + base + "'");
        }
        c.optimizer.m.push_back(std::move(m.value));
        c.optimizer.v.push_back(std::move(v.value));
    }
    c.optimizer.step = r.get<std::uint64_t>("step counter");
    if (!r.done()) r.fail("trailing bytes after step counter");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes, path.string());
}

} // namespace jan
