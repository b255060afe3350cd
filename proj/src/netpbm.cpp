#include "jan/netpbm.hpp"

#include <fstream>
#include <iterator>

#include "jan/error.hpp"

namespace jan {

namespace {

class Cursor {
public:
    Cursor(std::span<const std::uint8_t> bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(origin_ + ": byte offset " + std::to_string(pos_) + ": " + what);
    }

    bool done() const { return pos_ >= bytes_.size(); }
    std::size_t pos() const { return pos_; }

    static bool space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

    void skip_space_and_comments() {
        while (!done()) {
            if (space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (!done() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::uint32_t number(const char* what) {
        skip_space_and_comments();
        if (done()) fail(std::string("unexpected end of file reading ") + what);
        if (bytes_[pos_] < '0' || bytes_[pos_] > '9') fail(std::string("expected ") + what);
        std::uint64_t v = 0;
        while (!done() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 0xFFFFFFFFu) fail(std::string(what) + " too large");
            ++pos_;
        }
        return static_cast<std::uint32_t>(v);
    }

    std::uint8_t byte() {
        if (done()) fail("unexpected end of raster");
        return bytes_[pos_++];
    }

    void single_space() {
        if (done() || !space(bytes_[pos_])) fail("expected whitespace after header");
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    const std::string& origin_;
    std::size_t pos_ = 0;
};

} // namespace

NetpbmImage parse_netpbm(std::span<const std::uint8_t> bytes, const std::string& origin) {
    Cursor cur(bytes, origin);
    if (bytes.size() < 2 || bytes[0] != 'P') cur.fail("bad magic, expected P2/P3/P5/P6");
    const char kind = static_cast<char>(bytes[1]);
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6') cur.fail("unsupported netpbm type P" + std::string(1, kind));
    cur.byte();
    cur.byte();

    NetpbmImage img;
    img.channels = (kind == '3' || kind == '6') ? 3 : 1;
    img.width = cur.number("width");
    img.height = cur.number("height");
    img.maxval = cur.number("maxval");
    if (img.width == 0 || img.height == 0) cur.fail("zero image dimension");
    if (img.maxval == 0 || img.maxval > 65535) cur.fail("maxval must be in 1..65535");

    const std::size_t count = img.width * img.height * img.channels;
    img.samples.resize(count);
    if (kind == '2' || kind == '3') {
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint32_t v = cur.number("sample");
            if (v > img.maxval) cur.fail("sample exceeds maxval");
            img.samples[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        cur.single_space();
        const bool wide = img.maxval > 255;
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t v = cur.byte();
            if (wide) v = (v << 8) | cur.byte();
            if (v > img.maxval) cur.fail("sample exceeds maxval");
            img.samples[i] = static_cast<std::uint16_t>(v);
        }
    }
    return img;
}

NetpbmImage read_netpbm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_netpbm(bytes, path.string());
}

std::vector<std::uint8_t> encode_pgm(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels) {
    if (pixels.size() != width * height) throw DataError("encode_pgm: pixel count does not match dimensions");
    const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels) {
    const auto bytes = encode_pgm(width, height, pixels);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

} // namespace jan
