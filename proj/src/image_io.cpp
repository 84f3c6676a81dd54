#include "trajlab/image_io.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace trajlab {

std::vector<uint8_t> encode_pgm(const GrayImage& image) {
    if (image.width <= 0 || image.height <= 0)
        throw std::invalid_argument("encode_pgm: empty image");
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n",
                                image.width, image.height);
    std::vector<uint8_t> out;
    out.reserve(static_cast<size_t>(n) + image.pixels.size());
    out.insert(out.end(), header, header + n);
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

namespace {

// Whitespace-and-comment token scanner for the PNM header.
struct PnmScanner {
    std::span<const uint8_t> bytes;
    size_t pos = 0;

    void skip_space() {
        while (pos < bytes.size()) {
            const uint8_t c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    int next_int(const char* what) {
        skip_space();
        if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
            throw std::runtime_error(std::string("decode_pgm: expected ") + what);
        long v = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 20)
                throw std::runtime_error(std::string("decode_pgm: absurd ") + what);
            ++pos;
        }
        return static_cast<int>(v);
    }
};

} // namespace

GrayImage decode_pgm(std::span<const uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw std::runtime_error("decode_pgm: bad magic, expected P5");

    PnmScanner scan{bytes, 2};
    const int width = scan.next_int("width");
    const int height = scan.next_int("height");
    const int maxval = scan.next_int("maxval");
    if (maxval != 255)
        throw std::runtime_error("decode_pgm: maxval must be 255, got " +
                                 std::to_string(maxval));
    if (scan.pos >= bytes.size())
        throw std::runtime_error("decode_pgm: truncated header");
    ++scan.pos; // single whitespace byte after maxval

    const size_t expected = static_cast<size_t>(width) * height;
    const size_t available = bytes.size() - scan.pos;
    if (available < expected)
        throw std::runtime_error("decode_pgm: truncated payload, expected " +
                                 std::to_string(expected) + " bytes, got " +
                                 std::to_string(available));

    GrayImage img(width, height);
    std::memcpy(img.pixels.data(), bytes.data() + scan.pos, expected);
    return img;
}

void write_pgm(const GrayImage& image, const std::string& path) {
    const auto bytes = encode_pgm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_pgm: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write_pgm: write failed for " + path);
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("read_pgm: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

// --------------------------------------------------------------------- PNG

namespace {

uint32_t crc32_update(uint32_t crc, const uint8_t* data, size_t len) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    for (size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc;
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const std::vector<uint8_t>& data) {
    put_u32be(out, static_cast<uint32_t>(data.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uint32_t crc =
        crc32_update(0xFFFFFFFFu, out.data() + start, out.size() - start) ^ 0xFFFFFFFFu;
    put_u32be(out, crc);
}

} // namespace

std::vector<uint8_t> encode_png(const GrayImage& image) {
    if (image.width <= 0 || image.height <= 0)
        throw std::invalid_argument("encode_png: empty image");

    // Raw scanlines: filter byte 0 + row pixels.
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(image.height) * (image.width + 1));
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);
        const uint8_t* row = image.pixels.data() + static_cast<size_t>(y) * image.width;
        raw.insert(raw.end(), row, row + image.width);
    }

    // zlib stream with stored (uncompressed) deflate blocks.
    std::vector<uint8_t> z;
    z.push_back(0x78);
    z.push_back(0x01);
    size_t off = 0;
    while (off < raw.size()) {
        const size_t n = std::min<size_t>(65535, raw.size() - off);
        const bool final = off + n == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(static_cast<uint8_t>(n & 0xFF));
        z.push_back(static_cast<uint8_t>(n >> 8));
        z.push_back(static_cast<uint8_t>(~n & 0xFF));
        z.push_back(static_cast<uint8_t>((~n >> 8) & 0xFF));
        z.insert(z.end(), raw.begin() + off, raw.begin() + off + n);
        off += n;
    }
    uint32_t s1 = 1, s2 = 0;
    for (const uint8_t b : raw) {
        s1 = (s1 + b) % 65521;
        s2 = (s2 + s1) % 65521;
    }
    put_u32be(z, (s2 << 16) | s1);

    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, static_cast<uint32_t>(image.width));
    put_u32be(ihdr, static_cast<uint32_t>(image.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // color type: grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", z);
    append_chunk(out, "IEND", {});
    return out;
}

void write_png(const GrayImage& image, const std::string& path) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_png: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write_png: write failed for " + path);
}

} // namespace trajlab
