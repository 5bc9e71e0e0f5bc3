#pragma once

// Image container plus the file codecs: PFM read/write (bit-exact round
// trip), Radiance HDR read (flat and RLE scanlines), and 8-bit PNG export
// through zlib.

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "hdq/probe.hpp"

namespace hdq {

// Linear-light float image, row 0 at the top.
struct Image {
    int width = 0, height = 0, channels = 3;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c = 3) : width(w), height(h), channels(c), data(size_t(w) * h * c, 0.f) {}

    float* pixel(int x, int y) { return &data[(size_t(y) * width + x) * channels]; }
    const float* pixel(int x, int y) const { return &data[(size_t(y) * width + x) * channels]; }
};

namespace detail {

inline bool little_endian_host() {
    uint16_t v = 1;
    return *reinterpret_cast<const uint8_t*>(&v) == 1;
}

// One whitespace-delimited PFM header token, tracking the byte offset for
// error messages.
inline std::string pfm_token(std::istream& in, long& offset) {
    std::string tok;
    char c;
    while (in.get(c)) {
        ++offset;
        if (!isspace(uint8_t(c))) {
            tok.push_back(c);
            break;
        }
    }
    while (in.get(c)) {
        ++offset;
        if (isspace(uint8_t(c))) break;
        tok.push_back(c);
    }
    return tok;
}

}  // namespace detail

inline void write_pfm(const std::string& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3)
        throw IoError("PFM supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << (image.channels == 3 ? "PF" : "Pf") << "\n"
        << image.width << " " << image.height << "\n"
        << "-1.0\n";  // negative scale: little-endian payload
    // Scanlines bottom to top, as PFM expects.
    for (int y = image.height - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(image.pixel(0, y)),
                  std::streamsize(sizeof(float)) * image.width * image.channels);
    if (!out) throw IoError("short write to " + path);
}

inline Image read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    long offset = 0;
    std::string magic = detail::pfm_token(in, offset);
    int channels;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw IoError("not a PFM file (bad magic at byte 0): " + path);

    auto parse_int = [&](const std::string& tok) {
        try {
            size_t used;
            int v = std::stoi(tok, &used);
            if (used != tok.size() || v <= 0) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw IoError("malformed PFM header near byte " + std::to_string(offset) + " in " + path);
        }
    };
    int w = parse_int(detail::pfm_token(in, offset));
    int h = parse_int(detail::pfm_token(in, offset));
    std::string scale_tok = detail::pfm_token(in, offset);
    double scale;
    try {
        scale = std::stod(scale_tok);
    } catch (...) {
        throw IoError("malformed PFM scale near byte " + std::to_string(offset) + " in " + path);
    }
    bool file_little = scale < 0;

    Image image(w, h, channels);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(image.pixel(0, y)),
                std::streamsize(sizeof(float)) * w * channels);
        if (!in)
            throw IoError("truncated PFM payload near byte " + std::to_string(offset) + " in " + path);
    }
    if (file_little != detail::little_endian_host()) {
        for (float& f : image.data) {
            uint32_t v;
            std::memcpy(&v, &f, 4);
            v = __builtin_bswap32(v);
            std::memcpy(&f, &v, 4);
        }
    }
    return image;
}

// Radiance HDR (RGBE), read-only. Handles both flat and RLE scanlines.
inline Image read_hdr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("#?", 0) != 0)
        throw IoError("not a Radiance HDR file (missing #? magic at byte 0): " + path);
    bool format_ok = false;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        if (line.rfind("FORMAT=", 0) == 0) format_ok = line == "FORMAT=32-bit_rle_rgbe";
    }
    if (!format_ok) throw IoError("HDR file is not 32-bit_rle_rgbe: " + path);
    if (!std::getline(in, line)) throw IoError("truncated HDR header: " + path);
    int w = 0, h = 0;
    if (std::sscanf(line.c_str(), "-Y %d +X %d", &h, &w) != 2 || w <= 0 || h <= 0)
        throw IoError("unsupported HDR orientation: " + line);

    Image image(w, h, 3);
    std::vector<uint8_t> scan(size_t(w) * 4);
    for (int y = 0; y < h; ++y) {
        uint8_t head[4];
        in.read(reinterpret_cast<char*>(head), 4);
        if (!in) throw IoError("truncated HDR scanline " + std::to_string(y) + ": " + path);
        if (head[0] == 2 && head[1] == 2 && ((head[2] << 8) | head[3]) == w && w >= 8 &&
            w < 32768) {
            // RLE: four separated component planes.
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < w) {
                    int code = in.get();
                    if (code == EOF) throw IoError("truncated HDR RLE data: " + path);
                    if (code > 128) {
                        int run = code - 128;
                        int value = in.get();
                        if (value == EOF || x + run > w) throw IoError("bad HDR RLE run: " + path);
                        for (int i = 0; i < run; ++i) scan[size_t(x++) * 4 + c] = uint8_t(value);
                    } else {
                        int run = code;
                        if (x + run > w) throw IoError("bad HDR RLE literal: " + path);
                        for (int i = 0; i < run; ++i) {
                            int value = in.get();
                            if (value == EOF) throw IoError("truncated HDR RLE data: " + path);
                            scan[size_t(x++) * 4 + c] = uint8_t(value);
                        }
                    }
                }
            }
        } else {
            std::memcpy(scan.data(), head, 4);
            in.read(reinterpret_cast<char*>(scan.data() + 4), std::streamsize(w) * 4 - 4);
            if (!in) throw IoError("truncated HDR scanline " + std::to_string(y) + ": " + path);
        }
        for (int x = 0; x < w; ++x) {
            const uint8_t* p = &scan[size_t(x) * 4];
            float* out = image.pixel(x, y);
            if (p[3] == 0) {
                out[0] = out[1] = out[2] = 0.f;
            } else {
                float scale = std::ldexp(1.0f, int(p[3]) - (128 + 8));
                out[0] = p[0] * scale;
                out[1] = p[1] * scale;
                out[2] = p[2] * scale;
            }
        }
    }
    return image;
}

// Minimal PNG writer (8-bit RGB or RGBA, filter 0, zlib-deflated).
inline void write_png(const std::string& path, const Image& image, bool gamma_encode = true) {
    if (image.channels != 3 && image.channels != 4) throw IoError("PNG writer needs RGB(A)");
    int w = image.width, h = image.height, ch = image.channels;

    std::vector<uint8_t> raw((size_t(w) * ch + 1) * h);
    size_t pos = 0;
    for (int y = 0; y < h; ++y) {
        raw[pos++] = 0;  // filter: none
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double v = image.pixel(x, y)[c];
                if (gamma_encode && c < 3) v = std::pow(clamp(v, 0.0, 1.0), 1.0 / 2.2);
                raw[pos++] = uint8_t(std::lround(clamp(v, 0.0, 1.0) * 255.0));
            }
    }

    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw IoError("zlib compression failed for " + path);
    compressed.resize(bound);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    auto be32 = [](uint32_t v) {
        return std::array<uint8_t, 4>{uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    };
    auto chunk = [&](const char* type, const uint8_t* data, size_t n) {
        auto len = be32(uint32_t(n));
        out.write(reinterpret_cast<const char*>(len.data()), 4);
        std::vector<uint8_t> body(4 + n);
        std::memcpy(body.data(), type, 4);
        if (n) std::memcpy(body.data() + 4, data, n);
        out.write(reinterpret_cast<const char*>(body.data()), std::streamsize(body.size()));
        auto crc = be32(uint32_t(crc32(0, body.data(), uInt(body.size()))));
        out.write(reinterpret_cast<const char*>(crc.data()), 4);
    };

    const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.write(reinterpret_cast<const char*>(sig), 8);
    uint8_t ihdr[13];
    auto wbe = be32(uint32_t(w)), hbe = be32(uint32_t(h));
    std::memcpy(ihdr, wbe.data(), 4);
    std::memcpy(ihdr + 4, hbe.data(), 4);
    ihdr[8] = 8;                      // bit depth
    ihdr[9] = ch == 3 ? 2 : 6;        // color type
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    chunk("IHDR", ihdr, 13);
    chunk("IDAT", compressed.data(), compressed.size());
    chunk("IEND", nullptr, 0);
    if (!out) throw IoError("short write to " + path);
}

// Probe files: PFM or Radiance HDR by extension, resampled to 16x32 when
// needed (with a warning flag the caller may surface).
inline LightProbe read_probe(const std::string& path, bool* resampled = nullptr) {
    Image img;
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".hdr") img = read_hdr(path);
    else img = read_pfm(path);
    if (img.channels != 3) throw IoError("probe image must have 3 channels: " + path);
    if (resampled) *resampled = !(img.width == kProbeCols && img.height == kProbeRows);
    std::vector<Vec3> grid(size_t(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float* p = img.pixel(x, y);
            grid[size_t(y) * img.width + x] = {std::max(0.f, p[0]), std::max(0.f, p[1]),
                                               std::max(0.f, p[2])};
        }
    return LightProbe::from_grid(grid, img.height, img.width);
}

inline void write_probe(const std::string& path, const LightProbe& probe) {
    Image img(kProbeCols, kProbeRows, 3);
    for (int r = 0; r < kProbeRows; ++r)
        for (int c = 0; c < kProbeCols; ++c) {
            float* p = img.pixel(c, r);
            Vec3 v = probe.at(r, c);
            p[0] = float(v.x);
            p[1] = float(v.y);
            p[2] = float(v.z);
        }
    write_pfm(path, img);
}

}  // namespace hdq
