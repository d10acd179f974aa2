#include "pluforge/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pluforge {

float GrayImage::at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y);
}

GrayImage laplacian(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at_clamped(x - 1, y) + img.at_clamped(x + 1, y) +
                           img.at_clamped(x, y - 1) + img.at_clamped(x, y + 1) -
                           4.f * img.at(x, y);
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= sum;

    GrayImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at_clamped(x + i, y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at_clamped(x, y + i);
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

GrayImage gradient_magnitude(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double gx = 0.5 * (img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y));
            double gy = 0.5 * (img.at_clamped(x, y + 1) - img.at_clamped(x, y - 1));
            out.at(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
        }
    return out;
}

double otsu_threshold(const GrayImage& img) {
    std::array<uint64_t, 256> hist{};
    for (float v : img.px) {
        int b = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
        hist[b]++;
    }
    uint64_t total = img.size();
    if (total == 0) return 0.0;
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

    double best_var = -1.0;
    int best_t = 0;
    uint64_t w0 = 0;
    double sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        if (w0 == 0) continue;
        uint64_t w1 = total - w0;
        if (w1 == 0) break;
        sum0 += static_cast<double>(t) * hist[t];
        double m0 = sum0 / w0;
        double m1 = (sum_all - sum0) / w1;
        double var = static_cast<double>(w0) * w1 * (m0 - m1) * (m0 - m1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for write: " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::string out;
    out.reserve(img.size() + 32);
    out += "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    for (float v : img.px)
        out.push_back(static_cast<char>(
            static_cast<uint8_t>(std::clamp(static_cast<int>(std::lround(v)), 0, 255))));
    write_file_atomic(path, out);
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int w, h, maxv;
    f >> magic >> w >> h >> maxv;
    if (magic != "P5" || maxv != 255) throw std::runtime_error("unsupported PGM: " + path);
    f.get();  // single whitespace after header
    GrayImage img(w, h);
    std::vector<uint8_t> buf(img.size());
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("truncated PGM: " + path);
    for (size_t i = 0; i < buf.size(); ++i) img.px[i] = buf[i];
    return img;
}

namespace {

void put_u16(std::string& s, uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& s, uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
uint32_t get_u32(const std::string& s, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(s[off + i])) << (8 * i);
    return v;
}

// BGRA palette entries for indices 0..4.
constexpr uint8_t kPalette[5][4] = {
    {0, 0, 0, 0},       // black
    {0, 0, 255, 0},     // red
    {0, 255, 0, 0},     // green
    {255, 0, 0, 0},     // blue
    {0, 255, 255, 0},   // yellow
};

}  // namespace

void save_indexed_bmp(const IndexedImage& img, const std::string& path) {
    const uint32_t row_stride = (static_cast<uint32_t>(img.width) + 3u) & ~3u;
    const uint32_t pixel_bytes = row_stride * img.height;
    const uint32_t data_offset = 14 + 40 + 256 * 4;

    std::string s;
    s.reserve(data_offset + pixel_bytes);
    s += "BM";
    put_u32(s, data_offset + pixel_bytes);
    put_u32(s, 0);
    put_u32(s, data_offset);
    put_u32(s, 40);  // BITMAPINFOHEADER
    put_u32(s, static_cast<uint32_t>(img.width));
    put_u32(s, static_cast<uint32_t>(img.height));
    put_u16(s, 1);
    put_u16(s, 8);
    put_u32(s, 0);  // BI_RGB
    put_u32(s, pixel_bytes);
    put_u32(s, 2835);
    put_u32(s, 2835);
    put_u32(s, 256);
    put_u32(s, 0);
    for (int i = 0; i < 256; ++i) {
        if (i < 5)
            s.append(reinterpret_cast<const char*>(kPalette[i]), 4);
        else
            s.append(4, '\0');
    }
    // rows bottom-up
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) s.push_back(static_cast<char>(img.at(x, y)));
        s.append(row_stride - img.width, '\0');
    }
    write_file_atomic(path, s);
}

IndexedImage load_indexed_bmp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string s = ss.str();
    if (s.size() < 54 || s[0] != 'B' || s[1] != 'M')
        throw std::runtime_error("not a BMP: " + path);
    uint32_t data_offset = get_u32(s, 10);
    int w = static_cast<int>(get_u32(s, 18));
    int h = static_cast<int>(get_u32(s, 22));
    uint32_t row_stride = (static_cast<uint32_t>(w) + 3u) & ~3u;
    IndexedImage img(w, h);
    for (int y = 0; y < h; ++y) {
        size_t row = data_offset + static_cast<size_t>(h - 1 - y) * row_stride;
        if (row + w > s.size()) throw std::runtime_error("truncated BMP: " + path);
        for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<uint8_t>(s[row + x]);
    }
    return img;
}

}  // namespace pluforge
