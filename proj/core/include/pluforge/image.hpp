#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pluforge {

/// Single-channel image, values in [0, 255]. Stored as float so filters
/// (blur, Laplacian) do not quantize between stages; quantized on save.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> px;  // row-major, size width*height

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.f)
        : width(w), height(h), px(static_cast<size_t>(w) * h, fill) {
        if (w < 0 || h < 0) throw std::invalid_argument("negative image dims");
    }

    float& at(int x, int y) { return px[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return px[static_cast<size_t>(y) * width + x]; }

    /// Clamped access with edge replication for out-of-bounds coordinates.
    float at_clamped(int x, int y) const;

    size_t size() const { return px.size(); }
};

/// Paletted raster with indices 0..4 (0 = background, 1..4 = category).
struct IndexedImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> px;

    IndexedImage() = default;
    IndexedImage(int w, int h) : width(w), height(h), px(static_cast<size_t>(w) * h, 0) {}

    uint8_t& at(int x, int y) { return px[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return px[static_cast<size_t>(y) * width + x]; }
};

// ---- filters -------------------------------------------------------------

/// 4-neighbor discrete Laplacian [0,1,0; 1,-4,1; 0,1,0], borders by edge
/// replication.
GrayImage laplacian(const GrayImage& img);

/// Separable Gaussian blur; sigma <= 0 is the identity.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Central-difference gradient magnitude, edge replication at borders.
GrayImage gradient_magnitude(const GrayImage& img);

/// Otsu threshold over the 0..255 range (256-bin histogram).
double otsu_threshold(const GrayImage& img);

// ---- file I/O ------------------------------------------------------------

/// Binary PGM (P5), 8-bit. Values clamped and rounded on save.
void save_pgm(const GrayImage& img, const std::string& path);
GrayImage load_pgm(const std::string& path);

/// 8-bit paletted BMP. The palette is fixed: 0=black, 1=red, 2=green,
/// 3=blue, 4=yellow; the remaining entries are zeroed.
void save_indexed_bmp(const IndexedImage& img, const std::string& path);
IndexedImage load_indexed_bmp(const std::string& path);

/// Write bytes to a temp file in the same directory, then rename into place.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace pluforge
