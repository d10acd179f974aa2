#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pluforge/image.hpp"

namespace pluforge {

struct FeatureStats {
    size_t dim = 0;
    std::vector<double> mean;
    std::vector<double> cov;  // row-major dim x dim, symmetric
    size_t n_samples = 0;
};

using FeatureExtractor = std::function<std::vector<double>(const GrayImage&)>;

/// Sample mean and unbiased covariance over >= 2 feature vectors.
FeatureStats fit_stats(const std::vector<std::vector<double>>& features);

/// ||mu_a - mu_b||^2 + Tr(cov_a + cov_b - 2 sqrt(cov_a cov_b)), the square
/// root taken via eigendecomposition of the symmetrized product with
/// negative eigenvalues clamped to zero.
double fid(const FeatureStats& a, const FeatureStats& b);

/// (fid_aug - fid_free) / fid_free * 100.
double delta_fid(double fid_aug, double fid_free);

/// Bundled 24-dim hand-crafted extractor: mean, std, 16-bin histogram,
/// gradient-magnitude mean/std, Laplacian variance, foreground fraction at
/// the Otsu threshold, two reserved zeros.
std::vector<double> desk_features(const GrayImage& image);
inline constexpr size_t kDeskFeatureDim = 24;

std::vector<double> extract_features(const GrayImage& image, const FeatureExtractor& extractor);

/// "FVEC" dump: magic, u32 count, u32 dim, then count*dim little-endian
/// float32 values.
void save_feature_dump(const std::string& path,
                       const std::vector<std::vector<double>>& features);
std::vector<std::vector<double>> load_feature_dump(const std::string& path);

}  // namespace pluforge
