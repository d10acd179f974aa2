#include "pluforge/fid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pluforge {

FeatureStats fit_stats(const std::vector<std::vector<double>>& features) {
    if (features.size() < 2) throw std::invalid_argument("fit_stats: need >= 2 samples");
    const size_t d = features[0].size();
    for (const auto& f : features)
        if (f.size() != d) throw std::invalid_argument("fit_stats: inconsistent dimension");
    FeatureStats s;
    s.dim = d;
    s.n_samples = features.size();
    s.mean.assign(d, 0.0);
    for (const auto& f : features)
        for (size_t i = 0; i < d; ++i) s.mean[i] += f[i];
    for (auto& m : s.mean) m /= static_cast<double>(features.size());
    s.cov.assign(d * d, 0.0);
    for (const auto& f : features)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = i; j < d; ++j)
                s.cov[i * d + j] += (f[i] - s.mean[i]) * (f[j] - s.mean[j]);
    const double denom = static_cast<double>(features.size() - 1);
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i; j < d; ++j) {
            s.cov[i * d + j] /= denom;
            s.cov[j * d + i] = s.cov[i * d + j];
        }
    return s;
}

double fid(const FeatureStats& a, const FeatureStats& b) {
    if (a.dim != b.dim) throw std::invalid_argument("fid: dimension mismatch");
    // identical distributions score exactly zero, independent of how badly
    // conditioned the shared covariance is
    if (a.mean == b.mean && a.cov == b.cov) return 0.0;
    const auto d = static_cast<Eigen::Index>(a.dim);
    double mean_term = 0.0;
    for (size_t i = 0; i < a.dim; ++i) {
        double dm = a.mean[i] - b.mean[i];
        mean_term += dm * dm;
    }
    Eigen::Map<const Eigen::MatrixXd> ca(a.cov.data(), d, d);
    Eigen::Map<const Eigen::MatrixXd> cb(b.cov.data(), d, d);

    // sqrt(ca) via eigendecomposition, eigenvalues clamped at zero with a
    // relative tolerance for numerical negatives.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esa(ca);
    Eigen::VectorXd ea = esa.eigenvalues();
    double maxa = std::max(0.0, ea.maxCoeff());
    for (Eigen::Index i = 0; i < d; ++i)
        ea[i] = ea[i] > -1e-10 * maxa ? std::max(ea[i], 0.0) : 0.0;
    Eigen::MatrixXd sqrt_a =
        esa.eigenvectors() * ea.cwiseSqrt().asDiagonal() * esa.eigenvectors().transpose();

    // Tr sqrt(ca*cb) == Tr sqrt(sqrt(ca)*cb*sqrt(ca)), and the symmetrized
    // product keeps the eigensolver in self-adjoint territory.
    Eigen::MatrixXd sym = sqrt_a * cb * sqrt_a;
    sym = 0.5 * (sym + sym.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esm(sym);
    Eigen::VectorXd em = esm.eigenvalues();
    double maxm = std::max(0.0, em.maxCoeff());
    double trace_sqrt = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        double v = em[i] > -1e-10 * maxm ? std::max(em[i], 0.0) : 0.0;
        trace_sqrt += std::sqrt(v);
    }
    return mean_term + ca.trace() + cb.trace() - 2.0 * trace_sqrt;
}

double delta_fid(double fid_aug, double fid_free) {
    if (fid_free <= 0.0) throw std::invalid_argument("delta_fid: baseline FID must be > 0");
    return (fid_aug - fid_free) / fid_free * 100.0;
}

std::vector<double> desk_features(const GrayImage& image) {
    if (image.size() == 0) throw std::invalid_argument("desk_features: empty image");
    const double n = static_cast<double>(image.size());
    std::vector<double> f;
    f.reserve(kDeskFeatureDim);

    double mean = 0.0;
    for (float v : image.px) mean += v;
    mean /= n;
    double var = 0.0;
    for (float v : image.px) var += (v - mean) * (v - mean);
    var /= n;
    f.push_back(mean);
    f.push_back(std::sqrt(var));

    std::array<double, 16> hist{};
    for (float v : image.px) {
        int b = std::clamp(static_cast<int>(v / 16.0), 0, 15);
        hist[b] += 1.0 / n;
    }
    f.insert(f.end(), hist.begin(), hist.end());

    GrayImage grad = gradient_magnitude(image);
    double gmean = 0.0;
    for (float v : grad.px) gmean += v;
    gmean /= n;
    double gvar = 0.0;
    for (float v : grad.px) gvar += (v - gmean) * (v - gmean);
    gvar /= n;
    f.push_back(gmean);
    f.push_back(std::sqrt(gvar));

    GrayImage lap = laplacian(image);
    double lmean = 0.0;
    for (float v : lap.px) lmean += v;
    lmean /= n;
    double lvar = 0.0;
    for (float v : lap.px) lvar += (v - lmean) * (v - lmean);
    lvar /= n;
    f.push_back(lvar);

    double thr = otsu_threshold(image);
    double fg = 0.0;
    for (float v : image.px)
        if (v <= thr) fg += 1.0 / n;  // organoids are darker than background
    f.push_back(fg);

    f.push_back(0.0);
    f.push_back(0.0);
    return f;
}

std::vector<double> extract_features(const GrayImage& image,
                                     const FeatureExtractor& extractor) {
    std::vector<double> f;
    try {
        f = extractor(image);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("extract_features: backend failed: ") + e.what());
    }
    if (f.empty()) throw std::runtime_error("extract_features: backend returned empty vector");
    return f;
}

void save_feature_dump(const std::string& path,
                       const std::vector<std::vector<double>>& features) {
    if (features.empty()) throw std::invalid_argument("save_feature_dump: no features");
    const uint32_t count = static_cast<uint32_t>(features.size());
    const uint32_t dim = static_cast<uint32_t>(features[0].size());
    std::string s;
    s.reserve(12 + static_cast<size_t>(count) * dim * 4);
    s += "FVEC";
    for (uint32_t v : {count, dim})
        for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    for (const auto& f : features) {
        if (f.size() != dim) throw std::invalid_argument("save_feature_dump: ragged features");
        for (double x : f) {
            float fx = static_cast<float>(x);
            uint32_t bits = std::bit_cast<uint32_t>(fx);
            for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
        }
    }
    write_file_atomic(path, s);
}

std::vector<std::vector<double>> load_feature_dump(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string s = ss.str();
    if (s.size() < 12 || s.compare(0, 4, "FVEC") != 0)
        throw std::runtime_error("not a feature dump: " + path);
    auto read_u32 = [&](size_t off) {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<uint8_t>(s[off + i])) << (8 * i);
        return v;
    };
    uint32_t count = read_u32(4), dim = read_u32(8);
    if (s.size() != 12 + static_cast<size_t>(count) * dim * 4)
        throw std::runtime_error("truncated feature dump: " + path);
    std::vector<std::vector<double>> out(count, std::vector<double>(dim));
    size_t off = 12;
    for (uint32_t i = 0; i < count; ++i)
        for (uint32_t j = 0; j < dim; ++j, off += 4) {
            uint32_t bits = read_u32(off);
            out[i][j] = std::bit_cast<float>(bits);
        }
    return out;
}

}  // namespace pluforge
