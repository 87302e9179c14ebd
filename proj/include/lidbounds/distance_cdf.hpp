#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lidbounds/error.hpp"

namespace lidbounds {

/// Standard normal CDF. erfc keeps full relative precision in the left tail.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 * 0.5); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

/// Linear-interpolation sample quantile of a sorted vector (R type 7).
inline double sorted_quantile(std::span<const double> sorted, double p) {
    require(!sorted.empty(), "quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) N^{-1/5}. An IQR of zero
/// falls back to sd alone; zero variance has no usable bandwidth.
inline double silverman_bandwidth(std::span<const double> sample) {
    const auto n = static_cast<double>(sample.size());
    require(sample.size() >= 2, "bandwidth needs at least 2 samples");
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0)) fail(Errc::degenerate, "zero-variance distance sample; no Silverman bandwidth exists");

    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian-kernel KDE of a distance sample, integrated in closed form:
///   F(r) = (1/N) Σ Φ((r - d_i) / h).
/// No boundary correction: some kernel mass sits below r = 0, so F(0) > 0.
class DistanceCdf {
public:
    DistanceCdf(std::vector<double> sample, double bandwidth) : sample_(std::move(sample)), h_(bandwidth) {
        require(!sample_.empty(), "empty distance sample");
        require(h_ > 0 && std::isfinite(h_), "bandwidth must be positive and finite");
    }

    std::span<const double> sample() const noexcept { return sample_; }
    double bandwidth() const noexcept { return h_; }

    double operator()(double r) const {
        require(r >= 0, "CDF radius must be nonnegative");
        double s = 0.0;
        for (double d : sample_) s += normal_cdf((r - d) / h_);
        return s / static_cast<double>(sample_.size());
    }

    /// KDE density, F'(r).
    double density(double r) const {
        double s = 0.0;
        for (double d : sample_) s += normal_pdf((r - d) / h_);
        return s / (static_cast<double>(sample_.size()) * h_);
    }
    double derivative(double r) const { return density(r); }

private:
    std::vector<double> sample_;
    double h_;
};

inline DistanceCdf fit_cdf(std::vector<double> distances) {
    require(distances.size() >= 5, "KDE CDF needs at least 5 distances, got " + std::to_string(distances.size()));
    for (double v : distances) require(v > 0 && std::isfinite(v), "distances must be positive and finite");
    const double h = silverman_bandwidth(distances);
    return DistanceCdf(std::move(distances), h);
}

inline double eval_cdf(const DistanceCdf& cdf, double r) { return cdf(r); }

/// Expected rank k = n F(r) of a point at distance r.
inline double expected_rank(const DistanceCdf& cdf, double r, std::size_t n) {
    require(n >= 1, "n must be >= 1");
    return static_cast<double>(n) * cdf(r);
}

} // namespace lidbounds
