#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lidbounds/error.hpp"

namespace lidbounds {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double mean(std::span<const double> v) {
    require(!v.empty(), "mean of an empty sample");
    CompensatedSum s;
    for (double t : v) s.add(t);
    return s.value() / static_cast<double>(v.size());
}

/// Standard error of the mean; NaN for fewer than two values.
inline double standard_error(std::span<const double> v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean(v);
    CompensatedSum s;
    for (double t : v) s.add((t - m) * (t - m));
    const double var = s.value() / static_cast<double>(v.size() - 1);
    return std::sqrt(var / static_cast<double>(v.size()));
}

inline double median(std::vector<double> v) {
    require(!v.empty(), "median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Ranks starting at 1, ties get their average rank.
inline std::vector<double> fractional_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && a.size() >= 2, "correlation needs two equal-length samples of size >= 2");
    const double ma = mean(a);
    const double mb = mean(b);
    CompensatedSum sab, saa, sbb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab.add((a[i] - ma) * (b[i] - mb));
        saa.add((a[i] - ma) * (a[i] - ma));
        sbb.add((b[i] - mb) * (b[i] - mb));
    }
    return sab.value() / std::sqrt(saa.value() * sbb.value());
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    return pearson(ra, rb);
}

} // namespace lidbounds
