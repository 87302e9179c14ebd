#pragma once

// Local intrinsic dimensionality: the k-NN maximum-likelihood estimator and
// the continuous-CDF quantities it approximates (ID_F(r) and the
// representation factor G_{F,w}(r)).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>

#include "lidbounds/error.hpp"
#include "lidbounds/metric.hpp"
#include "lidbounds/quadrature.hpp"

namespace lidbounds {

/// ln(v2/v1) / ln(r2/r1): the growth exponent of volume with radius.
inline double expansion_dimension(double v1, double v2, double r1, double r2) {
    require(v1 > 0 && v2 > 0 && r1 > 0 && r2 > 0, "volumes and radii must be positive");
    require(r1 != r2, "radii must differ");
    return std::log(v2 / v1) / std::log(r2 / r1);
}

struct LidEstimate {
    double value;
    std::size_t k;
    double r_max;
};

/// MLE estimate -((1/k) Σ_{i=1..k} ln(r_i / r_max))^{-1}. The i = k term is
/// zero and is kept in the average (divide by k, not k-1).
inline LidEstimate mle_lid(const NeighborList& neighbors) {
    const auto& r = neighbors.distances;
    const std::size_t k = r.size();
    require(k >= 2, "MLE LID needs at least 2 neighbors");
    double r_max = 0.0;
    for (double v : r) {
        require(std::isfinite(v), "neighbor distances must be finite");
        if (v <= 0.0) fail(Errc::degenerate, "zero neighbor distance (duplicate point); deduplicate first");
        r_max = std::max(r_max, v);
    }
    double sum = 0.0;
    for (double v : r) sum += std::log(v / r_max);
    if (sum == 0.0) fail(Errc::degenerate, "all neighbor distances equal r_max; the estimate is infinite");
    const double mean = sum / static_cast<double>(k);
    return {-1.0 / mean, k, r_max};
}

template <class F>
concept EvaluableCdf = requires(const F& f, double r) {
    { f(r) } -> std::convertible_to<double>;
};

template <class F>
concept DifferentiableCdf = EvaluableCdf<F> && requires(const F& f, double r) {
    { f.derivative(r) } -> std::convertible_to<double>;
};

/// F(r) = (r / w)^m on [0, w], 1 beyond.
struct PowerLawCdf {
    double exponent;
    double support = 1.0;

    PowerLawCdf(double m, double w = 1.0) : exponent(m), support(w) {
        require(m > 0 && w > 0, "power-law CDF needs m > 0 and w > 0");
    }

    double operator()(double r) const {
        if (r <= 0) return 0.0;
        if (r >= support) return 1.0;
        return std::pow(r / support, exponent);
    }
    double derivative(double r) const {
        if (r <= 0 || r >= support) return 0.0;
        return exponent / support * std::pow(r / support, exponent - 1.0);
    }
};

/// F'(r): exact when the CDF provides derivative(), else a central
/// difference with step 1e-5 r.
template <EvaluableCdf F>
double cdf_derivative(const F& cdf, double r) {
    if constexpr (DifferentiableCdf<F>) {
        return cdf.derivative(r);
    } else {
        const double h = 1e-5 * r;
        return (cdf(r + h) - cdf(r - h)) / (2.0 * h);
    }
}

/// ID_F(r) = r F'(r) / F(r).
template <EvaluableCdf F>
double id_at_radius(const F& cdf, double r) {
    require(r > 0, "radius must be positive");
    const double fr = cdf(r);
    if (!(fr > 0)) fail(Errc::numeric, "F(r) <= 0 at r = " + std::to_string(r));
    return r * cdf_derivative(cdf, r) / fr;
}

/// G_{F,w}(r) = exp(∫_r^w (lid0 - ID_F(t)) / t dt).
template <EvaluableCdf F>
double representation_factor(const F& cdf, double r, double w, double lid0) {
    require(r > 0 && w > 0, "radii must be positive");
    if (r == w) return 1.0;
    const auto integrand = [&](double t) { return (lid0 - id_at_radius(cdf, t)) / t; };
    const double span = std::abs(std::log(w / r));
    // ID_F carries rounding noise (~1e-15 relative with an exact derivative,
    // ~1e-11 with finite differences); the floor keeps the error target above
    // it when the integrand is (nearly) zero
    const double noise = DifferentiableCdf<F> ? 1e-14 : 1e-11;
    const double floor = noise * span * std::max(1.0, std::abs(lid0));
    return std::exp(adaptive_simpson(integrand, r, w, 1e-8, floor));
}

} // namespace lidbounds
