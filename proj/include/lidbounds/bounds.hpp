#pragma once

// Bounds on LID(b) for a perturbed point b from the distance CDF F_b at the
// two reference distances y = |b - c| and δx = |b - a|:
//
//   ln(F_b(y)/F_b(δx)) / ln(y/δx + η)  <=  LID(b)  <=  ln(F_b(y)/F_b(δx)) / ln(y/δx - η)
//
// The directional variant replaces y/δx by 1/δ, its value on the boundary
// δ = 2cos θ between perturbing away from c and toward c.
//
// The bounds presume a sample size n >= n_0 where F_b is positive and smooth
// near 0. n_0 has no constructive definition; callers treat n >= 1000 as
// satisfying it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "lidbounds/error.hpp"
#include "lidbounds/geometry.hpp"
#include "lidbounds/lid.hpp"
#include "lidbounds/stats.hpp"

namespace lidbounds {

enum class BoundKind { sandwich, directional_away, directional_toward };

inline std::string_view to_string(BoundKind k) noexcept {
    switch (k) {
        case BoundKind::sandwich: return "sandwich";
        case BoundKind::directional_away: return "directional-away";
        case BoundKind::directional_toward: return "directional-toward";
    }
    return "?";
}

/// φ = min{(y + δxη)/y, y/(y - δxη)}; > 1 for every admissible η.
inline double phi(double y, double delta_x, double eta) {
    require(y > 0 && delta_x > 0, "distances must be positive");
    require(eta > 0, "eta must be positive");
    require(delta_x * eta < y, "infeasible eta: delta_x * eta must be below y");
    const double t = delta_x * eta;
    return std::min((y + t) / y, y / (y - t));
}

struct EtaFeasibility {
    double eta = 0;
    double phi = 0;
    bool feasible = false;
    double cap1 = 0; // y/δx - 1
    double cap2 = 0; // LID ln(φ) / |ln(δx/y)|, evaluated at this η
    double directional_lo = -std::numeric_limits<double>::infinity(); // 1 - 1/δ
    double directional_hi = std::numeric_limits<double>::infinity();  // 1/δ - 1
};

inline constexpr double kEtaFloor = 1e-6;

/// Log-spaced η candidates strictly inside (1e-6, y/δx - 1), each tested
/// against the φ cap (using `lid_proxy` for the unknown LID(b)) and, for the
/// directional kinds, against 1 - 1/δ < η < 1/δ - 1. Empty when y/δx <= 1.
inline std::vector<EtaFeasibility> eta_grid(const PerturbationTriple& t, double lid_proxy, BoundKind kind,
                                            std::size_t grid_size) {
    require(lid_proxy > 0 && std::isfinite(lid_proxy), "LID proxy must be positive and finite");
    require(grid_size >= 1, "eta grid needs at least one point");
    const double y = t.y;
    const double dx = t.delta_x();
    if (y == dx) fail(Errc::degenerate, "y equals delta*x; the distance ratio carries no information");

    std::vector<EtaFeasibility> out;
    const double cap1 = y / dx - 1.0;
    if (!(cap1 > kEtaFloor)) return out;

    const double log_lo = std::log(kEtaFloor);
    const double log_hi = std::log(cap1);
    const double ln_ratio = std::abs(std::log(dx / y));
    out.reserve(grid_size);
    for (std::size_t j = 0; j < grid_size; ++j) {
        EtaFeasibility e;
        const double frac = static_cast<double>(j + 1) / static_cast<double>(grid_size + 1);
        e.eta = std::exp(log_lo + frac * (log_hi - log_lo));
        e.cap1 = cap1;
        e.phi = phi(y, dx, e.eta);
        e.cap2 = lid_proxy * std::log(e.phi) / ln_ratio;
        e.feasible = e.eta < e.cap1 && e.eta < e.cap2;
        if (kind != BoundKind::sandwich) {
            e.directional_lo = 1.0 - 1.0 / t.delta;
            e.directional_hi = 1.0 / t.delta - 1.0;
            e.feasible = e.feasible && e.directional_lo < e.eta && e.eta < e.directional_hi;
        }
        out.push_back(e);
    }
    return out;
}

/// Whether 0 < δ < y/x holds, which the sandwich assumes. It can fail for
/// perturbations toward c.
inline bool delta_below_distance_ratio(const PerturbationTriple& t) { return t.delta < t.y / t.x; }

struct BoundResult {
    double lower = 0;
    double upper = 0;
    double eta = 0;
    double ratio_log = 0; // ln(F_b(y) / F_b(δx))
    BoundKind kind = BoundKind::sandwich;
    double x = 0;
    double y = 0;
    double delta = 0;
    bool unstable = false;
};

/// ratio_log / ln(base + η) and ratio_log / ln(base - η).
inline BoundResult bound_pair(double ratio_log, double base, double eta) {
    if (!(base - eta > 0)) fail(Errc::numeric, "base - eta must be positive for the upper bound");
    const double den_lo = std::log(base + eta);
    const double den_hi = std::log(base - eta);
    BoundResult r;
    r.eta = eta;
    r.ratio_log = ratio_log;
    r.lower = ratio_log / den_lo;
    r.upper = ratio_log / den_hi;
    const bool tiny = std::abs(den_lo) < 1e-12 || std::abs(den_hi) < 1e-12;
    const bool same_sign = (den_lo > 0) == (den_hi > 0) && (ratio_log > 0) == (den_lo > 0);
    r.unstable = tiny || !same_sign || !std::isfinite(r.lower) || !std::isfinite(r.upper);
    return r;
}

template <EvaluableCdf F>
double log_cdf_ratio(const F& cdf, const PerturbationTriple& t) {
    const double fy = cdf(t.y);
    const double fdx = cdf(t.delta_x());
    if (!(fdx > 0)) fail(Errc::numeric, "F_b(delta*x) is zero");
    if (!(fy > 0)) fail(Errc::numeric, "F_b(y) is zero");
    return std::log(fy / fdx);
}

/// Direction-agnostic sandwich on LID(b) at slack η.
template <EvaluableCdf F>
BoundResult sandwich_bounds(const PerturbationTriple& t, const F& cdf, double eta) {
    require(eta > 0, "eta must be positive");
    if (t.y == t.delta_x()) fail(Errc::degenerate, "y equals delta*x");
    auto r = bound_pair(log_cdf_ratio(cdf, t), t.y / t.delta_x(), eta);
    r.kind = BoundKind::sandwich;
    r.x = t.x;
    r.y = t.y;
    r.delta = t.delta;
    return r;
}

/// The sandwich with y/δx replaced by 1/δ. Needs δ < 1 so that
/// (1 - 1/δ, 1/δ - 1) is nonempty, and a triple that is not on the boundary.
template <EvaluableCdf F>
BoundResult directional_bounds(const PerturbationTriple& t, const F& cdf, double eta) {
    require(t.delta < 1.0, "directional bounds need delta < 1; the eta interval is empty otherwise");
    require(1.0 - 1.0 / t.delta < eta && eta < 1.0 / t.delta - 1.0, "eta outside (1 - 1/delta, 1/delta - 1)");
    require(eta > 0, "eta must be positive");
    const Direction dir = direction_class(t);
    if (dir == Direction::boundary) fail(Errc::degenerate, "triple lies on the away/toward boundary");
    if (!(1.0 / t.delta - eta > 1.0)) fail(Errc::numeric, "ln(1/delta - eta) <= 0");
    auto r = bound_pair(log_cdf_ratio(cdf, t), 1.0 / t.delta, eta);
    r.kind = dir == Direction::away ? BoundKind::directional_away : BoundKind::directional_toward;
    r.x = t.x;
    r.y = t.y;
    r.delta = t.delta;
    return r;
}

struct AveragedBounds {
    double lower_mean = std::numeric_limits<double>::quiet_NaN();
    double upper_mean = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_feasible = 0;  // feasible η that entered the average
    std::size_t n_unstable = 0;  // feasible η dropped for instability
};

/// Mean lower/upper sandwich bound over the feasible η of the grid.
template <EvaluableCdf F>
AveragedBounds averaged_bounds(const PerturbationTriple& t, const F& cdf, double lid_proxy, std::size_t grid_size) {
    AveragedBounds out;
    if (t.y == t.delta_x()) return out;
    const auto grid = eta_grid(t, lid_proxy, BoundKind::sandwich, grid_size);
    CompensatedSum lo;
    CompensatedSum hi;
    double ratio_log = 0;
    bool have_ratio = false;
    for (const auto& e : grid) {
        if (!e.feasible) continue;
        if (!have_ratio) {
            ratio_log = log_cdf_ratio(cdf, t);
            have_ratio = true;
        }
        const auto r = bound_pair(ratio_log, t.y / t.delta_x(), e.eta);
        if (r.unstable) {
            ++out.n_unstable;
            continue;
        }
        lo.add(r.lower);
        hi.add(r.upper);
        ++out.n_feasible;
    }
    if (out.n_feasible > 0) {
        out.lower_mean = lo.value() / static_cast<double>(out.n_feasible);
        out.upper_mean = hi.value() / static_cast<double>(out.n_feasible);
    }
    return out;
}

} // namespace lidbounds
