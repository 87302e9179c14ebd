#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "lidbounds/dataset.hpp"
#include "lidbounds/error.hpp"
#include "lidbounds/metric.hpp"

namespace lidbounds {

/// Benign point a, its perturbation b = a + δx·u, and a benign reference c,
/// with x = |a - c|, y = |b - c| and θ the angle between b - a and c - a.
struct PerturbationTriple {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    double x = 0;
    double y = 0;
    double delta = 0;
    double theta = 0;     // in [0, π]
    double cos_theta = 1; // kept separately; acos loses precision near 0 and π

    double delta_x() const noexcept { return delta * x; }
};

enum class Direction { toward, away, boundary };

inline std::string_view to_string(Direction d) noexcept {
    switch (d) {
        case Direction::toward: return "toward";
        case Direction::away: return "away";
        case Direction::boundary: return "boundary";
    }
    return "?";
}

inline double norm(Point v) {
    double s = 0.0;
    for (double t : v) s += t * t;
    return std::sqrt(s);
}

inline PerturbationTriple make_triple(Point a, Point direction, double delta, Point c) {
    require(a.size() == c.size() && a.size() == direction.size(), "triple points must share one dimension");
    require(delta > 0 && std::isfinite(delta), "delta must be positive");
    const double dn = norm(direction);
    require(dn > 0, "zero perturbation direction");
    require(std::abs(dn - 1.0) <= 1e-9, "perturbation direction must have unit length");

    PerturbationTriple t;
    t.x = distance(a, c);
    if (!(t.x > 0)) fail(Errc::degenerate, "reference point coincides with the benign point");
    t.delta = delta;
    t.a.assign(a.begin(), a.end());
    t.c.assign(c.begin(), c.end());
    t.b.resize(a.size());
    const double step = delta * t.x;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        t.b[i] = a[i] + step * direction[i];
        dot += direction[i] * (c[i] - a[i]);
    }
    t.y = distance(t.b, t.c);
    t.cos_theta = std::clamp(dot / t.x, -1.0, 1.0);
    t.theta = std::acos(t.cos_theta);
    return t;
}

/// Planar triple a = (0,0), c = (x,0), b = δx(cos θ, sin θ).
inline PerturbationTriple planar_triple(double x, double delta, double theta) {
    require(x > 0, "x must be positive");
    const double a[2] = {0.0, 0.0};
    const double c[2] = {x, 0.0};
    const double u[2] = {std::cos(theta), std::sin(theta)};
    return make_triple(a, u, delta, c);
}

/// y from the law of cosines: y² = δ²x² + x² - 2δx² cos θ.
inline double law_of_cosines_y(double x, double delta, double cos_theta) {
    return x * std::sqrt(std::max(0.0, delta * delta + 1.0 - 2.0 * delta * cos_theta));
}

/// Classifies by δ against 2cos θ: away when δ > 2cos θ, toward when
/// δ < 2cos θ (which forces cos θ > 0). Boundary when |y - x| <= 1e-9 x,
/// evaluated from (δ, θ) alone via y/x = sqrt(δ² + 1 - 2δ cos θ).
inline Direction direction_class(double delta, double cos_theta) {
    const double gap = delta - 2.0 * cos_theta;
    const double y_over_x = std::sqrt(std::max(0.0, delta * delta + 1.0 - 2.0 * delta * cos_theta));
    // (y - x)/x = δ·gap / (y/x + 1)
    if (std::abs(delta * gap) / (y_over_x + 1.0) <= 1e-9) return Direction::boundary;
    return gap > 0 ? Direction::away : Direction::toward;
}

inline Direction direction_class(const PerturbationTriple& t) { return direction_class(t.delta, t.cos_theta); }

} // namespace lidbounds
