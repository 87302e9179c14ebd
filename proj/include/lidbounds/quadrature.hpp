#pragma once

#include <algorithm>
#include <cmath>

#include "lidbounds/error.hpp"

namespace lidbounds {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole, double eps,
                    int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0) fail(Errc::numeric, "adaptive Simpson quadrature did not converge");
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

} // namespace detail

/// Adaptive composite Simpson on [a, b] (b < a gives the signed integral).
/// The error target is rel_tol times the magnitude of a 16-panel estimate of
/// ∫|f|, with abs_floor guarding integrands that vanish identically.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double rel_tol = 1e-8, double abs_floor = 1e-300,
                        int max_depth = 48) {
    if (a == b) return 0.0;
    constexpr int panels = 16;
    const double h = (b - a) / panels;
    double scale = 0.0;
    for (int i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 0.5 : 1.0;
        scale += w * std::abs(f(a + i * h));
    }
    scale *= std::abs(h);
    const double eps = std::max(rel_tol * scale, abs_floor);

    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, eps, max_depth);
}

} // namespace lidbounds
