#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgetune {

struct RootOptions {
    double x_rel_tol = 1e-12;  // stop when bracket width <= x_abs_tol + x_rel_tol * max(|a|,|b|)
    double x_abs_tol = 0.0;
    double f_tol = 0.0;        // optional early stop on |f(x)| <= f_tol
    int max_iter = 200;
};

struct RootResult {
    double x = std::numeric_limits<double>::quiet_NaN();
    double fx = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
};

namespace detail {
inline bool same_sign(double a, double b) { return (a < 0.0) == (b < 0.0); }
inline double bracket_tol(double a, double b, const RootOptions& opt) {
    return opt.x_abs_tol + opt.x_rel_tol * std::max(std::fabs(a), std::fabs(b));
}
}  // namespace detail

// Illinois-damped false position on a sign-changing bracket [lo, hi].
// Precondition: flo and fhi have opposite signs (a zero endpoint is returned as-is).
// Superlinear on smooth monotone functions, never leaves the bracket.
template <class F>
RootResult bracketed_root(F&& f, double lo, double hi, double flo, double fhi,
                          const RootOptions& opt = {}) {
    RootResult res;
    if (flo == 0.0) { res.x = lo; res.fx = 0.0; res.converged = true; return res; }
    if (fhi == 0.0) { res.x = hi; res.fx = 0.0; res.converged = true; return res; }
    if (detail::same_sign(flo, fhi) || !(lo < hi)) return res;  // not a bracket

    double a = lo, b = hi, fa = flo, fb = fhi;
    int side = 0;  // -1: last replaced lower end, +1: last replaced upper end
    double x = 0.5 * (a + b), fx = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < opt.max_iter; ++k) {
        // false position needs finite endpoint values; an infinite one (a
        // pole inside the search range) degrades that step to bisection
        if (std::isfinite(fa) && std::isfinite(fb)) {
            x = (a * fb - b * fa) / (fb - fa);
            if (!std::isfinite(x) || x <= a || x >= b) x = 0.5 * (a + b);
        } else {
            x = 0.5 * (a + b);
        }
        fx = f(x);
        ++res.iterations;
        if (fx == 0.0 || std::fabs(fx) <= opt.f_tol) {
            res.x = x; res.fx = fx; res.converged = true; return res;
        }
        if (detail::same_sign(fx, fa)) {
            a = x; fa = fx;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = x; fb = fx;
            if (side == +1) fa *= 0.5;
            side = +1;
        }
        if (b - a <= detail::bracket_tol(a, b, opt)) {
            res.x = x; res.fx = fx; res.converged = true; return res;
        }
    }
    res.x = x; res.fx = fx; res.converged = false;
    return res;
}

template <class F>
RootResult bracketed_root(F&& f, double lo, double hi, const RootOptions& opt = {}) {
    return bracketed_root(f, lo, hi, f(lo), f(hi), opt);
}

// Grows hi geometrically until f changes sign relative to flo.
// Returns true when a bracket was found; hi/fhi hold the new endpoint.
template <class F>
bool expand_bracket_up(F&& f, double /*lo*/, double flo, double& hi, double& fhi,
                       double factor = 4.0, int max_expand = 200) {
    for (int k = 0; k < max_expand; ++k) {
        if (!detail::same_sign(flo, fhi) || fhi == 0.0) return true;
        hi *= factor;
        fhi = f(hi);
        if (!std::isfinite(fhi)) return false;
    }
    return !detail::same_sign(flo, fhi) || fhi == 0.0;
}

// Shrinks lo geometrically toward zero until f changes sign relative to fhi.
template <class F>
bool expand_bracket_down(F&& f, double& lo, double& flo, double /*hi*/, double fhi,
                         double factor = 4.0, int max_expand = 200) {
    for (int k = 0; k < max_expand; ++k) {
        if (!detail::same_sign(flo, fhi) || flo == 0.0) return true;
        lo /= factor;
        flo = f(lo);
        if (!std::isfinite(flo)) return false;
    }
    return !detail::same_sign(flo, fhi) || flo == 0.0;
}

// Unique positive root of c3*x^3 + c2*x^2 = rhs with c3 >= 0, c2 >= 0 (not
// both zero), rhs > 0. Substituting x = s*u with s the pure-cubic root turns
// the equation into u^3 + a*u^2 = 1, which stays in [0, 1] territory no matter
// how extreme the coefficients are; the ratios for s and a are taken root by
// root so nothing overflows on the way. Newton from an overshooting start
// descends monotonically (the left side is increasing and convex).
inline double increasing_cubic_root(double c3, double c2, double rhs) {
    if (!(rhs > 0.0)) return 0.0;
    if (!(c3 > 0.0)) return std::sqrt(rhs) / std::sqrt(c2);
    double s = std::cbrt(rhs) / std::cbrt(c3);
    if (!(c2 > 0.0)) return s;
    double a = c2 / c3 / s;
    if (!std::isfinite(a)) return std::sqrt(rhs) / std::sqrt(c2);
    double u = a > 1.0 ? 1.0 / std::sqrt(a) : 1.0;  // g(u0) >= 0 in both cases
    for (int k = 0; k < 100; ++k) {
        double g = (u + a) * u * u - 1.0;
        double dg = (3.0 * u + 2.0 * a) * u;
        double step = g / dg;
        u -= step;
        if (std::fabs(step) <= 1e-15 * u) break;
    }
    return s * u;
}

}  // namespace edgetune
