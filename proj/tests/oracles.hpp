#pragma once

// Independent numerical oracles used by the test and acceptance suites.
// Nothing here shares code with the library paths it checks: the spectral
// radius is recomputed from the characteristic polynomial (Faddeev-LeVerrier
// coefficients + downward root bracketing), and the reference integrator is
// a standalone RK4.

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "delaystab/stability.hpp"

namespace oracles {

using delaystab::Mat5;
using delaystab::Vec5;

inline Mat5 mat_mul(const Mat5& a, const Mat5& b) {
    Mat5 out{};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 5; ++k) {
            const double aik = a[i][k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < 5; ++j) out[i][j] += aik * b[k][j];
        }
    return out;
}

inline double trace(const Mat5& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < 5; ++i) t += m[i][i];
    return t;
}

// Coefficients c of det(lambda I - A) = lambda^5 + c[1] lambda^4 + ... + c[5]
// via the Faddeev-LeVerrier recursion.
inline std::array<double, 6> characteristic_polynomial(const Mat5& a) {
    std::array<double, 6> c{};
    c[0] = 1.0;
    Mat5 m{};
    for (std::size_t k = 1; k <= 5; ++k) {
        // m <- a * (m + c[k-1] * I)
        Mat5 shifted = m;
        for (std::size_t i = 0; i < 5; ++i) shifted[i][i] += c[k - 1];
        m = mat_mul(a, shifted);
        c[k] = -trace(m) / static_cast<double>(k);
    }
    return c;
}

inline double eval_poly(const std::array<double, 6>& c, double lambda) {
    double v = c[0];
    for (std::size_t k = 1; k <= 5; ++k) v = v * lambda + c[k];
    return v;
}

// Largest real root of the characteristic polynomial. For a nonnegative
// matrix this equals the spectral radius (the Perron root is real and
// dominates every other real eigenvalue).
inline double spectral_radius(const Mat5& a) {
    const auto poly = characteristic_polynomial(a);
    double row_bound = 0.0;
    for (const auto& row : a) {
        double s = 0.0;
        for (double v : row) s += v;
        row_bound = std::max(row_bound, s);
    }
    double hi = row_bound + 1.0;
    const int scan_steps = 50000;
    const double dx = hi / scan_steps;

    double best_abs = std::fabs(eval_poly(poly, 0.0));
    double best_at = 0.0;
    double upper = hi;
    double lower = -1.0;  // sentinel: no bracket yet
    for (int i = 1; i <= scan_steps; ++i) {
        const double x = hi - i * dx;
        const double p = eval_poly(poly, x);
        if (std::fabs(p) < best_abs) {
            best_abs = std::fabs(p);
            best_at = x;
        }
        if (p <= 0.0) {
            lower = x;
            break;
        }
        upper = x;
    }
    if (lower < 0.0) {
        // no sign change: either rho = 0 or a root the polynomial only
        // touches; fall back to the scan minimum
        return best_abs <= 1e-9 * std::max(1.0, row_bound) ? best_at : 0.0;
    }
    for (int i = 0; i < 200 && upper - lower > 1e-15 * std::max(1.0, upper); ++i) {
        const double mid = 0.5 * (lower + upper);
        if (eval_poly(poly, mid) <= 0.0)
            lower = mid;
        else
            upper = mid;
    }
    return 0.5 * (lower + upper);
}

// Residual of (I - A) z = f, infinity norm; independent check of a solve.
inline double inverse_residual(const Mat5& a, const Vec5& z, const Vec5& f) {
    double r = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double s = z[i];
        for (std::size_t j = 0; j < 5; ++j) s -= a[i][j] * z[j];
        r = std::max(r, std::fabs(s - f[i]));
    }
    return r;
}

// Random nonnegative 5x5 matrix with zero diagonal; `scale` multiplies
// uniform [0,1) entries.
inline Mat5 random_matrix(std::mt19937& rng, double scale) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Mat5 m{};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) m[i][j] = i == j ? 0.0 : scale * uniform(rng);
    return m;
}

// ---------------------------------------------------------------------------
// Closed forms for the integrator checks.

// x'' + 2x' + x = 0, x(0) = 0, x'(0) = 1.
inline double critically_damped(double t) { return t * std::exp(-t); }

// int_0^t X(t,s) * 1 ds for the kernel of x'' + 2x' + x = 0.
inline double kernel_integral_a2_b1(double t) { return 1.0 - std::exp(-t) * (1.0 + t); }

// int_0^t X(t,s) * 0.25 ds for the kernel of x'' + x' + 0.25 x = 0
// (boundary case alpha^2 = 4B, double root -1/2).
inline double kernel_integral_boundary(double t) {
    return 1.0 - std::exp(-0.5 * t) * (0.5 * t + 1.0);
}

// ---------------------------------------------------------------------------
// Standalone RK4 on the zero-delay coupled system, mirroring the arithmetic
// of the production right-hand side exactly (used for the bitwise
// zero-delay-reduction check).

struct ReferenceState {
    double x, dx, u;
};

template <typename A1, typename A2, typename A3, typename B1, typename B2, typename F1,
          typename F2>
inline std::vector<ReferenceState> reference_rk4(A1&& a1, A2&& a2, A3&& a3, B1&& b1, B2&& b2,
                                                 F1&& f1, F2&& f2, ReferenceState y0, double t0,
                                                 double t_end, double h) {
    auto rhs = [&](double t, const ReferenceState& sy) {
        const double ddx = f1(t) - a1(t) * sy.dx - a2(t) * sy.x - a3(t) * sy.u;
        const double du = f2(t) - b1(t) * sy.u - b2(t) * sy.x;
        return ReferenceState{sy.dx, ddx, du};
    };
    const auto n = static_cast<std::size_t>(std::ceil((t_end - t0) / h - 1e-9));
    std::vector<ReferenceState> out(n + 1);
    out[0] = y0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) * h;
        const ReferenceState y = out[i];
        const ReferenceState k1 = rhs(t, y);
        const ReferenceState y2{y.x + 0.5 * h * k1.x, y.dx + 0.5 * h * k1.dx,
                                y.u + 0.5 * h * k1.u};
        const ReferenceState k2 = rhs(t + 0.5 * h, y2);
        const ReferenceState y3{y.x + 0.5 * h * k2.x, y.dx + 0.5 * h * k2.dx,
                                y.u + 0.5 * h * k2.u};
        const ReferenceState k3 = rhs(t + 0.5 * h, y3);
        const ReferenceState y4{y.x + h * k3.x, y.dx + h * k3.dx, y.u + h * k3.u};
        const ReferenceState k4 = rhs(t + h, y4);
        out[i + 1] = {y.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                      y.dx + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
                      y.u + (h / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u)};
    }
    return out;
}

}  // namespace oracles
