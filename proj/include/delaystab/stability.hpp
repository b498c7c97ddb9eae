#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "delaystab/model.hpp"

namespace delaystab {

using Vec5 = std::array<double, 5>;
using Mat5 = std::array<std::array<double, 5>, 5>;

/// The 5x5 nonnegative majorant matrix. Row/column order follows the
/// sup-norm vector (x, x', x'', u, u'); every diagonal entry is zero.
using StabilityMatrix = Mat5;

inline Mat5 identity5() {
    Mat5 m{};
    for (std::size_t i = 0; i < 5; ++i) m[i][i] = 1.0;
    return m;
}

inline Vec5 mat_vec(const Mat5& m, const Vec5& v) {
    Vec5 out{};
    for (std::size_t i = 0; i < 5; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += m[i][j] * v[j];
        out[i] = s;
    }
    return out;
}

inline double max_abs_entry(const Mat5& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s = std::max(s, std::fabs(v));
    return s;
}

/// Assembles the majorant matrix from the norm table and the lag bounds of
/// the delayed x', x and u(g1) terms:
///
///   ( 0            tau2   tau1*||a1/a2||  ||a3/a2||   0      )
///   ( ||a2/a1||    0      tau1            ||a3/a1||   0      )
///   ( ||a2||       ||a1|| 0               ||a3||      0      )
///   ( ||b2/b1||    0      0               0           sigma1 )
///   ( ||b2||       0      0               ||b1||      0      )
inline StabilityMatrix build_matrix(const NormTable& norms, double tau1, double tau2,
                                    double sigma1) {
    if (tau1 < 0.0 || tau2 < 0.0 || sigma1 < 0.0)
        throw std::invalid_argument("lag bounds must be nonnegative");
    for (double v : {norms.n_a1, norms.n_a2, norms.n_a3, norms.n_b1, norms.n_b2,
                     norms.r_a2_a1, norms.r_a1_a2, norms.r_a3_a1, norms.r_a3_a2, norms.r_b2_b1})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("norm table entries must be finite and nonnegative");
    StabilityMatrix m{};
    m[0] = {0.0, tau2, tau1 * norms.r_a1_a2, norms.r_a3_a2, 0.0};
    m[1] = {norms.r_a2_a1, 0.0, tau1, norms.r_a3_a1, 0.0};
    m[2] = {norms.n_a2, norms.n_a1, 0.0, norms.n_a3, 0.0};
    m[3] = {norms.r_b2_b1, 0.0, 0.0, 0.0, sigma1};
    m[4] = {norms.n_b2, 0.0, 0.0, norms.n_b1, 0.0};
    return m;
}

/// Raised when power iteration fails to converge; carries the last two
/// estimates of the radius.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(double previous, double last)
        : std::runtime_error("power iteration did not converge; last estimates " +
                             std::to_string(previous) + ", " + std::to_string(last)),
          previous_(previous), last_(last) {}

    double previous_estimate() const noexcept { return previous_; }
    double last_estimate() const noexcept { return last_; }

private:
    double previous_, last_;
};

/// Spectral radius of a nonnegative matrix by power iteration on m + eps*I
/// (eps = 1e-12 breaks modulus ties; the shift is subtracted from the
/// result). Three exits:
///   - the Collatz-Wielandt bracket min_i (Mx)_i/x_i <= rho <= max_i
///     (Mx)_i/x_i closes to tol (rigorous; fires for primitive matrices);
///   - Aitken extrapolation of the smoothed growth estimate
///     mu_k = sqrt(lambda_k lambda_{k-1}) settles (reducible and slowly
///     coupled matrices; the two-step product also resolves 2-periodic
///     dominant classes, where lambda_k itself oscillates forever);
///   - mu_k stagnates at floating-point noise for 10 iterations.
inline double spectral_radius(const Mat5& m, double tol = 1e-10, int max_iterations = 100000) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    for (const auto& row : m)
        for (double v : row)
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("spectral_radius requires a nonnegative matrix");

    constexpr double shift = 1e-12;
    Mat5 shifted = m;
    for (std::size_t i = 0; i < 5; ++i) shifted[i][i] += shift;

    Vec5 x{1.0, 1.0, 1.0, 1.0, 1.0};
    const double eps = std::numeric_limits<double>::epsilon();
    double lambda_prev = 0.0, mu = 0.0, mu_prev1 = 0.0, mu_prev2 = 0.0;
    double aitken_prev1 = 0.0, aitken_prev2 = 0.0;
    int have_mu = 0, have_aitken = 0, settled = 0, stagnant = 0;
    for (int iter = 0; iter < max_iterations; ++iter) {
        const Vec5 y = mat_vec(shifted, x);
        double cw_min = std::numeric_limits<double>::infinity();
        double cw_max = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            const double ratio = y[i] / x[i];  // x stays positive: diagonal shift
            cw_min = std::min(cw_min, ratio);
            cw_max = std::max(cw_max, ratio);
        }
        double lambda = 0.0;
        for (double v : y) lambda = std::max(lambda, v);
        for (std::size_t i = 0; i < 5; ++i) x[i] = y[i] / lambda;

        if (cw_max - cw_min <= tol)
            return std::max(0.5 * (cw_min + cw_max) - shift, 0.0);

        if (iter >= 1) {
            mu = std::sqrt(lambda * lambda_prev);
            ++have_mu;
            if (have_mu >= 2) {
                const double delta = std::fabs(mu - mu_prev1);
                if (delta <= 32.0 * eps * std::max(1.0, mu)) {
                    if (++stagnant >= 10) return std::max(mu - shift, 0.0);
                } else {
                    stagnant = 0;
                }
            }
            if (have_mu >= 3) {
                const double d1 = mu - mu_prev1;
                const double d2 = mu_prev1 - mu_prev2;
                const double denom = d1 - d2;
                if (std::fabs(denom) > 4.0 * eps * std::max(1.0, std::fabs(mu))) {
                    const double accelerated = mu - d1 * d1 / denom;
                    if (have_aitken >= 2 && accelerated >= 0.0 &&
                        std::fabs(accelerated - aitken_prev1) <= 0.125 * tol &&
                        std::fabs(accelerated - aitken_prev2) <= 0.125 * tol &&
                        std::fabs(accelerated - mu) <= std::max(1.0, mu)) {
                        if (++settled >= 3) return std::max(accelerated - shift, 0.0);
                    } else {
                        settled = 0;
                    }
                    aitken_prev2 = aitken_prev1;
                    aitken_prev1 = accelerated;
                    ++have_aitken;
                } else {
                    settled = 0;
                }
            }
            mu_prev2 = mu_prev1;
            mu_prev1 = mu;
        }
        lambda_prev = lambda;
    }
    throw ConvergenceError(mu_prev1, mu);
}

struct MMatrixCheck {
    bool is_m_matrix = false;
    Vec5 leading_minors{};
};

namespace detail {

// Determinant of the leading k x k block by Gaussian elimination with
// partial pivoting: product of pivots times the row-swap sign.
inline double leading_minor(const Mat5& b, std::size_t k) {
    std::array<std::array<double, 5>, 5> a = b;
    double sign = 1.0;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) return 0.0;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            sign = -sign;
        }
        for (std::size_t r = col + 1; r < k; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < k; ++c) a[r][c] -= f * a[col][c];
        }
    }
    double det = sign;
    for (std::size_t i = 0; i < k; ++i) det *= a[i][i];
    return det;
}

}  // namespace detail

/// Tests whether b is a nonsingular M-matrix: off-diagonal entries must be
/// nonpositive (up to tol) and all five leading principal minors positive.
/// The positivity threshold is scaled by the matrix max-norm.
inline MMatrixCheck is_m_matrix(const Mat5& b, double tol = 1e-12) {
    if (tol < 0.0) throw std::invalid_argument("tol must be nonnegative");
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            if (i != j && b[i][j] > tol)
                throw std::invalid_argument(
                    "off-diagonal entry b[" + std::to_string(i + 1) + "][" +
                    std::to_string(j + 1) + "] = " + std::to_string(b[i][j]) +
                    " is positive; not an M-matrix sign pattern");
    MMatrixCheck check;
    const double threshold = tol * max_abs_entry(b);
    check.is_m_matrix = true;
    for (std::size_t k = 1; k <= 5; ++k) {
        const double minor = detail::leading_minor(b, k);
        check.leading_minors[k - 1] = minor;
        if (!(minor > threshold)) check.is_m_matrix = false;
    }
    return check;
}

/// Solves a x = rhs by Gaussian elimination with partial pivoting.
inline Vec5 solve_linear(Mat5 a, Vec5 rhs) {
    for (std::size_t col = 0; col < 5; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < 5; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) throw std::domain_error("singular linear system");
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(rhs[pivot], rhs[col]);
        }
        for (std::size_t r = col + 1; r < 5; ++r) {
            const double f = a[r][col] / a[col][col];
            rhs[r] -= f * rhs[col];
            for (std::size_t c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
        }
    }
    Vec5 x{};
    for (std::size_t i = 5; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t j = i + 1; j < 5; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

enum class Verdict { certified_stable, not_certified };
enum class Method { coupled_matrix, corollary, decoupled, first_order };

inline const char* to_string(Verdict v) {
    return v == Verdict::certified_stable ? "certified_stable" : "not_certified";
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::coupled_matrix: return "coupled_matrix";
        case Method::corollary: return "corollary";
        case Method::decoupled: return "decoupled";
        case Method::first_order: return "first_order";
    }
    return "unknown";
}

/// Outcome of a certification run. When the hypothesis checks fail the
/// algebraic fields (matrix, radius, minors) are not populated and
/// `algebra_computed` is false.
struct Certificate {
    Method method = Method::coupled_matrix;
    Verdict verdict = Verdict::not_certified;
    bool marginal = false;
    std::string failure_reason;
    ValidationReport hypothesis_report;
    NormTable norms;
    StabilityMatrix matrix{};
    double spectral_radius = 0.0;
    Vec5 leading_minors{};
    bool algebra_computed = false;
    std::optional<double> corollary_lhs;
    double t0 = 0.0;
    double tau1 = 0.0, tau2 = 0.0, sigma1 = 0.0;
};

// Certificates within this distance of the decision boundary are reported
// with the `marginal` flag and exempt from the two-decider agreement check.
inline constexpr double kMarginalBand = 1e-9;

namespace detail {

inline void run_matrix_tests(Certificate& cert, double spectral_tol, double minor_tol) {
    cert.spectral_radius = delaystab::spectral_radius(cert.matrix, spectral_tol);
    Mat5 b = identity5();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) b[i][j] -= cert.matrix[i][j];
    const MMatrixCheck check = is_m_matrix(b, minor_tol);
    cert.leading_minors = check.leading_minors;
    cert.algebra_computed = true;

    double min_minor = check.leading_minors[0];
    for (double v : check.leading_minors) min_minor = std::min(min_minor, v);
    const double scale = std::max(1.0, max_abs_entry(b));
    cert.marginal = std::fabs(1.0 - cert.spectral_radius) < kMarginalBand ||
                    std::fabs(min_minor) < kMarginalBand * scale;

    const bool radius_ok = cert.spectral_radius < 1.0;
    if (!cert.marginal && radius_ok != check.is_m_matrix)
        throw std::logic_error(
            "internal error: spectral-radius and leading-minor tests disagree (r = " +
            std::to_string(cert.spectral_radius) + ")");

    if (radius_ok && check.is_m_matrix) {
        cert.verdict = Verdict::certified_stable;
    } else {
        cert.verdict = Verdict::not_certified;
        cert.failure_reason = radius_ok ? "leading minor of I - A not positive"
                                        : "spectral radius >= 1";
    }
}

}  // namespace detail

/// Full certification: validates the hypotheses, builds the norm table and
/// majorant matrix, and runs both algebraic tests (spectral radius < 1 and
/// leading minors of I - A positive). The two tests must agree away from the
/// marginal band; disagreement is an internal error. Systems with a3 = b2 = 0
/// decouple and are reported with Method::decoupled.
inline Certificate certify(const SystemSpec& spec, NormMode mode = NormMode::declared,
                           double grid_step = 0.0, double horizon = 0.0,
                           double spectral_tol = 1e-10, double minor_tol = 1e-12) {
    Certificate cert;
    cert.t0 = spec.t0;
    cert.tau1 = spec.h1.max_lag;
    cert.tau2 = spec.h2.max_lag;
    cert.sigma1 = spec.g1.max_lag;
    cert.method = (spec.a3.magnitude_bound() == 0.0 && spec.b2.magnitude_bound() == 0.0)
                      ? Method::decoupled
                      : Method::coupled_matrix;
    cert.hypothesis_report = validate(spec, grid_step, horizon);
    if (!cert.hypothesis_report.all_passed()) {
        cert.verdict = Verdict::not_certified;
        cert.failure_reason = cert.hypothesis_report.first_failure()->name;
        return cert;
    }
    cert.norms = norm_bounds(spec, mode, grid_step, horizon);
    cert.matrix = build_matrix(cert.norms, cert.tau1, cert.tau2, cert.sigma1);
    detail::run_matrix_tests(cert, spectral_tol, minor_tol);
    return cert;
}

/// Specialized certificate for systems whose x' and x terms carry no delay
/// (h1 = h2 = identity). Certifies through the scalar criterion
///   sigma1 ||b1|| + sigma1 ||b2|| ||a3/a2|| + ||a3/a2|| ||b2/b1|| < 1
/// evaluated with declared bounds, and cross-checks with the full matrix
/// test on the specialized matrix (tau1 = tau2 = 0).
inline Certificate certify_corollary(const SystemSpec& spec, double grid_step = 0.0,
                                     double horizon = 0.0, double spectral_tol = 1e-10,
                                     double minor_tol = 1e-12) {
    if (spec.h1.max_lag != 0.0 || spec.h2.max_lag != 0.0)
        throw std::invalid_argument(
            "certify_corollary requires identically zero lags on the x' and x terms "
            "(h1.max_lag = h2.max_lag = 0)");
    Certificate cert;
    cert.method = Method::corollary;
    cert.t0 = spec.t0;
    cert.sigma1 = spec.g1.max_lag;
    cert.hypothesis_report = validate(spec, grid_step, horizon);
    if (!cert.hypothesis_report.all_passed()) {
        cert.verdict = Verdict::not_certified;
        cert.failure_reason = cert.hypothesis_report.first_failure()->name;
        return cert;
    }
    cert.norms = norm_bounds(spec, NormMode::declared);
    const double lhs = cert.sigma1 * cert.norms.n_b1 +
                       cert.sigma1 * cert.norms.n_b2 * cert.norms.r_a3_a2 +
                       cert.norms.r_a3_a2 * cert.norms.r_b2_b1;
    cert.corollary_lhs = lhs;

    // cross-check via the specialized majorant matrix
    cert.matrix = build_matrix(cert.norms, 0.0, 0.0, cert.sigma1);
    detail::run_matrix_tests(cert, spectral_tol, minor_tol);

    cert.marginal = cert.marginal || std::fabs(lhs - 1.0) < kMarginalBand;
    // det(I - A) equals 1 - lhs for this matrix, so the two routes must agree
    if (!cert.marginal && (lhs < 1.0) != (cert.verdict == Verdict::certified_stable))
        throw std::logic_error(
            "internal error: corollary bound and matrix test disagree (lhs = " +
            std::to_string(lhs) + ", r = " + std::to_string(cert.spectral_radius) + ")");
    if (lhs < 1.0) {
        cert.verdict = Verdict::certified_stable;
        cert.failure_reason.clear();
    } else {
        cert.verdict = Verdict::not_certified;
        cert.failure_reason = "corollary left-hand side >= 1";
    }
    return cert;
}

/// Delay-size test for the scalar equation u' + b1(t) u(g1(t)) = 0:
/// sigma1 * B1 < 1, or < 3/2 with the sharper constant enabled.
struct FirstOrderCheck {
    bool passed = false;
    double product = 0.0;
    double limit = 1.0;
    bool three_halves = false;
    std::string note;
};

inline FirstOrderCheck check_first_order(double b1_upper, double sigma1,
                                         bool use_three_halves = false) {
    if (!(b1_upper > 0.0)) throw std::invalid_argument("b1 upper bound must be positive");
    if (sigma1 < 0.0) throw std::invalid_argument("sigma1 must be nonnegative");
    FirstOrderCheck check;
    check.three_halves = use_three_halves;
    check.limit = use_three_halves ? 1.5 : 1.0;
    check.product = sigma1 * b1_upper;
    check.passed = check.product < check.limit;
    if (use_three_halves)
        check.note = "limit 3/2 is the sharper known constant for first-order delay equations";
    return check;
}

}  // namespace delaystab
