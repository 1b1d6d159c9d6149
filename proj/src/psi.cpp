#include "speclab/psi.hpp"

#include "speclab/errors.hpp"
#include "speclab/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace speclab {

namespace {

double bump_core(double t, double a, int deriv) {
    const double u = a * a - t * t;
    if (u <= 0.0) return 0.0;
    const double w = std::exp(-1.0 / u);
    const double t2 = t * t, t4 = t2 * t2, t6 = t4 * t2, t8 = t4 * t4;
    const double a2 = a * a, a4 = a2 * a2, a6 = a4 * a2, a8 = a4 * a4;
    const double a10 = a8 * a2, a12 = a8 * a4;
    const double u2 = u * u, u4 = u2 * u2;
    switch (deriv) {
    case 0:
        return w * u4 * u4 * u2;
    case 1:
        return 2.0 * t * w * u4 * u4 * (10.0 * t2 - 10.0 * a2 - 1.0);
    case 2:
        return -2.0 * w * u4 * u2 *
               (10.0 * a6 + a4 * (1.0 - 210.0 * t2) +
                a2 * (390.0 * t4 - 38.0 * t2) - 190.0 * t6 + 37.0 * t4 -
                2.0 * t2);
    case 3:
        return 4.0 * t * w * u4 *
               (270.0 * a8 + a6 * (54.0 - 2520.0 * t2) +
                a4 * (5940.0 * t4 - 594.0 * t2 + 3.0) -
                54.0 * a2 * (100.0 * t6 - 19.0 * t4 + t2) +
                t2 * (1710.0 * t6 - 486.0 * t4 + 51.0 * t2 - 2.0));
    default:
        return 4.0 * w * u2 *
               (270.0 * a12 - 54.0 * a10 * (190.0 * t2 - 1.0) +
                3.0 * a8 * (22470.0 * t4 - 954.0 * t2 + 1.0) -
                12.0 * a6 * t2 * (14370.0 * t4 - 1581.0 * t2 + 25.0) +
                6.0 * a4 * t2 * (35235.0 * t6 - 6714.0 * t4 + 371.0 * t2 - 2.0) -
                2.0 * a2 * t4 * (62730.0 * t6 - 17415.0 * t4 + 1782.0 * t2 - 68.0) +
                t4 * (29070.0 * t8 - 10710.0 * t6 + 1635.0 * t4 - 124.0 * t2 + 4.0));
    }
}

// eta(s) = E(|s|) (1 - b s^2 + c s^4); E depends on t^2 only, so this is the
// even extension the finite-difference probes below rely on.
double eta_value(double s, double a, double b, double c) {
    const double s2 = s * s;
    return bump_core(std::abs(s), a, 0) * (1.0 - b * s2 + c * s2 * s2);
}

// |sum w_k eta(k h)| / sum |w_k eta(k h)|: the depth of cancellation the
// stencil achieves, which is the honest zero-residual at these amplitudes.
double eta_audit(double a, double b, double c, int order, double h) {
    const auto [offsets, weights] = central_fd_stencil(order, 8, h);
    double acc = 0.0, mag = 0.0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        const double term = weights[k] * eta_value(offsets[k] * h, a, b, c);
        acc += term;
        mag += std::abs(term);
    }
    return std::abs(acc) / std::max(mag, std::numeric_limits<double>::min());
}

double poly_deriv(double s, double b, double c, int deriv) {
    const double s2 = s * s;
    switch (deriv) {
    case 0: return 1.0 - b * s2 + c * s2 * s2;
    case 1: return -2.0 * b * s + 4.0 * c * s2 * s;
    case 2: return -2.0 * b + 12.0 * c * s2;
    case 3: return 24.0 * c * s;
    default: return 24.0 * c;
    }
}

constexpr int kBinom[5][5] = {
    {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0},
    {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};

} // namespace

double bump_eval(double t, double a, int deriv) {
    if (!(a > 0.0)) throw DomainError("bump_eval: a must be positive");
    if (deriv < 0 || deriv > 4)
        throw OrderError("bump_eval: derivatives available up to order 4");
    if (!(t >= 0.0 && t <= 4.0 * a / 3.0))
        throw DomainError("bump_eval: t outside [0, 4a/3]");
    return bump_core(t, a, deriv);
}

CorrectionCoeffs correction_coeffs(double a) {
    if (!(a > 0.0)) throw DomainError("correction_coeffs: a must be positive");
    const double e0 = bump_core(0.0, a, 0);
    if (e0 < std::numeric_limits<double>::min())
        throw SingularOperatorError(
            "correction_coeffs: E(0) underflows, the coefficient system is "
            "degenerate at this width");
    const double e2 = bump_core(0.0, a, 2);
    const double e4 = bump_core(0.0, a, 4);

    // eta''(0)   = E''(0)   - 2 b E(0)                 = 0
    // eta''''(0) = E''''(0) - 12 b E''(0) + 24 c E(0)  = 0
    Eigen::Matrix2d sys;
    sys << -2.0 * e0, 0.0, -12.0 * e2, 24.0 * e0;
    const Eigen::Vector2d rhs(-e2, -e4);
    const Eigen::Vector2d bc = sys.fullPivLu().solve(rhs);

    CorrectionCoeffs out;
    out.b = bc[0];
    out.c = bc[1];
    out.b_alt = (e2 - e0) / 2.0;
    out.c_alt = (6.0 * (e2 - e0) * e2 - e4) / (12.0 * e0);

    const double h = 1e-3 * a;
    out.audit2 = eta_audit(a, out.b, out.c, 2, h);
    out.audit4 = eta_audit(a, out.b, out.c, 4, h);
    out.audit2_alt = eta_audit(a, out.b_alt, out.c_alt, 2, h);
    out.audit4_alt = eta_audit(a, out.b_alt, out.c_alt, 4, h);
    return out;
}

PsiFunction::PsiFunction(double epsilon, double horizon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw DomainError("PsiFunction: epsilon must lie in (0,1)");
    if (!(horizon > 0.0))
        throw DomainError("PsiFunction: horizon must be positive");
    eps_ = epsilon;
    a_ = 0.75 * epsilon;
    horizon_ = horizon;
    coeffs_ = correction_coeffs(a_);
    const double e0 = bump_core(0.0, a_, 0);
    psi0_ = std::min(epsilon, e0 * e0);
    if (!(psi0_ >= 1e-290))
        throw SingularOperatorError(
            "PsiFunction: normalization E(0)^2 underflows at this epsilon");
    scale_ = psi0_ / e0;
}

double PsiFunction::derivative(double t, int deriv) const {
    if (deriv < 0 || deriv > 4)
        throw OrderError("PsiFunction: derivatives available up to order 4");
    if (!(t >= 0.0 && t <= horizon_ + eps_))
        throw DomainError("PsiFunction: t outside [0, T+eps]");
    if (t < horizon_) return deriv == 0 ? psi0_ : 0.0;
    const double s = t - horizon_;
    if (s >= a_) return 0.0;
    double acc = 0.0;
    for (int k = 0; k <= deriv; ++k)
        acc += kBinom[deriv][k] * bump_core(s, a_, k) *
               poly_deriv(s, coeffs_.b, coeffs_.c, deriv - k);
    return scale_ * acc;
}

PsiReport verify_psi(const PsiFunction& psi, int grid) {
    if (grid < 16) throw DomainError("verify_psi: grid must be at least 16");
    PsiReport rep;
    rep.psi0 = psi.psi0();
    rep.epsilon = psi.epsilon();
    auto fail = [&rep](double t, const std::string& msg) {
        if (rep.ok) {
            rep.ok = false;
            rep.witness = t;
            rep.failure = msg;
        }
    };

    if (!(rep.psi0 > 0.0 && rep.psi0 < rep.epsilon))
        fail(0.0, "psi(0) outside (0, eps)");
    if (psi.derivative(0.0, 1) != 0.0) fail(0.0, "psi'(0) != 0");

    const double T = psi.horizon();
    const double a = psi.a();
    for (int i = 0; i <= 4; ++i) {
        double sup = 0.0;
        for (int k = 0; k <= grid; ++k) {
            const double t = T + a * (double(k) / grid);
            sup = std::max(sup, std::abs(psi.derivative(t, i)));
        }
        rep.sup[i] = sup;
    }

    // Stencil steps tuned per order: the kink at T sits at fifth order and
    // contaminates the odd stencils at coarse steps, while 1/h^4 roundoff
    // dominates the fourth-order stencil at fine ones.
    const std::array<double, 4> hdiv = {1000.0, 1000.0, 1600.0, 200.0};
    for (int i = 1; i <= 4; ++i) {
        double h = a / hdiv[i - 1];
        if (T < 7.0 * h) h = T / 7.0;
        const auto [offsets, weights] = central_fd_stencil(i, 8, h);
        double acc = 0.0;
        for (std::size_t k = 0; k < offsets.size(); ++k)
            acc += weights[k] * psi(T + offsets[k] * h);
        const double rel = std::abs(acc) /
                           std::max(rep.sup[i], std::numeric_limits<double>::min());
        rep.branch_residual[i - 1] = rel;
        if (!(rel <= 1e-6)) fail(T, "derivative at the horizon fails to vanish");
    }

    double prev = rep.psi0;
    for (int k = 0; k <= grid; ++k) {
        const double t = T + psi.epsilon() * (double(k) / grid);
        const double v = psi(t);
        if (v < -1e-15 * rep.psi0) fail(t, "psi negative");
        if (v > prev + 1e-12 * rep.psi0) fail(t, "psi increases past the horizon");
        prev = v;
    }
    for (int k = 0; k < 4; ++k) {
        const double t = T * (double(k) / 4.0);
        if (psi(t) != rep.psi0) fail(t, "psi not constant before the horizon");
        if (psi.derivative(t, 1) != 0.0 || psi.derivative(t, 4) != 0.0)
            fail(t, "derivatives nonzero before the horizon");
    }
    const double tail = T + 0.5 * (a + psi.epsilon());
    if (psi(tail) != 0.0 || psi.derivative(tail, 2) != 0.0)
        fail(tail, "psi nonzero past T + a");
    return rep;
}

double uniform_sup_bound(double horizon, const std::vector<double>& eps_grid,
                         int grid) {
    if (eps_grid.empty())
        throw DomainError("uniform_sup_bound: empty epsilon grid");
    if (grid < 16) throw DomainError("uniform_sup_bound: grid must be at least 16");
    double bound = 0.0;
    for (double eps : eps_grid) {
        const PsiFunction psi(eps, horizon);
        for (int i = 0; i <= 4; ++i)
            for (int k = 0; k <= grid; ++k) {
                const double t = horizon + psi.a() * (double(k) / grid);
                bound = std::max(bound, std::abs(psi.derivative(t, i)));
            }
    }
    return bound;
}

} // namespace speclab
