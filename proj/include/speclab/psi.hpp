#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace speclab {

// E(t) = e^{-1/(a^2-t^2)} (a^2-t^2)^10 on [0,a), glued to zero on [a, 4a/3].
// deriv in 0..4 selects the closed-form derivative.
double bump_eval(double t, double a, int deriv = 0);

// Coefficients of the quartic correction eta(t) = E(t)(1 - b t^2 + c t^4).
// (b, c) solve the 2x2 system eta''(0) = eta''''(0) = 0.  (b_alt, c_alt) is a
// differently normalized closed form for the same targets; the audit fields
// hold 8th-order finite-difference residuals of eta'' and eta'''' at 0 (step
// 1e-3 a, normalized by the summed stencil-term magnitude) for each pair, so
// reports can show which pair actually meets the vanishing conditions.
struct CorrectionCoeffs {
    double b = 0.0;
    double c = 0.0;
    double b_alt = 0.0;
    double c_alt = 0.0;
    double audit2 = 0.0;
    double audit4 = 0.0;
    double audit2_alt = 0.0;
    double audit4_alt = 0.0;
};
CorrectionCoeffs correction_coeffs(double a);

// Piecewise regularizer on [0, T+eps] with a = 3 eps/4: constant psi(0) up to
// the horizon T, the corrected bump rescaled to match on [T, T+a], and
// identically zero from T+a on.  Normalization psi(0) = min(eps, E(0)^2)
// keeps 0 < psi(0) <= eps.
class PsiFunction {
public:
    PsiFunction(double epsilon, double horizon);

    double epsilon() const { return eps_; }
    double a() const { return a_; }
    double horizon() const { return horizon_; }
    double psi0() const { return psi0_; }
    const CorrectionCoeffs& coeffs() const { return coeffs_; }

    double operator()(double t) const { return derivative(t, 0); }

    // deriv in 0..4; at t = horizon the bump-side limit is returned.
    double derivative(double t, int deriv) const;

private:
    double eps_ = 0.0;
    double a_ = 0.0;
    double horizon_ = 0.0;
    double psi0_ = 0.0;
    double scale_ = 0.0;
    CorrectionCoeffs coeffs_;
};

// Audit of the construction: 0 < psi(0) < eps, the four derivatives vanish at
// the horizon (8th-order central differences with per-order steps; the
// branch mismatch only enters at fifth order, so the stencils stay clean),
// sup norms of psi..psi'''' on a dense grid, positivity and monotonicity past
// the horizon.  branch_residual[i-1] is |FD psi^(i)(T)| / sup|psi^(i)|.
struct PsiReport {
    bool ok = true;
    double psi0 = 0.0;
    double epsilon = 0.0;
    std::array<double, 4> branch_residual{};
    std::array<double, 5> sup{};
    double witness = std::numeric_limits<double>::quiet_NaN();
    std::string failure;
};
PsiReport verify_psi(const PsiFunction& psi, int grid = 4000);

// max_i sup |psi^(i)| over an epsilon grid at a fixed horizon: the bound the
// construction keeps independent of epsilon.
double uniform_sup_bound(double horizon, const std::vector<double>& eps_grid,
                         int grid = 4000);

} // namespace speclab
