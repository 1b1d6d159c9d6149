#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "speclab/inequality.hpp"

namespace speclab {

// Modal truncation of the fractional model u' + A^alpha u = 1_omega g on
// [0, horizon]: the basis carries the eigenvalues mu_j of A, the sensor is
// the control region, and the initial state is given in modal coordinates.
// The observation operator is restriction to the sensor; the control
// operator is its adjoint, multiplication by the indicator.
class ControlProblem {
public:
    ControlProblem(std::shared_ptr<const SpectralBasis> basis, double alpha,
                   double horizon, Subdomain sensor, CoefficientVector initial);

    const SpectralBasis& basis() const { return *basis_; }
    const std::shared_ptr<const SpectralBasis>& basis_ptr() const { return basis_; }
    double alpha() const { return alpha_; }
    double nu() const { return basis_->nu(); }
    double alpha_nu() const { return alpha_ * basis_->nu(); }
    double horizon() const { return horizon_; }
    const Subdomain& sensor() const { return sensor_; }
    const CoefficientVector& initial() const { return initial_; }

    // e^{-T mu^alpha} for the first eigenvalue beyond the truncation: the
    // free-decay factor of the neglected tail (0 when the cut is exhaustive).
    double tail_decay() const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    double alpha_ = 0.0;
    double horizon_ = 0.0;
    Subdomain sensor_;
    CoefficientVector initial_;
};

// Modal coefficients multiplied by e^{-t mu_j^alpha}.
CoefficientVector semigroup_apply(const ControlProblem& problem, double t,
                                  const CoefficientVector& state);

// G_{jk} = M_{jk} (1 - e^{-(mu_j^a + mu_k^a) T})/(mu_j^a + mu_k^a), the limit
// T on vanishing rates, with M the sensor mass matrix in the eigenbasis.
// Hermitian positive semidefinite up to a -1e-10 audit floor.
Eigen::MatrixXcd observability_gramian(const ControlProblem& problem);

// g(t, x) = 1_omega(x) sum_j phi_j e^{-(T-t) mu_j^alpha} rho_j(x).
class ControlField {
public:
    ControlField() = default;
    ControlField(std::shared_ptr<const SpectralBasis> basis, Subdomain sensor,
                 Eigen::VectorXcd phi, double alpha, double horizon);

    bool empty() const { return !basis_; }
    double horizon() const { return horizon_; }
    const Eigen::VectorXcd& phi() const { return phi_; }

    // Modal coefficients of the profile before the indicator.
    Eigen::VectorXcd profile(double t) const;
    Complex operator()(double t, const std::vector<double>& x) const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    std::optional<Subdomain> sensor_;
    Eigen::VectorXcd phi_;
    Eigen::VectorXd rates_;
    double horizon_ = 0.0;
};

struct ControlResult {
    Eigen::VectorXcd phi;          // HUM multiplier in modal coordinates
    ControlField control;          // the synthesized input
    double residual = 0.0;         // ||u(T)|| / max(||u0||, 1) on the truncation
    double cost = 0.0;             // sqrt(-<phi, e^{-TA^alpha} u0>)
    double cost_quadrature = 0.0;  // time quadrature of ||g||_{L2(omega x (0,T))}
    double condition = 0.0;        // sigma_max/sigma_min of the raw Gramian
    double tikhonov = 0.0;         // ridge actually applied, 0 when none
    double tail_decay = 0.0;       // free decay bound of the neglected tail
};

// Minimal-norm null control of the truncated system: solves G phi =
// -e^{-TA^alpha} u0 through the Gramian eigendecomposition, falling back to
// the ridge G + eta I with eta = 1e-12 tr(G)/m when sigma_min dips under
// 1e-13 sigma_max; the residual is then reported honestly.
ControlResult hum_control(const ControlProblem& problem);

struct LrStage {
    double lambda_cap = 0.0;  // active block: modes with lambda_j <= cap
    long active_modes = 0;
    double active_time = 0.0; // first half of the stage
    double cost = 0.0;
    double post_norm = 0.0;   // ||u|| after the stage's free half
};

struct LrResult {
    std::vector<LrStage> stages;
    double final_residual = 0.0;
    double total_cost = 0.0;
};

// Lebeau-Robbiano iteration: stage k occupies T 2^{-(k+1)} (so the lengths
// sum to the horizon), actively controlling the modes with lambda_j <=
// lambda0 growth^k to zero over its first half and evolving freely over the
// second; the full cross-coupling of the block control into the inactive
// modes is kept.  lambda0 <= 0 selects the 4th smallest lambda_j.
LrResult lr_iterative_control(const ControlProblem& problem, double growth = 2.0,
                              double lambda0 = 0.0);

struct MillerReport {
    bool admissible = false;                                   // alpha nu > 1
    double gamma = 0.0;                                        // 1/(alpha nu)
    double beta_star = std::numeric_limits<double>::quiet_NaN(); // 1/(alpha nu - 1)
};
MillerReport miller_gate(double alpha, double nu);

struct CostPoint {
    double horizon = 0.0;
    double cost = 0.0;       // C_T
    double condition = 0.0;
    bool ok = false;
};

// C_T over a horizon grid with the short-time fit: beta_fit and the
// amplitude C1 come from the log-log law log C_T ~ log C1 - beta_fit log T
// on the smallest half of the grid, C2 from refitting log C_T against
// T^{-beta_fit} in the exponential form C_T ~ C1' e^{C2 T^{-beta_fit}}.
struct CostCurve {
    std::vector<CostPoint> points;
    double C1 = 0.0;
    double C2 = 0.0;
    double beta_fit = 0.0;
    double beta_star = 0.0;
    double fit_r2 = 0.0;
};

// C_T = sqrt(largest theta with e^{-2TA^alpha} v = theta G_T v) on the
// truncation; ill-conditioned grid points are flagged and skipped by the
// fit, the curve continues.  Initial state and horizon of the template are
// not consulted.
CostCurve cost_curve(const ControlProblem& problem, const std::vector<double>& horizons);

} // namespace speclab
