#pragma once

#include <optional>
#include <vector>

#include "speclab/spectral.hpp"

namespace speclab {

// Truncated Dunford-Riesz contour: two rays leaving the vertex -eps0 at
// half_aperture radians around the negative real axis (so the rays point
// into the left half-plane), cut off where |lambda| = radius and closed by
// the circular arc through the right half-plane.
struct ContourSpec {
    double vertex = -0.5;                // -eps0, strictly negative
    double half_aperture = 0.78539816339744831; // pi/4, in (0, pi/2)
    double radius = 100.0;               // truncation radius, > |vertex|
    long nodes = 400;                    // total quadrature nodes, even
};

// vertex -min_positive_mu/2, radius 100*max(1, mu_max), aperture pi/4.
ContourSpec default_contour(const EllipticOperator& op, long nodes = 400);

// A^z on the truncated frame together with the kernel projector P0.
class PowerOperator {
public:
    PowerOperator(Complex exponent, Eigen::MatrixXcd dense,
                  Eigen::MatrixXcd kernel_projector, bool multiplier);

    Complex exponent() const { return z_; }
    bool is_multiplier() const { return multiplier_; }
    const Eigen::MatrixXcd& dense() const { return dense_; }
    const Eigen::MatrixXcd& kernel_projector() const { return p0_; }
    // Diagonal of the representation; multiplier route only.
    Eigen::VectorXcd values() const;

    CoefficientVector apply(const CoefficientVector& c) const;

private:
    Complex z_;
    Eigen::MatrixXcd dense_;
    Eigen::MatrixXcd p0_;
    bool multiplier_ = false;
};

// mu_j^z (principal branch) on the basis eigenvectors; 0^z = 0 for Re z >= 0.
PowerOperator spectral_power(const SpectralBasis& basis, Complex z);

// -(1/2 pi i) contour integral of lambda^z (A - lambda I)^{-1}, trapezoid
// nodes on the two rays and the closing arc.  Re z outside (-1, 0] is reached
// through integer splits A^z = A^m A^{z-m}.
PowerOperator contour_power(const EllipticOperator& op, Complex z,
                            const ContourSpec& contour);

// (A - lambda I)^{-1} on the frame.
Eigen::MatrixXcd resolvent(const EllipticOperator& op, Complex lambda);

struct ParameterEllipticityReport {
    bool elliptic = false;
    double C1 = 0.0;       // witnessed lower constant over |theta| >= R
    double C2 = 0.0;       // witnessed upper constant
    double R = 0.0;        // frequency radius of the witness slice
    // Arg-min sample of |a - lambda| / weight; the counterexample when the
    // check fails.
    long x_index = 0;
    std::vector<int> theta;
    double lambda = 0.0;
};

// Checks C1 (1+|theta|+|lambda|^{1/d})^m <= |a(x,theta)-lambda| <= C2 (...)^m
// over the tabulated symbol and sampled lambda on the ray (-inf, -eps0].
ParameterEllipticityReport parameter_ellipticity_check(const ToroidalSymbol& sym,
                                                       double eps0,
                                                       double d_lambda);

struct ProductOperatorReport {
    std::vector<double> eps_grid;
    std::vector<double> B_eps;      // norm of G^{-1}: L^2 -> H^2 surrogate
    std::vector<double> C_eps;      // norm of (-d_t^2 - Delta) G^{-1}
    std::vector<double> min_joint;  // smallest joint eigenvalue per eps
    double B_sup = 0.0;
    double C_sup = 0.0;
    double floor_c = 0.0;           // lambda_1^2, the joint spectral floor
    double bound = 0.0;             // 1 + 1/floor_c
    bool multiplier_route = false;
};

// Joint spectrum {mu_{k,eps} + lambda_j^2} of -d_t^2 + E^{2/nu} on the
// dilated cylinder; B_eps and C_eps swept over the requested eps grid
// (default {0.1, ..., 0.9}).  The torus argument fixes T and the mode cap.
ProductOperatorReport product_operator_inverse(const SpectralBasis& basis,
                                               const DilatedTorus& torus,
                                               double nu,
                                               std::vector<double> eps_grid = {});

} // namespace speclab
