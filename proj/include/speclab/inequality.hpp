#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "speclab/spectral.hpp"

namespace speclab {

// Band-limited packet kappa = sum_{lambda_j <= cutoff} a_j rho_j with real
// coefficients over the retained modes of a spectral basis.
class WavePacket {
public:
    WavePacket(std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd coefficients,
               double cutoff);

    const SpectralBasis& basis() const { return *basis_; }
    const std::shared_ptr<const SpectralBasis>& basis_ptr() const { return basis_; }
    const Eigen::VectorXd& coefficients() const { return a_; }
    double cutoff() const { return cutoff_; }
    long mode_count() const { return a_.size(); }

    CoefficientVector frame_coefficients() const;
    GridFunction evaluate() const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    Eigen::VectorXd a_;
    double cutoff_;
};

// Deterministic packet with uniform [-1,1] coefficients over the retained
// modes; the raw mt19937_64 stream keeps results platform-independent.
WavePacket random_packet(std::shared_ptr<const SpectralBasis> basis, double cutoff,
                         std::uint64_t seed);

// Mass matrix M_{jk} = <1_omega f_k, f_j> of the coefficient-column family
// {f_j}, so v* M v = ||sum_j v_j f_j||^2_{L^2(omega)}.  Entries come from
// closed-form box integrals of e^{2 pi i m.x} accumulated in quad precision,
// exact on the truncation; no sampling grid is involved.
Eigen::MatrixXcd omega_mass_matrix(const FourierLattice& lattice, const Subdomain& omega,
                                   const Eigen::MatrixXcd& columns);

struct ObservabilityResult {
    double constant = 0.0;   // sup ||kappa||_M / ||kappa||_omega = 1/sqrt(sigma_min)
    double sigma_min = 0.0;  // smallest eigenvalue of the omega-mass matrix
    Eigen::VectorXcd extremal; // attaining packet coefficients, unit norm
};

// Observability constant over the modes with lambda_j <= lambda.  sigma_min
// is extracted by a Jacobi eigensolve carried out entirely in __float128:
// the constants grow like e^{C2 lambda}, so sigma_min crosses the double
// roundoff floor long before the sweeps of interest end.  Sensors whose
// sigma_min falls below the quad trust floor (1e-30 * max(1, ||G||_F)) throw
// IllConditionedSensorError.
ObservabilityResult observability_constant(const SpectralBasis& basis, const Subdomain& omega,
                                           double lambda);

struct FitResult {
    double C1 = 0.0;
    double C2 = 0.0;
    double r2 = 0.0;
};

// Least squares of log values against the grid: values ~ C1 e^{C2 lambda}.
FitResult fit_exponential(const std::vector<double>& grid, const std::vector<double>& values);

struct ObservabilityReport {
    std::vector<double> lambdas;
    std::vector<double> constants;
    std::vector<double> sigma_mins;
    FitResult fit;
};

ObservabilityReport observability_sweep(const SpectralBasis& basis, const Subdomain& omega,
                                        const std::vector<double>& lambdas);

// F(x,t) = sum_j (sinh(lambda_j t)/lambda_j) a_j rho_j(x), the lambda_j = 0
// coefficient continued by its limit t; d_t F(.,0) = kappa.
SpaceTimeField build_F(const WavePacket& packet, std::vector<double> time_grid);

// ||F||_{H^1(M x (alpha, T-alpha))} / (||F||^k_{H^1(M_T)} ||kappa||^{1-k}_{L^2(omega)}),
// k = kappa_exp.
double interpolation_ratio(const WavePacket& packet, const Subdomain& omega, double horizon,
                           double alpha, double kappa_exp, long time_samples = 65);

struct InterpolationSearch {
    double kappa = 0.0;  // minimizing exponent
    double ratio = 0.0;
    std::vector<double> exponents;
    std::vector<double> ratios;
};

// Scans kappa_exp over {0.05, 0.10, ..., 0.95}.
InterpolationSearch interpolation_search(const WavePacket& packet, const Subdomain& omega,
                                         double horizon, double alpha, long time_samples = 65);

struct SymmetryReport {
    double lhs = 0.0;        // ||(-d_t^2 + E^{2/nu}) phi||^2 over the time circle
    double rhs = 0.0;        // 2x the same norm over the half cylinder (0, L)
    double rel_error = 0.0;
    double odd_defect = 0.0; // max_j sup_t |c_j(-t) + c_j(t)| / scale
};

// Checks the circle/half-cylinder factor-2 identity for a field spanning
// [-L, L].  The circle side is evaluated spectrally (FFT of the modal samples
// with the (omega_k^2 + lambda_j^2)^2 multiplier), the half side by time
// quadrature of the analytic modal derivatives, so a field violating the odd
// premise loses the identity instead of hiding it: its interpolant picks up
// the derivative jump at t = 0 that the half-cylinder quadrature never sees.
SymmetryReport symmetry_check(const SpaceTimeField& field, long time_samples = 4096);

// sup_{B(x0, 2R)} |kappa| / sup_{B(x0, R)} |kappa| on periodic geodesic
// balls, sampled at `oversample` points per Nyquist interval of the packet's
// top frequency.  Point values are summed in quad precision; concentrated
// packets dip far below the double roundoff floor on the inner ball, and the
// vanishing guard relies on seeing that.
double doubling_ratio(const WavePacket& packet, const std::vector<double>& center, double radius,
                      long oversample = 16);

struct DoublingReport {
    std::vector<double> center;
    double radius = 0.0;
    std::vector<double> lambdas;
    std::vector<double> ratios;  // envelope over the packets of each cell
    FitResult fit;               // log ratio against lambda
};

DoublingReport doubling_sweep(std::shared_ptr<const SpectralBasis> basis,
                              const std::vector<double>& center, double radius,
                              const std::vector<double>& lambdas, long packets_per_cell = 8,
                              std::uint64_t seed = 0x1d0b);

} // namespace speclab
