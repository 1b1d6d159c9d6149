#pragma once

#include <functional>
#include <limits>
#include <memory>

#include "speclab/symbol.hpp"

namespace speclab {

struct AssemblyReport {
    double ellipticity_ratio = 0.0;  // max/min of |a(x,xi)|/<xi>^nu over |xi| >= R
    double ellipticity_radius = 0.0; // the R used for the ratio
    double min_sampled_value = 0.0;  // min Re a(x,xi) over sampled xi != 0
    double hermitian_defect = 0.0;   // Frobenius norm of the skew part removed
};

class SpectralBasis;
class EllipticOperator;
SpectralBasis eigendata(const EllipticOperator& op, double lambda_max);

// Positive elliptic operator on the Fourier frame: either a real multiplier
// table or a dense Hermitian Galerkin matrix.  The full spectrum is solved
// eagerly at assembly; eigendata() slices it.
class EllipticOperator {
public:
    double order() const { return nu_; }
    double floor() const { return floor_; }
    bool is_multiplier() const { return multiplier_; }
    const FourierLattice& lattice() const { return *lattice_; }
    LatticePtr lattice_ptr() const { return lattice_; }
    const AssemblyReport& report() const { return report_; }
    bool clamped_modes() const { return clamped_; }

    const Eigen::VectorXd& multiplier() const; // per frequency index
    const Eigen::MatrixXcd& matrix() const;    // dense path only

    // Action on Fourier-frame coefficient vectors.
    CoefficientVector apply(const CoefficientVector& c) const;

    // Largest eigenvalue available at this truncation.
    double spectral_ceiling() const { return mu_.size() ? mu_[mu_.size() - 1] : 0.0; }
    long mode_count() const { return mu_.size(); }

    // Full sorted spectrum (ascending) and matching eigenvectors.
    const Eigen::VectorXd& spectrum() const { return mu_; }
    Eigen::VectorXcd frame_eigenvector(long r) const;
    // K x K matrix of the operator on the frame (diagonal for multipliers).
    Eigen::MatrixXcd dense_matrix() const;
    // Orthogonal projector onto the zero modes (zero matrix when none).
    Eigen::MatrixXcd kernel_projector() const;

private:
    EllipticOperator() = default;
    friend EllipticOperator assemble_operator(const ToroidalSymbol& sym);
    friend EllipticOperator shift_to_positive(const EllipticOperator& op, double c);
    friend class SpectralBasis;
    friend SpectralBasis eigendata(const EllipticOperator& op, double lambda_max);

    LatticePtr lattice_;
    double nu_ = 0.0;
    double floor_ = 0.0;
    bool multiplier_ = false;
    bool clamped_ = false;
    AssemblyReport report_;
    Eigen::VectorXd values_;   // multiplier path: Re a(xi) per frequency index
    Eigen::MatrixXcd matrix_;  // dense path: Hermitian Galerkin matrix

    Eigen::VectorXd mu_;            // ascending, clamped at 0
    std::vector<long> source_;      // multiplier: frequency index; dense: eigencolumn
    Eigen::MatrixXcd eigvecs_;      // dense path only, columns match source_
};

// assemble_operator: positivity and ellipticity audit, Galerkin assembly with
// (A+A*)/2 symmetrization, eager spectrum.
EllipticOperator assemble_operator(const ToroidalSymbol& sym);

// Spectrum shifted by c > 0; eigenvectors unchanged, lambda_j = (mu_j+c)^{1/nu}.
EllipticOperator shift_to_positive(const EllipticOperator& op, double c);

// Modes with lambda_j = mu_j^{1/nu} <= lambda_max, ascending, ties by
// frequency lexicographic order; orthonormal coefficient columns.
class SpectralBasis {
public:
    long size() const { return mu_.size(); }
    double nu() const { return nu_; }
    double mu(long j) const { return mu_[j]; }
    double lambda(long j) const { return lambda_[j]; }
    const Eigen::VectorXd& mus() const { return mu_; }
    const Eigen::VectorXd& lambdas() const { return lambda_; }
    const Eigen::MatrixXcd& vectors() const { return vectors_; }
    CoefficientVector vector(long j) const { return vectors_.col(j); }
    GridFunction eigenfunction(long j) const;
    const FourierLattice& lattice() const { return *lattice_; }
    LatticePtr lattice_ptr() const { return lattice_; }

    bool truncation_warning() const { return truncation_warning_; }
    bool clamp_warning() const { return clamp_warning_; }
    // Smallest eigenvalue beyond the cut (tail bounds); +inf when exhausted.
    double next_mu() const { return next_mu_; }

    // Columnar text round-trip: header n N nu count, then one row per mode:
    // j mu lambda re_0 im_0 ... re_{K-1} im_{K-1}.
    void save(const std::string& path) const;
    static SpectralBasis load(LatticePtr lattice, const std::string& path);
    static SpectralBasis load(const std::string& path);

private:
    SpectralBasis() = default;
    friend SpectralBasis eigendata(const EllipticOperator& op, double lambda_max);

    LatticePtr lattice_;
    double nu_ = 0.0;
    Eigen::VectorXd mu_;
    Eigen::VectorXd lambda_;
    Eigen::MatrixXcd vectors_; // K x m orthonormal columns
    bool truncation_warning_ = false;
    bool clamp_warning_ = false;
    double next_mu_ = std::numeric_limits<double>::infinity();
};

// E_lambda f = sum_{lambda_j <= lambda} (f, rho_j) rho_j on the grid.
GridFunction project(const SpectralBasis& basis, double lambda, const GridFunction& f);

// Space-time field sum_j c_j(t) rho_j(x) with analytic modal evaluators
// (time derivatives up to order 2) tabulated against a strictly increasing
// time grid over [t_0, T].
class SpaceTimeField {
public:
    using ModalFn = std::function<Complex(long mode, double t, int t_deriv)>;

    SpaceTimeField(std::shared_ptr<const SpectralBasis> basis, std::vector<double> time_grid,
                   ModalFn fn);

    const SpectralBasis& basis() const { return *basis_; }
    std::shared_ptr<const SpectralBasis> basis_ptr() const { return basis_; }
    const std::vector<double>& time_grid() const { return grid_; }
    double start() const { return grid_.front(); }
    double horizon() const { return grid_.back(); }

    Complex coefficient(long mode, double t, int t_deriv = 0) const;
    // Fourier-frame coefficients of d_t^deriv f(., t).
    CoefficientVector frame_coefficients(double t, int t_deriv = 0) const;
    GridFunction evaluate(double t) const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    std::vector<double> grid_;
    ModalFn fn_;
};

// H^s(M x [a,b]) norm, s in {0,1,2}:
// (sum_{0<=j<=s} int [ |d_t^j f|^2 + |(1-Delta)^{j/2} f|^2 ] dt)^{1/2},
// the fractional Laplacian acting as the multiplier (1+4 pi^2 |xi|^2)^{j/2}.
double sobolev_norm(const SpaceTimeField& field, int s);
double sobolev_norm(const SpaceTimeField& field, int s, double a, double b);

} // namespace speclab
