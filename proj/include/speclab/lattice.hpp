#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

#include "speclab/errors.hpp"

namespace speclab {

using Complex = std::complex<double>;
using GridFunction = Eigen::VectorXcd;   // samples over the flattened grid
using CoefficientVector = Eigen::VectorXcd; // one entry per retained frequency

class Subdomain;

// Frequency lattice {xi in Z^n : |xi_i| <= N} over the torus [0,1)^n with a
// uniform sampling grid of 2(2N+1) points per axis.  The grid resolves
// products of two retained-band functions without aliasing into the retained
// band, so L^2 pairings of basis elements are quadrature-exact.
class FourierLattice {
public:
    FourierLattice(int dimension, int cutoff);

    int dimension() const { return n_; }
    int cutoff() const { return N_; }
    int points_per_axis() const { return G_; }
    long grid_size() const { return grid_size_; }
    long frequency_count() const { return freq_count_; }

    // Frequencies are enumerated lexicographically, each component running
    // -N..N; index 0 is (-N,...,-N).
    std::vector<int> frequency(long index) const;
    long frequency_index(const std::vector<int>& xi) const;

    // Coordinates of a grid point (each component in [0,1)).
    std::vector<double> grid_point(long index) const;

    // u(x) -> {u_hat(xi)} over retained frequencies, with the normalized Haar
    // measure (hat u(xi) = int u e^{-i 2 pi x.xi} dx).
    CoefficientVector transform_forward(const GridFunction& u) const;
    // {u_hat(xi)} -> grid samples of sum_xi u_hat(xi) e^{i 2 pi x.xi}.
    GridFunction transform_inverse(const CoefficientVector& coeffs) const;

    // Full-grid DFT along one axis, used for spectral x-derivatives of symbol
    // tables; `order`-th derivative.
    GridFunction spectral_derivative(const GridFunction& table, int axis, int order) const;

    // All G^n Fourier coefficients of a grid function (1/G^n-normalized),
    // addressed through bin_index; resolves frequencies up to |m_i| <= G/2,
    // in particular every difference of two retained frequencies.
    Eigen::VectorXcd full_spectrum(const GridFunction& u) const;
    long bin_index(const std::vector<int>& m) const;

    // Pointwise evaluation of sum_xi c(xi) e^{i 2 pi x.xi} at an arbitrary x.
    Complex evaluate(const CoefficientVector& coeffs, const std::vector<double>& x) const;

    bool same_as(const FourierLattice& other) const {
        return n_ == other.n_ && N_ == other.N_;
    }

private:
    int n_;
    int N_;
    int G_;
    long grid_size_;
    long freq_count_;

    friend class Subdomain;
    friend Complex inner_product(const FourierLattice&, const GridFunction&, const GridFunction&);
    friend Complex inner_product(const Subdomain&, const GridFunction&, const GridFunction&);
    void check_grid(const GridFunction& u, const char* who) const;
    void check_coeffs(const CoefficientVector& c, const char* who) const;
};

using LatticePtr = std::shared_ptr<const FourierLattice>;

// Axis-aligned half-open box inside [0,1)^n.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
};

// Finite union of boxes with per-grid-cell quadrature weights: interior cells
// carry the full cell mass, boundary cells the exact overlap volume.
class Subdomain {
public:
    Subdomain(LatticePtr lattice, std::vector<Box> boxes);

    static Subdomain full(LatticePtr lattice);
    // 1D convenience: union of intervals, wrapping intervals split mod 1.
    static Subdomain intervals(LatticePtr lattice,
                               const std::vector<std::pair<double, double>>& segs);

    const FourierLattice& lattice() const { return *lattice_; }
    LatticePtr lattice_ptr() const { return lattice_; }
    double measure() const { return measure_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const std::vector<Box>& boxes() const { return boxes_; }
    bool is_full() const { return full_; }

    // True when x (componentwise mod 1) lies in the union.
    bool contains(const std::vector<double>& x) const;

private:
    Subdomain(LatticePtr lattice);
    LatticePtr lattice_;
    std::vector<Box> boxes_;       // disjoint atoms after normalization
    Eigen::VectorXd weights_;
    double measure_ = 0.0;
    bool full_ = false;
};

// int_omega f conj(g): weighted quadrature over the region's grid weights.
Complex inner_product(const FourierLattice& lattice, const GridFunction& f, const GridFunction& g);
Complex inner_product(const Subdomain& region, const GridFunction& f, const GridFunction& g);

// Dilated circle T_{T,eps} of circumference 2(T+eps) carrying the
// eigenvalues mu_k = (pi k/(T+eps))^2 of -d^2/dt^2, k = 0..K.
class DilatedTorus {
public:
    DilatedTorus(double T, double eps, int K);

    double horizon() const { return T_; }
    double padding() const { return eps_; }
    double half_length() const { return T_ + eps_; }
    int mode_cap() const { return K_; }

    // mu_{|k|}; even in k, increasing in |k|, mu_0 = 0.
    double eigenvalue(int k) const;
    const std::vector<double>& eigenvalues() const { return mu_; }

    // L^2(T_{T,eps})-normalized exponential e_k(t).
    Complex eigenfunction(int k, double t) const;

private:
    double T_;
    double eps_;
    int K_;
    std::vector<double> mu_;
};

DilatedTorus dilated_eigendata(double T, double eps, int K);

} // namespace speclab
