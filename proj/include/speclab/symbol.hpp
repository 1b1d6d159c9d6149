#pragma once

#include <functional>
#include <map>
#include <string>

#include "speclab/lattice.hpp"

namespace speclab {

// Multi-index over the lattice dimension.
using MultiIndex = std::vector<int>;

// Sampled toroidal symbol a(x, xi): one row per grid point, one column per
// retained frequency.  Multiplier symbols store a single row.  The symbol
// class (rho, delta) with 0 <= delta < rho <= 1 governs the seminorm weights
// <xi>^{rho|alpha| - delta|beta|}.
class ToroidalSymbol {
public:
    using SymbolFn = std::function<Complex(const std::vector<double>& x, const std::vector<int>& xi)>;
    using MultiplierFn = std::function<Complex(const std::vector<int>& xi)>;

    // Sampled once over grid x frequencies.
    static ToroidalSymbol from_callable(LatticePtr lattice, double order, SymbolFn fn,
                                        double rho = 1.0, double delta = 0.0);
    static ToroidalSymbol from_multiplier(LatticePtr lattice, double order, MultiplierFn fn,
                                          double rho = 1.0, double delta = 0.0);
    static ToroidalSymbol from_table(LatticePtr lattice, double order, Eigen::MatrixXcd table,
                                     double rho = 1.0, double delta = 0.0);

    const FourierLattice& lattice() const { return *lattice_; }
    LatticePtr lattice_ptr() const { return lattice_; }
    double order() const { return order_; }
    double rho() const { return rho_; }
    double delta() const { return delta_; }
    bool is_multiplier() const { return multiplier_; }
    bool is_positive() const { return positive_; }

    // a(x_i, xi_j); multiplier symbols ignore the grid index.
    Complex value(long grid_index, long freq_index) const;
    // Row of x-samples for a fixed frequency (length = grid size).
    GridFunction x_slice(long freq_index) const;

    // Columnar text round-trip.  Header: n N order rho delta; then one row
    // per entry: x-index xi_1..xi_n re im.
    void save(const std::string& path) const;
    static ToroidalSymbol load(LatticePtr lattice, const std::string& path);
    static ToroidalSymbol load(const std::string& path);

private:
    ToroidalSymbol(LatticePtr lattice, double order, double rho, double delta);
    void detect_flags();

    LatticePtr lattice_;
    double order_;
    double rho_;
    double delta_;
    bool multiplier_ = false;
    bool positive_ = false;
    Eigen::MatrixXcd table_; // rows: grid points (1 if multiplier); cols: frequencies
};

// a(x,D)u: toroidal quantization sum_xi e^{i2pi x.xi} a(x,xi) u_hat(xi).
GridFunction quantize(const ToroidalSymbol& sym, const GridFunction& u);

// sup over the table of <xi>^{rho|alpha|-delta|beta|} |Delta_xi^alpha d_x^beta a|,
// with forward differences in xi and spectral derivatives in x.
double seminorm(const ToroidalSymbol& sym, const MultiIndex& alpha, const MultiIndex& beta);

struct SeminormReport {
    int max_total_order = 0;                       // [n/2]+1
    double dimensional_constant = 0.0;             // 2^{[n/2]+2}
    std::map<std::pair<MultiIndex, MultiIndex>, double> constants;
    double bound = 0.0;                            // max constant (order-0 envelope)
};

SeminormReport seminorm_report(const ToroidalSymbol& sym);

// L^2 operator-norm envelope for order-0 symbols: max seminorm over
// |alpha|+|beta| <= [n/2]+1, reported next to the dimensional constant.
double cv_bound(const ToroidalSymbol& sym);

} // namespace speclab
