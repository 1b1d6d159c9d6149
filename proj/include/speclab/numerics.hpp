#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace speclab {

// Composite Simpson on [a,b] with `panels` panels (panels must be even).
double simpson(const std::function<double(double)>& f, double a, double b, int panels);

// Simpson refined by doubling from `min_panels` until two successive values
// agree to rel_tol (relative to max(1,|S|)), or max_panels is reached.
double simpson_refined(const std::function<double(double)>& f, double a, double b,
                       double rel_tol = 1e-9, int min_panels = 64, int max_panels = 1 << 20);

// Finite-difference weights for d^m/dx^m at x0 from the nodes `grid`
// (Fornberg's recursion).  grid.size() >= m+1.
std::vector<double> fd_weights(double x0, const std::vector<double>& grid, int m);

// Weights of the standard symmetric central stencil of the given accuracy
// order for d^m/dx^m with spacing h: offsets -p..p where 2p = m+accuracy-1
// rounded up to even.  Returned as (offsets, weights).
std::pair<std::vector<int>, std::vector<double>>
central_fd_stencil(int m, int accuracy, double h);

// Polynomial mapping [0,1]->[0,1] with three vanishing derivatives at each
// end; its composition with a trapezoid rule yields a high-order quadrature
// on smooth integrands.
double smoothstep7(double u);
double smoothstep7_deriv(double u);

// FNV-1a 64-bit digest, hex-encoded.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

// Ordinary least squares of y against (1, x): returns (intercept, slope, r2).
// Throws FitError when fewer than 2 points or all x equal.  r2 is defined as
// 1 - SSres/SStot, and 1 when SStot vanishes.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 1.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace speclab
