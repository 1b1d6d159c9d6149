#include "speclab/numerics.hpp"
#include "speclab/errors.hpp"

#include <cmath>
#include <cstdio>

namespace speclab {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels < 2 || panels % 2 != 0) throw DomainError("simpson: panel count must be even and >= 2");
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double simpson_refined(const std::function<double(double)>& f, double a, double b,
                       double rel_tol, int min_panels, int max_panels) {
    int p = min_panels;
    if (p % 2) ++p;
    double prev = simpson(f, a, b, p);
    while (p < max_panels) {
        p *= 2;
        const double cur = simpson(f, a, b, p);
        if (std::abs(cur - prev) <= rel_tol * std::max(1.0, std::abs(cur))) return cur;
        prev = cur;
    }
    return prev;
}

std::vector<double> fd_weights(double x0, const std::vector<double>& grid, int m) {
    const int n = static_cast<int>(grid.size());
    if (n < m + 1) throw DomainError("fd_weights: need at least m+1 nodes");
    // Fornberg (1988), weights for derivative orders 0..m; we keep order m.
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = grid[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = grid[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = grid[i] - grid[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

std::pair<std::vector<int>, std::vector<double>> central_fd_stencil(int m, int accuracy, double h) {
    if (m < 1 || accuracy < 2 || h <= 0.0) throw DomainError("central_fd_stencil: bad arguments");
    const int p = (m + 1) / 2 - 1 + (accuracy + 1) / 2;
    std::vector<int> offsets;
    std::vector<double> nodes;
    for (int k = -p; k <= p; ++k) {
        offsets.push_back(k);
        nodes.push_back(k * h);
    }
    return {offsets, fd_weights(0.0, nodes, m)};
}

double smoothstep7(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double u4 = u * u * u * u;
    return u4 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
}

double smoothstep7_deriv(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double u3 = u * u * u;
    return u3 * (140.0 + u * (-420.0 + u * (420.0 - 140.0 * u)));
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw FitError("fit_line: need >= 2 matched points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw FitError("fit_line: all abscissae equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r2 = 1.0;
    } else {
        double ssres = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - (fit.intercept + fit.slope * x[i]);
            ssres += r * r;
        }
        fit.r2 = 1.0 - ssres / syy;
    }
    return fit;
}

} // namespace speclab
