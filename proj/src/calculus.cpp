#include "speclab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "speclab/numerics.hpp"

namespace speclab {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ContourGeometry {
    double eps0;    // |vertex|
    double beta;    // ray direction measured from the positive real axis
    double ray_len; // arclength of each ray up to |lambda| = radius
    double radius;
    double theta_p; // polar angle of the upper ray endpoint
};

ContourGeometry resolve_geometry(const ContourSpec& spec) {
    if (!(spec.vertex < 0.0))
        throw DomainError("contour: vertex must be strictly negative");
    if (!(spec.half_aperture > 0.0 && spec.half_aperture < 0.5 * kPi))
        throw DomainError("contour: half-aperture must lie in (0, pi/2)");
    if (!(spec.radius > -spec.vertex))
        throw DomainError("contour: truncation radius must exceed |vertex|");
    if (spec.nodes < 8 || spec.nodes % 2 != 0)
        throw DomainError("contour: node count must be even and at least 8");

    ContourGeometry g;
    g.eps0 = -spec.vertex;
    g.beta = kPi - spec.half_aperture;
    g.radius = spec.radius;
    const double cb = std::cos(g.beta);
    const double sb = std::sin(g.beta);
    g.ray_len = g.eps0 * cb + std::sqrt(spec.radius * spec.radius - g.eps0 * g.eps0 * sb * sb);
    const Complex tip = Complex(-g.eps0, 0.0) + g.ray_len * Complex(cb, sb);
    g.theta_p = std::arg(tip);
    return g;
}

double interval_distance(Complex p, double lo, double hi) {
    double dx = 0.0;
    if (p.real() < lo) dx = lo - p.real();
    else if (p.real() > hi) dx = p.real() - hi;
    return std::hypot(dx, p.imag());
}

void collision_check(const ContourGeometry& g, double mu_lo, double mu_hi) {
    const int samples = 4096;
    double dist = std::numeric_limits<double>::infinity();
    const Complex dir_up(std::cos(g.beta), std::sin(g.beta));
    for (int i = 0; i <= samples; ++i) {
        const double t = double(i) / samples;
        const Complex on_ray = Complex(-g.eps0, 0.0) + t * g.ray_len * dir_up;
        dist = std::min(dist, interval_distance(on_ray, mu_lo, mu_hi));
        const Complex on_arc = std::polar(g.radius, g.theta_p * (2.0 * t - 1.0));
        dist = std::min(dist, interval_distance(on_arc, mu_lo, mu_hi));
    }
    if (dist < 0.5 * g.eps0)
        throw ContourCollisionError("contour: spectrum within eps0/2 of the contour");
}

// Composite trapezoid of a matrix-valued map over u in [0,1]; the integrand
// must carry its own parameterization jacobian.
template <class F>
Eigen::MatrixXcd trapezoid01(long panels, long dim, F&& g) {
    const double h = 1.0 / double(panels);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    for (long i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 0.5 * h : h;
        acc += w * g(double(i) * h);
    }
    return acc;
}

// (1/2 pi i) times the integral of f over the closed contour: arc traversed
// counterclockwise from the lower ray endpoint through the positive axis,
// then the upper ray inward, then the lower ray outward.  Radial nodes are
// log-clustered toward the vertex; the smoothstep map flattens both piece
// endpoints so the composite trapezoid converges at high order.
template <class F>
Eigen::MatrixXcd contour_integral(const ContourGeometry& g, long nodes, long dim, F&& f) {
    const long ray_panels = std::max<long>(4, nodes / 4);
    const long arc_panels = std::max<long>(4, nodes - 2 * ray_panels);
    const double a_s = 0.5 * std::min(g.eps0, g.ray_len);
    const double tau = std::log1p(g.ray_len / a_s);

    auto ray_integral = [&](int sign) {
        const Complex dir(std::cos(g.beta), sign * std::sin(g.beta));
        return trapezoid01(ray_panels, dim, [&](double u) -> Eigen::MatrixXcd {
            const double dw = smoothstep7_deriv(u);
            if (dw == 0.0) return Eigen::MatrixXcd::Zero(dim, dim);
            const double w = smoothstep7(u);
            const double s = a_s * std::expm1(tau * w);
            const double ds = a_s * tau * std::exp(tau * w) * dw;
            return (dir * ds) * f(Complex(-g.eps0, 0.0) + s * dir);
        });
    };
    auto arc_integral = [&]() {
        return trapezoid01(arc_panels, dim, [&](double u) -> Eigen::MatrixXcd {
            const double dw = smoothstep7_deriv(u);
            if (dw == 0.0) return Eigen::MatrixXcd::Zero(dim, dim);
            const double phi = g.theta_p * (2.0 * smoothstep7(u) - 1.0);
            const Complex lam = std::polar(g.radius, phi);
            return (Complex(0.0, 1.0) * lam * (2.0 * g.theta_p * dw)) * f(lam);
        });
    };

    Eigen::MatrixXcd total = arc_integral();
    total -= ray_integral(+1);
    total += ray_integral(-1);
    return total / Complex(0.0, 2.0 * kPi);
}

template <class F>
Eigen::MatrixXcd simpson_matrix01(F&& f, long dim, double rel_tol) {
    auto composite = [&](long panels) {
        const double h = 1.0 / double(panels);
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
        for (long i = 0; i <= panels; ++i) {
            const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += (w * h / 3.0) * f(double(i) * h);
        }
        return acc;
    };
    long panels = 64;
    Eigen::MatrixXcd prev = composite(panels);
    for (int round = 0; round < 9; ++round) {
        panels *= 2;
        Eigen::MatrixXcd cur = composite(panels);
        if ((cur - prev).norm() <= rel_tol * std::max(1.0, cur.norm())) return cur;
        prev = std::move(cur);
    }
    throw TruncationError("contour power: branch correction quadrature did not converge");
}

// (sin(pi w)/pi) * int_0^{eps0} r^w (A + r I)^{-1} dr, the jump of lambda^w
// across the piece of the branch cut enclosed by the closed contour.
// Substituting r = eps0 u^p removes the endpoint singularity.
Eigen::MatrixXcd branch_correction(const Eigen::MatrixXcd& A, Complex w, double eps0) {
    const long K = A.rows();
    const int p = std::max(2, int(std::ceil(6.0 / (1.0 + w.real()))));
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(K, K);
    auto f = [&](double u) -> Eigen::MatrixXcd {
        if (u == 0.0) return Eigen::MatrixXcd::Zero(K, K);
        const Complex coef = std::pow(Complex(eps0, 0.0), w + 1.0) * double(p) *
                             std::pow(Complex(u, 0.0), double(p) * (w + 1.0) - 1.0);
        Eigen::MatrixXcd M = A;
        M.diagonal().array() += eps0 * std::pow(u, p);
        return coef * M.partialPivLu().solve(eye);
    };
    return (std::sin(kPi * w) / kPi) * simpson_matrix01(f, K, 1e-10);
}

bool integer_exponent(Complex z) {
    return z.imag() == 0.0 && z.real() == std::nearbyint(z.real()) &&
           std::abs(z.real()) < 64.0;
}

bool coordinate_columns(const Eigen::MatrixXcd& V, std::vector<long>* support) {
    support->assign(V.cols(), -1);
    for (long j = 0; j < V.cols(); ++j) {
        long nz = -1;
        for (long i = 0; i < V.rows(); ++i) {
            if (V(i, j) == Complex(0.0, 0.0)) continue;
            if (nz >= 0) return false;
            nz = i;
        }
        if (nz < 0) return false;
        (*support)[j] = nz;
    }
    return true;
}

} // namespace

ContourSpec default_contour(const EllipticOperator& op, long nodes) {
    const Eigen::VectorXd& mu = op.spectrum();
    double pos = 0.0;
    for (long r = 0; r < mu.size(); ++r) {
        if (mu[r] > 0.0) { pos = mu[r]; break; }
    }
    ContourSpec spec;
    spec.vertex = -(pos > 0.0 ? 0.5 * pos : 0.5);
    spec.half_aperture = 0.25 * kPi;
    spec.radius = 100.0 * std::max(1.0, mu.size() ? mu[mu.size() - 1] : 1.0);
    spec.nodes = nodes;
    return spec;
}

PowerOperator::PowerOperator(Complex exponent, Eigen::MatrixXcd dense,
                             Eigen::MatrixXcd kernel_projector, bool multiplier)
    : z_(exponent), dense_(std::move(dense)), p0_(std::move(kernel_projector)),
      multiplier_(multiplier) {
    if (dense_.rows() != dense_.cols() || p0_.rows() != dense_.rows() ||
        p0_.cols() != dense_.cols())
        throw DimensionError("power operator: representation and projector shapes differ");
}

Eigen::VectorXcd PowerOperator::values() const {
    if (!multiplier_)
        throw DomainError("power operator: dense route carries no multiplier values");
    return dense_.diagonal();
}

CoefficientVector PowerOperator::apply(const CoefficientVector& c) const {
    if (c.size() != dense_.rows())
        throw DimensionError("power operator: coefficient length mismatch");
    return dense_ * c;
}

PowerOperator spectral_power(const SpectralBasis& basis, Complex z) {
    const long m = basis.size();
    if (m == 0) throw DomainError("spectral power: empty basis");
    const Eigen::MatrixXcd& V = basis.vectors();
    const long K = V.rows();

    Eigen::VectorXcd w(m);
    Eigen::MatrixXcd P0 = Eigen::MatrixXcd::Zero(K, K);
    for (long j = 0; j < m; ++j) {
        const double mu = basis.mu(j);
        if (mu == 0.0) {
            if (z.real() < 0.0)
                throw SingularOperatorError("spectral power: zero mode with Re z < 0");
            w[j] = 0.0;
            P0 += V.col(j) * V.col(j).adjoint();
        } else {
            w[j] = std::pow(Complex(mu, 0.0), z);
        }
    }
    Eigen::MatrixXcd dense = V * w.asDiagonal() * V.adjoint();
    if (z.imag() == 0.0) dense = 0.5 * (dense + dense.adjoint()).eval();

    std::vector<long> support;
    return PowerOperator(z, std::move(dense), std::move(P0),
                         coordinate_columns(V, &support));
}

PowerOperator contour_power(const EllipticOperator& op, Complex z,
                            const ContourSpec& contour) {
    const ContourGeometry g = resolve_geometry(contour);
    const Eigen::VectorXd& mu = op.spectrum();
    if (mu.size() == 0) throw DomainError("contour power: empty spectrum");
    const double mu_lo = mu[0];
    const double mu_hi = mu[mu.size() - 1];
    if (!(mu_lo > contour.vertex))
        throw ContourCollisionError("contour power: spectrum is not strictly right of the vertex");
    collision_check(g, mu_lo, mu_hi);

    const Eigen::MatrixXcd A = op.dense_matrix();
    const long K = A.rows();
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(K, K);
    const Eigen::MatrixXcd P0 = op.kernel_projector();
    const bool kernel = (mu.array() == 0.0).any();

    auto resolve = [&](Complex lam) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd M = -A;
        M.diagonal().array() += lam;
        return M.partialPivLu().solve(eye);
    };
    // The zero-mode block of the sampled resolvent is exactly lambda^{-1} P0;
    // subtracting the scalar quadrature of lambda^{w-1} keeps the kernel
    // annihilated regardless of quadrature error.
    auto closed_quad = [&](Complex w) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd Q =
            contour_integral(g, contour.nodes, K, [&](Complex lam) -> Eigen::MatrixXcd {
                return std::pow(lam, w) * resolve(lam);
            });
        if (kernel) {
            const Complex q =
                contour_integral(g, contour.nodes, 1, [&](Complex lam) -> Eigen::MatrixXcd {
                    Eigen::MatrixXcd cell(1, 1);
                    cell(0, 0) = std::pow(lam, w) / lam;
                    return cell;
                })(0, 0);
            Q -= q * P0;
        }
        return Q;
    };
    // For integer z the closed contour also encircles the pole of lambda^z at
    // the origin, whose residue is -A^z on the positive modes; a small circle
    // around 0 recovers exactly that pole content, so closed minus circle is
    // A^z with the kernel annihilated (A^0 = I - P0).  The circle stays
    // strictly inside the smallest nonzero |mu| so it never swallows a
    // spectral block along with the pole.
    double abs_min = g.eps0;
    for (long r = 0; r < mu.size(); ++r)
        if (mu[r] != 0.0) abs_min = std::min(abs_min, std::abs(mu[r]));
    const double r0 = 0.5 * std::min(g.eps0, abs_min);
    auto circle_quad = [&](Complex w) -> Eigen::MatrixXcd {
        const long P = contour.nodes;
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(K, K);
        Complex scalar = 0.0;
        for (long i = 0; i < P; ++i) {
            const Complex lam = std::polar(r0, 2.0 * kPi * double(i) / double(P));
            const Complex weight = lam / double(P);
            acc += weight * (std::pow(lam, w) * resolve(lam));
            if (kernel) scalar += weight * std::pow(lam, w) / lam;
        }
        if (kernel) acc -= scalar * P0;
        return acc;
    };
    auto core_power = [&](Complex w) -> Eigen::MatrixXcd {
        return closed_quad(w) - branch_correction(A, w, g.eps0);
    };

    Eigen::MatrixXcd result;
    if (integer_exponent(z)) {
        const long zi = std::lround(z.real());
        if (zi >= 0) {
            // polynomial calculus is exact; the quadrature would have to
            // resolve an arc integrand of size radius^z
            result = eye - P0;
            for (long i = 0; i < zi; ++i) result = A * result;
        } else {
            result = closed_quad(z) - circle_quad(z);
        }
    } else {
        if (kernel)
            throw SingularOperatorError("contour power: fractional exponent with a zero mode");
        if (mu_lo < 0.0)
            throw ContourCollisionError("contour power: branch segment (vertex, 0] meets the spectrum");
        const double re = z.real();
        if (re >= 1.0)
            throw TruncationError("contour power: ray tail of lambda^z does not decay for Re z >= 1");
        if (re == std::floor(re))
            throw TruncationError("contour power: integer-real exponent with nonzero imaginary part leaves a non-decaying tail");
        if (re > 0.0) {
            result = A * core_power(z - 1.0);
        } else {
            const long shift = long(std::ceil(re)); // <= 0
            result = core_power(z - double(shift));
            if (shift < 0) {
                const Eigen::MatrixXcd Ainv = A.partialPivLu().solve(eye);
                for (long i = 0; i < -shift; ++i) result = Ainv * result;
            }
        }
    }
    if (z.imag() == 0.0) result = 0.5 * (result + result.adjoint()).eval();
    return PowerOperator(z, std::move(result), P0, op.is_multiplier());
}

Eigen::MatrixXcd resolvent(const EllipticOperator& op, Complex lambda) {
    const Eigen::VectorXd& mu = op.spectrum();
    if (mu.size() == 0) throw DomainError("resolvent: empty spectrum");
    const double radius = std::max(std::abs(mu[0]), std::abs(mu[mu.size() - 1]));
    double dist = std::numeric_limits<double>::infinity();
    for (long r = 0; r < mu.size(); ++r)
        dist = std::min(dist, std::abs(Complex(mu[r], 0.0) - lambda));
    if (dist <= 1e-10 * radius)
        throw SingularOperatorError("resolvent: lambda within tolerance of the spectrum");
    Eigen::MatrixXcd M = op.dense_matrix();
    M.diagonal().array() -= lambda;
    return M.partialPivLu().solve(Eigen::MatrixXcd::Identity(M.rows(), M.cols()));
}

ParameterEllipticityReport parameter_ellipticity_check(const ToroidalSymbol& sym,
                                                       double eps0,
                                                       double d_lambda) {
    if (!(eps0 > 0.0)) throw DomainError("parameter ellipticity: eps0 must be positive");
    if (!(d_lambda > 0.0)) throw DomainError("parameter ellipticity: d_lambda must be positive");

    const FourierLattice& lat = sym.lattice();
    const long rows = sym.is_multiplier() ? 1 : lat.grid_size();
    const long freqs = lat.frequency_count();
    const double m = sym.order();

    double theta_max = 0.0;
    double re_max = 0.0;
    for (long j = 0; j < freqs; ++j) {
        const std::vector<int> xi = lat.frequency(j);
        double n2 = 0.0;
        for (int c : xi) n2 += double(c) * c;
        theta_max = std::max(theta_max, std::sqrt(n2));
        for (long i = 0; i < rows; ++i)
            re_max = std::max(re_max, std::abs(sym.value(i, j).real()));
    }
    const double lam_cap = std::max({10.0 * eps0,
                                     std::pow(2.0 * (1.0 + theta_max), d_lambda),
                                     2.0 * re_max});

    const int lam_samples = 96;
    std::vector<double> lam_grid(lam_samples);
    const double lr = std::log(lam_cap / eps0);
    for (int i = 0; i < lam_samples; ++i)
        lam_grid[i] = -eps0 * std::exp(lr * double(i) / (lam_samples - 1));

    struct FreqStat {
        double norm = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        long arg_row = 0;
        double arg_lam = 0.0;
    };
    std::vector<FreqStat> stats(freqs);

    for (long j = 0; j < freqs; ++j) {
        const std::vector<int> xi = lat.frequency(j);
        double n2 = 0.0;
        for (int c : xi) n2 += double(c) * c;
        FreqStat st;
        st.norm = std::sqrt(n2);
        for (long i = 0; i < rows; ++i) {
            const Complex a = sym.value(i, j);
            const double star = std::clamp(a.real(), -lam_cap, -eps0);
            for (int q = 0; q <= lam_samples; ++q) {
                const double lam = (q < lam_samples) ? lam_grid[q] : star;
                const double weight =
                    std::pow(1.0 + st.norm + std::pow(std::abs(lam), 1.0 / d_lambda), m);
                const double ratio = std::abs(a - lam) / weight;
                if (ratio < st.lo) {
                    st.lo = ratio;
                    st.arg_row = i;
                    st.arg_lam = lam;
                }
                st.hi = std::max(st.hi, ratio);
            }
        }
        stats[j] = st;
    }

    ParameterEllipticityReport rep;
    const int N = lat.cutoff();
    for (int R = 0; R <= N; ++R) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        long arg = -1;
        for (long j = 0; j < freqs; ++j) {
            if (stats[j].norm < double(R)) continue;
            if (stats[j].lo < lo) { lo = stats[j].lo; arg = j; }
            hi = std::max(hi, stats[j].hi);
        }
        if (arg < 0) break;
        rep.C1 = lo;
        rep.C2 = hi;
        rep.R = double(R);
        rep.x_index = stats[arg].arg_row;
        rep.theta = lat.frequency(arg);
        rep.lambda = stats[arg].arg_lam;
        if (lo > 1e-9 * std::max(1.0, hi)) {
            rep.elliptic = true;
            return rep;
        }
    }
    rep.elliptic = false;
    return rep;
}

ProductOperatorReport product_operator_inverse(const SpectralBasis& basis,
                                               const DilatedTorus& torus,
                                               double nu,
                                               std::vector<double> eps_grid) {
    if (basis.size() == 0) throw DomainError("product operator: empty basis");
    if (!(std::abs(nu - basis.nu()) <= 1e-12 * std::max(1.0, std::abs(nu))))
        throw DomainError("product operator: nu disagrees with the basis order");
    if (eps_grid.empty())
        for (int i = 1; i <= 9; ++i) eps_grid.push_back(0.1 * i);
    for (double e : eps_grid)
        if (!(e >= 0.0 && e < 1.0))
            throw DomainError("product operator: eps grid entries must lie in [0,1)");

    const long modes = basis.size();
    Eigen::VectorXd lam_sq(modes);
    for (long j = 0; j < modes; ++j) lam_sq[j] = basis.lambda(j) * basis.lambda(j);
    const double floor_c = lam_sq.minCoeff();
    if (!(floor_c > 0.0))
        throw SingularOperatorError("product operator: basis floor is zero, joint spectrum touches 0");

    const FourierLattice& lat = basis.lattice();
    const Eigen::MatrixXcd& V = basis.vectors();
    const long K = V.rows();

    std::vector<long> support;
    const bool multiplier = coordinate_columns(V, &support);

    Eigen::VectorXd freq_weight(K);
    for (long i = 0; i < K; ++i) {
        const std::vector<int> xi = lat.frequency(i);
        double n2 = 0.0;
        for (int c : xi) n2 += double(c) * c;
        freq_weight[i] = 4.0 * kPi * kPi * n2;
    }

    ProductOperatorReport rep;
    rep.eps_grid = eps_grid;
    rep.floor_c = floor_c;
    rep.bound = 1.0 + 1.0 / floor_c;
    rep.multiplier_route = multiplier;

    for (double eps : eps_grid) {
        const DilatedTorus cyl(torus.horizon(), eps, torus.mode_cap());
        double B = 0.0;
        double C = 0.0;
        double joint_min = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= cyl.mode_cap(); ++k) {
            const double muk = cyl.eigenvalue(k);
            for (long j = 0; j < modes; ++j) {
                const double s = muk + lam_sq[j];
                joint_min = std::min(joint_min, s);
                B = std::max(B, (1.0 + s) / s);
            }
            if (multiplier) {
                for (long j = 0; j < modes; ++j)
                    C = std::max(C, (muk + freq_weight[support[j]]) / (muk + lam_sq[j]));
            } else {
                Eigen::VectorXd inv(modes);
                for (long j = 0; j < modes; ++j) inv[j] = 1.0 / (muk + lam_sq[j]);
                Eigen::MatrixXcd num = freq_weight.cast<Complex>().asDiagonal();
                num.diagonal().array() += muk;
                const Eigen::MatrixXcd comp =
                    num * V * inv.cast<Complex>().asDiagonal() * V.adjoint();
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(comp);
                C = std::max(C, svd.singularValues()(0));
            }
        }
        rep.B_eps.push_back(B);
        rep.C_eps.push_back(C);
        rep.min_joint.push_back(joint_min);
    }
    rep.B_sup = *std::max_element(rep.B_eps.begin(), rep.B_eps.end());
    rep.C_sup = *std::max_element(rep.C_eps.begin(), rep.C_eps.end());
    return rep;
}

} // namespace speclab
