// Acceptance gate: one line per criterion, nonzero exit when any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "speclab/calculus.hpp"
#include "speclab/control.hpp"
#include "speclab/inequality.hpp"
#include "speclab/psi.hpp"

using namespace speclab;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class Body>
void criterion(int idx, const char* label, Body&& body) {
    const double t0 = now_s();
    bool ok = false;
    std::string detail;
    try {
        std::tie(ok, detail) = body();
    } catch (const std::exception& err) {
        ok = false;
        detail = std::string("exception: ") + err.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] %2d %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", idx, label,
                detail.c_str(), now_s() - t0);
    std::fflush(stdout);
}

std::shared_ptr<const SpectralBasis> helmholtz_basis(LatticePtr lat, double lambda_max,
                                                     double shift = 1.0) {
    auto sym = ToroidalSymbol::from_multiplier(lat, 2.0, [shift](const std::vector<int>& xi) {
        double s = 0;
        for (int c : xi) s += double(c) * c;
        return Complex(shift + 4.0 * kPi * kPi * s, 0.0);
    });
    return std::make_shared<SpectralBasis>(eigendata(assemble_operator(sym), lambda_max));
}

std::vector<double> arange(double a, double b, double step) {
    std::vector<double> g;
    for (double x = a; x <= b + 1e-12; x += step) g.push_back(x);
    return g;
}

std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// int_0^T e^{-(T-t)s} t^p dt by parts; the spectra here keep sT either 0 or
// >= 1, away from the cancellation regime.
double decay_moment(double s, int p, double T) {
    if (s == 0.0) return std::pow(T, p + 1) / (p + 1);
    static const double binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
    const double e = std::exp(-s * T);
    std::array<double, 3> J{};
    J[0] = -std::expm1(-s * T) / s;
    for (int k = 1; k <= p; ++k) J[k] = (k * J[k - 1] - std::pow(T, k) * e) / s;
    double acc = 0.0;
    for (int q = 0; q <= p; ++q)
        acc += binom[p][q] * std::pow(T, p - q) * ((q % 2) ? -1.0 : 1.0) * J[q];
    return acc;
}

// Exact L2(omega x (0,T)) energy of a_j(t) = A_j e^{-(T-t)s_j} + P_j(t) with
// quadratic polynomial P, through the sensor mass matrix M.
double control_energy(const Eigen::MatrixXcd& M, const Eigen::VectorXd& s, double T,
                      const Eigen::VectorXcd& A, const Eigen::MatrixXcd& P) {
    const long m = A.size();
    Complex total(0.0, 0.0);
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < m; ++j) {
            Complex bracket = std::conj(A[i]) * A[j] * decay_moment(s[i] + s[j], 0, T);
            for (int p = 0; p < 3; ++p) {
                bracket += std::conj(A[i]) * P(j, p) * decay_moment(s[i], p, T);
                bracket += A[j] * std::conj(P(i, p)) * decay_moment(s[j], p, T);
                for (int q = 0; q < 3; ++q)
                    bracket += std::conj(P(i, p)) * P(j, q) *
                               (std::pow(T, p + q + 1) / (p + q + 1));
            }
            total += M(i, j) * bracket;
        }
    return total.real();
}

// seventh-order smoothstep and derivatives, used as the time cutoff
double s7(double u) { return ((((-20.0 * u + 70.0) * u - 84.0) * u + 35.0) * u) * u * u * u; }
double s7d(double u) { return (((-140.0 * u + 420.0) * u - 420.0) * u + 140.0) * u * u * u; }
double s7dd(double u) { return (((-840.0 * u + 2100.0) * u - 1680.0) * u + 420.0) * u * u; }

std::vector<double> linspace(double a, double b, long count) {
    std::vector<double> g(count);
    for (long i = 0; i < count; ++i)
        g[i] = a + (b - a) * double(i) / double(count - 1);
    return g;
}

} // namespace

int main() {
    auto lat128 = std::make_shared<FourierLattice>(1, 64); // 129 frame modes
    auto omega128 = Subdomain::intervals(lat128, {{0.0, 0.3}});
    const std::vector<double> lambda_grid = arange(5.0, 60.0, 5.0);

    criterion(1, "observability growth on the sensor (0,0.3)", [&] {
        const double t0 = now_s();
        auto basis = helmholtz_basis(lat128, 60.0);
        ObservabilityReport rep = observability_sweep(*basis, *&omega128, lambda_grid);
        bool finite = true, monotone = true;
        for (std::size_t i = 0; i < rep.constants.size(); ++i) {
            finite = finite && std::isfinite(rep.constants[i]) && rep.constants[i] > 0.0;
            if (i) monotone = monotone && rep.constants[i] >= rep.constants[i - 1];
        }
        const double elapsed = now_s() - t0;
        const bool ok = finite && monotone && rep.fit.r2 >= 0.9 && rep.fit.C2 > 0.0 &&
                        elapsed <= 60.0;
        return std::pair(ok, fmt("R2=%.4f C2=%.3f max C=%.2e over 12 cutoffs", rep.fit.r2,
                                 rep.fit.C2, rep.constants.back()));
    });

    criterion(2, "full sensor degeneracy C=1", [&] {
        auto basis = helmholtz_basis(lat128, 60.0);
        Subdomain full = Subdomain::full(lat128);
        ObservabilityReport rep = observability_sweep(*basis, full, lambda_grid);
        double worst = 0.0;
        for (double c : rep.constants) worst = std::max(worst, std::abs(c - 1.0));
        return std::pair(worst <= 1e-10, fmt("worst |C-1| = %.2e", worst));
    });

    criterion(3, "functional calculus routes at a 31-mode truncation", [&] {
        auto lat = std::make_shared<FourierLattice>(1, 15);
        auto sym = ToroidalSymbol::from_multiplier(lat, 2.0, [](const std::vector<int>& xi) {
            double s = 0;
            for (int c : xi) s += double(c) * c;
            return Complex(1.0 + 4.0 * kPi * kPi * s, 0.0);
        });
        EllipticOperator op = assemble_operator(sym);
        SpectralBasis basis = eigendata(op, std::sqrt(op.spectral_ceiling()) + 1.0);
        ContourSpec spec = default_contour(op, 400);
        double worst_route = 0.0;
        for (double zr : {-1.0, -0.5, 0.5}) {
            const Eigen::MatrixXcd ref = spectral_power(basis, Complex(zr, 0.0)).dense();
            const Eigen::MatrixXcd got = contour_power(op, Complex(zr, 0.0), spec).dense();
            worst_route = std::max(worst_route, (got - ref).norm() / ref.norm());
        }
        const Eigen::MatrixXcd a = contour_power(op, Complex(0.5, 0.0), spec).dense();
        const Eigen::MatrixXcd b = contour_power(op, Complex(0.25, 0.0), spec).dense();
        const Eigen::MatrixXcd c = contour_power(op, Complex(0.75, 0.0), spec).dense();
        const double semigroup = (a * b - c).norm() / c.norm();

        auto lsym = ToroidalSymbol::from_multiplier(lat, 2.0, [](const std::vector<int>& xi) {
            double s = 0;
            for (int c2 : xi) s += double(c2) * c2;
            return Complex(4.0 * kPi * kPi * s, 0.0);
        });
        EllipticOperator lop = assemble_operator(lsym);
        const long K = lop.mode_count();
        const Eigen::MatrixXcd IP0 = Eigen::MatrixXcd::Identity(K, K) - lop.kernel_projector();
        const Eigen::MatrixXcd inv =
            contour_power(lop, Complex(-1.0, 0.0), default_contour(lop, 800)).dense();
        const double kernel_gap = (inv * lop.dense_matrix() - IP0).norm();

        const bool ok = worst_route <= 1e-6 && semigroup <= 1e-8 && kernel_gap <= 1e-8;
        return std::pair(ok, fmt("route gap=%.2e semigroup=%.2e kernel inverse=%.2e",
                                 worst_route, semigroup, kernel_gap));
    });

    criterion(4, "hum null control with the scalar and minimality oracles", [&] {
        const double T = 1.0;
        auto basis = helmholtz_basis(lat128, 63.0); // 21 modes, parity forbids exactly 20
        const long m = basis->size();
        CoefficientVector u0(m);
        for (long j = 0; j < m; ++j) u0[j] = Complex(1.0 / (1.0 + double(j)), 0.0);
        ControlProblem pb(basis, 1.0, T, omega128, u0);
        ControlResult res = hum_control(pb);

        auto scalar_basis = helmholtz_basis(lat128, 1.0);
        ControlProblem spb(scalar_basis, 1.0, T, omega128, CoefficientVector::Ones(1));
        ControlResult sres = hum_control(spb);
        const double G00 = 0.3 * -std::expm1(-2.0 * T) / 2.0;
        const Complex phi_closed(-std::exp(-T) / G00, 0.0);
        const double cost_closed = std::exp(-T) / std::sqrt(G00);
        const double scalar_gap =
            std::max(std::abs(sres.phi[0] - phi_closed) / std::abs(phi_closed),
                     std::abs(sres.cost - cost_closed) / cost_closed);

        Eigen::MatrixXcd mass = omega_mass_matrix(*lat128, omega128, basis->vectors());
        Eigen::MatrixXcd G = observability_gramian(pb);
        Eigen::VectorXd s(m);
        for (long j = 0; j < m; ++j) s[j] = basis->mu(j);
        Eigen::LDLT<Eigen::MatrixXcd> ldlt(G);
        const double base =
            std::sqrt(control_energy(mass, s, T, res.phi, Eigen::MatrixXcd::Zero(m, 3)));
        int beaten = 0;
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::MatrixXcd poly(m, 3);
            for (long j = 0; j < m; ++j)
                for (int p = 0; p < 3; ++p) poly(j, p) = Complex(U(rng), U(rng));
            Eigen::VectorXcd q = Eigen::VectorXcd::Zero(m);
            for (long i = 0; i < m; ++i)
                for (long j = 0; j < m; ++j)
                    for (int p = 0; p < 3; ++p)
                        q[i] += mass(i, j) * poly(j, p) * decay_moment(s[i], p, T);
            const Eigen::VectorXcd psi = ldlt.solve(q);
            const double perturbed =
                std::sqrt(std::max(0.0, control_energy(mass, s, T, res.phi - psi, poly)));
            if (perturbed < res.cost - 1e-8) ++beaten;
        }
        const bool ok = res.residual <= 1e-8 && scalar_gap <= 1e-10 && beaten == 0 &&
                        std::abs(base - res.cost) <= 1e-8 * res.cost;
        return std::pair(ok, fmt("m=%ld residual=%.2e scalar gap=%.2e beaten=%d/100", m,
                                 res.residual, scalar_gap, beaten));
    });

    criterion(5, "lebeau robbiano iteration decays past the single shot", [&] {
        auto basis = helmholtz_basis(lat128, 63.0);
        const long m = basis->size();
        CoefficientVector u0(m);
        for (long j = 0; j < m; ++j) u0[j] = Complex(1.0 / (1.0 + double(j)), 0.0);
        ControlProblem pb(basis, 1.0, 1.0, omega128, u0);
        ControlResult hum = hum_control(pb);
        LrResult lr = lr_iterative_control(pb);
        bool decreasing = lr.stages.size() >= 3;
        for (std::size_t k = 1; k < lr.stages.size(); ++k)
            decreasing = decreasing && lr.stages[k].post_norm < lr.stages[k - 1].post_norm;
        const bool ok = decreasing && lr.final_residual <= 10.0 * hum.residual;
        return std::pair(ok, fmt("stages=%zu final=%.2e vs 10x hum=%.2e", lr.stages.size(),
                                 lr.final_residual, 10.0 * hum.residual));
    });

    criterion(6, "cost curve falls with the horizon and fits the blow-up", [&] {
        auto basis = helmholtz_basis(lat128, 40.0);
        ControlProblem pb(basis, 1.0, 1.0, omega128,
                          CoefficientVector::Zero(basis->size()));
        CostCurve curve = cost_curve(pb, arange(0.05, 1.0, 0.05));
        bool monotone = true, all_ok = true;
        double prev = std::numeric_limits<double>::infinity();
        for (const CostPoint& p : curve.points) {
            all_ok = all_ok && p.ok;
            monotone = monotone && p.cost <= prev * (1.0 + 1e-9);
            prev = p.cost;
        }
        const bool ok = curve.beta_star == 1.0 && monotone && all_ok &&
                        curve.beta_fit > 0.0 && curve.beta_fit <= 1.5;
        return std::pair(ok, fmt("beta*=%.1f beta_fit=%.3f over %zu horizons",
                                 curve.beta_star, curve.beta_fit, curve.points.size()));
    });

    criterion(7, "miller gate separates the exponents", [&] {
        const MillerReport good = miller_gate(0.6, 2.0);
        const MillerReport bad = miller_gate(0.5, 2.0);
        bool monotone = true, seen = false;
        for (double a = 0.1; a <= 1.5 + 1e-12; a += 0.05) {
            const bool adm = miller_gate(a, 2.0).admissible;
            if (seen && !adm) monotone = false;
            seen = seen || adm;
        }
        const bool ok = good.admissible && good.beta_star == 5.0 && !bad.admissible &&
                        std::isnan(bad.beta_star) && monotone;
        return std::pair(ok, fmt("(0.6,2) beta*=%.1f; (0.5,2) rejected; monotone=%d",
                                 good.beta_star, int(monotone)));
    });

    criterion(8, "psi regularizer vanishes at the horizon with a uniform sup", [&] {
        const std::vector<double> eps_grid = arange(0.1, 0.9, 0.1);
        bool branches = true;
        double worst_residual = 0.0;
        for (double eps : eps_grid) {
            PsiFunction psi(eps, 1.0);
            PsiReport rep = verify_psi(psi, 4000);
            for (double r : rep.branch_residual) worst_residual = std::max(worst_residual, r);
            branches = branches && rep.ok && rep.psi0 > 0.0 && rep.psi0 < eps;
        }
        const double m0 = uniform_sup_bound(1.0, eps_grid, 4000);
        const double m0_fine = uniform_sup_bound(1.0, eps_grid, 8000);
        const double drift = std::abs(m0 - m0_fine) / m0_fine;
        const bool ok = branches && worst_residual <= 1e-6 && std::isfinite(m0) &&
                        m0 > 0.0 && drift <= 0.02;
        return std::pair(ok, fmt("worst branch=%.2e M0=%.3e refinement drift=%.3f%%",
                                 worst_residual, m0, 100.0 * drift));
    });

    criterion(9, "cylinder spectrum and product inverse bounds", [&] {
        const double mu1 = DilatedTorus(1.0, 0.0, 8).eigenvalue(1);
        const double mu_gap = std::abs(mu1 - kPi * kPi);
        auto lat = std::make_shared<FourierLattice>(1, 16);
        bool bounds = true, finite = true;
        double worst_drift = 0.0;
        for (double c : {0.5, 1.0, 2.0}) {
            auto basis = helmholtz_basis(lat, 40.0, c);
            ProductOperatorReport rep =
                product_operator_inverse(*basis, DilatedTorus(1.0, 0.0, 8), 2.0);
            ProductOperatorReport fine =
                product_operator_inverse(*basis, DilatedTorus(1.0, 0.0, 16), 2.0);
            for (double b : rep.B_eps) bounds = bounds && b <= 1.0 + 1.0 / c + 1e-9;
            for (double v : rep.C_eps) finite = finite && std::isfinite(v);
            worst_drift =
                std::max(worst_drift, std::abs(rep.C_sup - fine.C_sup) / fine.C_sup);
        }
        const bool ok = mu_gap <= 1e-14 && bounds && finite && worst_drift <= 0.05;
        return std::pair(ok, fmt("|mu1-pi^2|=%.1e bounds held, C_sup drift=%.3f%%", mu_gap,
                                 100.0 * worst_drift));
    });

    criterion(10, "time circle symmetry identity and its negative control", [&] {
        auto lat = std::make_shared<FourierLattice>(1, 16);
        auto basis = helmholtz_basis(lat, 12.0);
        const double L = 1.2;
        const WavePacket pk = random_packet(basis, 10.0, 0x51ac);
        const Eigen::VectorXd a = pk.coefficients();
        const double t0 = 0.6, t1 = 1.1, dt = t1 - t0;
        auto window = [&](double s, int d) {
            if (s <= t0) return d == 0 ? 1.0 : 0.0;
            if (s >= t1) return 0.0;
            const double u = (s - t0) / dt;
            if (d == 0) return 1.0 - s7(u);
            if (d == 1) return -s7d(u) / dt;
            return -s7dd(u) / (dt * dt);
        };
        auto odd_fn = [&](long j, double t, int d) -> Complex {
            if (j >= a.size()) return 0.0;
            const double lam = basis->lambda(j), c = a[j];
            const double s = std::abs(t), sgn = t < 0.0 ? -1.0 : 1.0;
            const double f = c * std::sinh(lam * s) / lam;
            const double f1 = c * std::cosh(lam * s);
            const double f2 = c * lam * std::sinh(lam * s);
            const double w = window(s, 0), w1 = window(s, 1), w2 = window(s, 2);
            if (d == 0) return sgn * f * w;
            if (d == 1) return f1 * w + f * w1;
            return sgn * (f2 * w + 2.0 * f1 * w1 + f * w2);
        };
        const SpaceTimeField odd_field(basis, linspace(-L, L, 49), odd_fn);
        const SymmetryReport odd = symmetry_check(odd_field);

        auto even_fn = [&](long j, double t, int d) -> Complex {
            const double b = 1.0 / (1.0 + double(j));
            const double s = std::abs(t), sgn = t < 0.0 ? -1.0 : 1.0;
            if (d == 0) return b * std::sin(s + 0.3);
            if (d == 1) return b * sgn * std::cos(s + 0.3);
            return -b * std::sin(s + 0.3);
        };
        const SpaceTimeField even_field(basis, linspace(-L, L, 33), even_fn);
        const SymmetryReport even = symmetry_check(even_field);

        const bool ok = odd.rel_error <= 1e-8 && odd.odd_defect <= 1e-12 &&
                        even.odd_defect > 0.0 && even.rel_error > 1e-4;
        return std::pair(ok, fmt("odd rel=%.2e; even defect=%.2f rel=%.2e", odd.rel_error,
                                 even.odd_defect, even.rel_error));
    });

    criterion(11, "doubling ratios: exact constant packet and envelope fit", [&] {
        auto lat = std::make_shared<FourierLattice>(1, 64);
        auto basis = helmholtz_basis(lat, 40.0);
        const WavePacket constant(basis, Eigen::VectorXd::Constant(1, 2.3), 1.0);
        const double flat_ratio = doubling_ratio(constant, {0.4}, 0.1);
        DoublingReport rep =
            doubling_sweep(basis, {0.5}, 0.1, arange(5.0, 40.0, 5.0), 8, 0xacce97);
        bool finite = true;
        for (double r : rep.ratios) finite = finite && std::isfinite(r) && r >= 1.0;
        const bool ok = flat_ratio == 1.0 && finite && rep.fit.r2 >= 0.8;
        return std::pair(ok, fmt("constant ratio=%.17g envelope R2=%.4f", flat_ratio,
                                 rep.fit.r2));
    });

    criterion(12, "interpolation ratios stable under time grid doubling", [&] {
        auto lat = std::make_shared<FourierLattice>(1, 64);
        auto basis = helmholtz_basis(lat, 40.0);
        auto omega = Subdomain::intervals(lat, {{0.0, 0.3}});
        double worst_drift = 0.0;
        bool finite = true;
        for (int i = 0; i < 50; ++i) {
            const WavePacket pk = random_packet(basis, 40.0, 0x12e + std::uint64_t(i));
            const InterpolationSearch coarse = interpolation_search(pk, omega, 1.0, 0.1, 65);
            const InterpolationSearch fine = interpolation_search(pk, omega, 1.0, 0.1, 129);
            finite = finite && std::isfinite(coarse.ratio) && coarse.ratio > 0.0;
            worst_drift = std::max(worst_drift,
                                   std::abs(coarse.ratio - fine.ratio) / fine.ratio);
        }
        const bool ok = finite && worst_drift <= 0.05;
        return std::pair(ok, fmt("50 packets, worst drift=%.4f%%", 100.0 * worst_drift));
    });

    std::printf("%d of 12 criteria passed\n", 12 - failures);
    return failures == 0 ? 0 : 1;
}
