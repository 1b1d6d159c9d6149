#include "speclab/inequality.hpp"

#include <fftw3.h>
#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "speclab/numerics.hpp"

namespace speclab {

namespace {

using F = __float128;

inline F quad_pi() {
    static const F pi = 4.0 * atanq(1.0);
    return pi;
}

struct QC {
    F re = 0.0;
    F im = 0.0;
};

inline QC operator+(QC a, QC b) { return {a.re + b.re, a.im + b.im}; }
inline QC operator*(QC a, QC b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline QC qconj(QC a) { return {a.re, -a.im}; }
inline F qabs2(QC a) { return a.re * a.re + a.im * a.im; }

// int_lo^hi e^{2 pi i m x} dx
QC axis_integral(long m, double lo, double hi) {
    if (m == 0) return {static_cast<F>(hi) - static_cast<F>(lo), 0.0};
    const F w = 2.0 * quad_pi() * static_cast<F>(m);
    const F a = w * static_cast<F>(lo), b = w * static_cast<F>(hi);
    return {(sinq(b) - sinq(a)) / w, (cosq(a) - cosq(b)) / w};
}

// T(d) = int_omega e^{2 pi i d.x} dx for every difference d in [-2N, 2N]^n,
// mixed-radix indexed by digits d_i + 2N.
std::vector<QC> difference_table(const FourierLattice& lat, const Subdomain& omega) {
    const int n = lat.dimension(), N = lat.cutoff();
    const long D = 4L * N + 1;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= D;
    std::vector<QC> table(total);
    if (omega.is_full()) {
        long zero = 0;
        for (int i = 0; i < n; ++i) zero = zero * D + 2 * N;
        table[zero] = {1.0, 0.0};
        return table;
    }
    std::vector<QC> axis(static_cast<std::size_t>(n) * D);
    for (const Box& box : omega.boxes()) {
        for (int i = 0; i < n; ++i)
            for (long d = -2 * N; d <= 2 * N; ++d)
                axis[i * D + d + 2 * N] = axis_integral(d, box.lo[i], box.hi[i]);
        for (long idx = 0; idx < total; ++idx) {
            long rest = idx;
            QC prod{1.0, 0.0};
            for (int i = n - 1; i >= 0; --i) {
                prod = prod * axis[i * D + rest % D];
                rest /= D;
            }
            table[idx] = table[idx] + prod;
        }
    }
    return table;
}

struct QuadGram {
    long m = 0;
    std::vector<QC> a; // row-major Hermitian, a[j*m+k] = <1_omega f_k, f_j>
    F frobenius() const {
        F s = 0.0;
        for (const QC& e : a) s += qabs2(e);
        return sqrtq(s);
    }
};

// Gram of the coefficient columns over omega, assembled in quad so that
// eigenvalues far below the double roundoff floor stay meaningful.
QuadGram assemble_gram(const FourierLattice& lat, const Subdomain& omega,
                       const Eigen::MatrixXcd& W) {
    const long K = lat.frequency_count();
    const long m = W.cols();
    if (W.rows() != K) throw DimensionError("mass matrix: columns do not match the lattice");
    if (m < 1) throw DomainError("mass matrix: no columns");
    const int n = lat.dimension(), N = lat.cutoff();
    const long D = 4L * N + 1;
    const std::vector<QC> table = difference_table(lat, omega);

    std::vector<int> freq(static_cast<std::size_t>(K) * n);
    for (long k = 0; k < K; ++k) {
        const auto xi = lat.frequency(k);
        for (int i = 0; i < n; ++i) freq[k * n + i] = xi[i];
    }
    auto diff_index = [&](long eta, long xi) {
        long idx = 0;
        for (int i = 0; i < n; ++i)
            idx = idx * D + (freq[xi * n + i] - freq[eta * n + i]) + 2 * N;
        return idx;
    };

    QuadGram g;
    g.m = m;
    g.a.assign(static_cast<std::size_t>(m) * m, QC{});

    // coordinate columns (multiplier bases) collapse the triple product
    std::vector<long> pos(m, -1);
    bool coordinate = true;
    for (long j = 0; j < m && coordinate; ++j) {
        for (long k = 0; k < K; ++k)
            if (W(k, j) != Complex(0.0, 0.0)) {
                if (pos[j] >= 0 || W(k, j) != Complex(1.0, 0.0)) {
                    coordinate = false;
                    break;
                }
                pos[j] = k;
            }
        if (pos[j] < 0) coordinate = false;
    }
    if (coordinate) {
        for (long j = 0; j < m; ++j)
            for (long k = 0; k < m; ++k) g.a[j * m + k] = table[diff_index(pos[j], pos[k])];
        return g;
    }

    std::vector<QC> Wq(static_cast<std::size_t>(K) * m);
    for (long k = 0; k < K; ++k)
        for (long j = 0; j < m; ++j)
            Wq[k * m + j] = {static_cast<F>(W(k, j).real()), static_cast<F>(W(k, j).imag())};
    std::vector<QC> B(static_cast<std::size_t>(K) * m);
    for (long eta = 0; eta < K; ++eta)
        for (long xi = 0; xi < K; ++xi) {
            const QC t = table[diff_index(eta, xi)];
            if (t.re == 0.0 && t.im == 0.0) continue;
            for (long k = 0; k < m; ++k) B[eta * m + k] = B[eta * m + k] + t * Wq[xi * m + k];
        }
    for (long j = 0; j < m; ++j)
        for (long k = 0; k < m; ++k) {
            QC s{};
            for (long eta = 0; eta < K; ++eta)
                s = s + qconj(Wq[eta * m + j]) * B[eta * m + k];
            g.a[j * m + k] = s;
        }
    return g;
}

// Cyclic Jacobi on a real symmetric matrix with accumulated rotations.
// Chosen over a double eigensolve for its high relative accuracy on positive
// semidefinite inputs; quadratic convergence makes the sweep cap generous.
void jacobi_symmetric(std::vector<F>& a, long n, std::vector<F>& v) {
    v.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (long i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 80; ++sweep) {
        F off = 0.0, diag = 0.0;
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j) {
                const F e = a[i * n + j] * a[i * n + j];
                if (i == j) diag += e;
                else off += e;
            }
        if (off <= diag * 1e-66) break;
        for (long p = 0; p < n - 1; ++p)
            for (long q = p + 1; q < n; ++q) {
                if (a[p * n + q] == 0.0) continue;
                const F theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
                const F t =
                    (theta >= 0.0 ? 1.0 : -1.0) / (fabsq(theta) + sqrtq(theta * theta + 1.0));
                const F c = 1.0 / sqrtq(t * t + 1.0), s = t * c;
                for (long k = 0; k < n; ++k) {
                    const F akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (long k = 0; k < n; ++k) {
                    const F apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (long k = 0; k < n; ++k) {
                    const F vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
    }
}

struct SmallestPair {
    F sigma = 0.0;
    Eigen::VectorXcd vec;
};

// Smallest eigenpair of the Hermitian quad Gram through the real symmetric
// 2m x 2m embedding [[A, -B], [B, A]].  Every eigenvalue arrives doubled
// (phase freedom), so the tie-break always runs: candidates within 1e-10
// relative are phase-normalized to a real-positive leading coefficient and
// the lexicographically largest wins.
SmallestPair smallest_eigenpair(const QuadGram& g) {
    const long m = g.m, n = 2 * m;
    std::vector<F> emb(static_cast<std::size_t>(n) * n, 0.0), vecs;
    for (long j = 0; j < m; ++j)
        for (long k = 0; k < m; ++k) {
            const QC e = g.a[j * m + k];
            emb[j * n + k] = e.re;
            emb[(m + j) * n + (m + k)] = e.re;
            emb[j * n + (m + k)] = -e.im;
            emb[(m + j) * n + k] = e.im;
        }
    jacobi_symmetric(emb, n, vecs);

    F dmin = emb[0];
    for (long i = 1; i < n; ++i) dmin = std::min<F>(dmin, emb[i * n + i]);
    const F tol = 1e-10 * std::max<F>(fabsq(dmin), g.frobenius() * 1e-33);

    Eigen::VectorXcd best;
    for (long i = 0; i < n; ++i) {
        if (emb[i * n + i] > dmin + tol) continue;
        std::vector<QC> v(m);
        F vmax = 0.0;
        for (long j = 0; j < m; ++j) {
            v[j] = {vecs[j * n + i], vecs[(m + j) * n + i]};
            vmax = std::max<F>(vmax, sqrtq(qabs2(v[j])));
        }
        long lead = 0;
        while (lead < m - 1 && sqrtq(qabs2(v[lead])) <= 1e-8 * vmax) ++lead;
        const F amp = sqrtq(qabs2(v[lead]));
        const QC phase{v[lead].re / amp, -v[lead].im / amp};
        Eigen::VectorXcd cand(m);
        for (long j = 0; j < m; ++j) {
            const QC w = phase * v[j];
            cand[j] = Complex(static_cast<double>(w.re), static_cast<double>(w.im));
        }
        bool take = best.size() == 0;
        for (long j = 0; j < m && !take; ++j) {
            if (cand[j].real() != best[j].real()) {
                take = cand[j].real() > best[j].real();
                break;
            }
            if (cand[j].imag() != best[j].imag()) {
                take = cand[j].imag() > best[j].imag();
                break;
            }
        }
        if (take) best = cand;
    }
    return {dmin, best};
}

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// fftw_execute is thread-safe, plan creation/destruction is not.
struct FftwPlan {
    fftw_plan plan;
    FftwPlan(int length, Complex* in, Complex* out) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_1d(length, reinterpret_cast<fftw_complex*>(in),
                                reinterpret_cast<fftw_complex*>(out), FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    ~FftwPlan() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    void run() { fftw_execute(plan); }
};

long retained_count(const SpectralBasis& basis, double cutoff) {
    const Eigen::VectorXd& l = basis.lambdas();
    return std::upper_bound(l.data(), l.data() + l.size(), cutoff) - l.data();
}

std::vector<double> uniform_grid(double a, double b, long samples) {
    std::vector<double> t(samples);
    for (long i = 0; i < samples; ++i)
        t[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(samples - 1);
    t.front() = a;
    t.back() = b;
    return t;
}

// Real coefficients of a band-p bump prod_i cos^{2p}(pi(x_i - b_i)) placed at
// the antipode of the ball center: binomial frame weights C(2p, p+k)/4^p with
// the translation phase, projected onto the retained columns.  These packets
// concentrate away from the ball and drive the exponential-in-lambda envelope
// of the doubling ratios; random packets alone stay near ratio 1.
Eigen::VectorXd concentration_coefficients(const SpectralBasis& basis, long m,
                                           const std::vector<double>& center) {
    const FourierLattice& lat = basis.lattice();
    const int n = lat.dimension();
    const long K = lat.frequency_count();
    const Eigen::MatrixXcd W = basis.vectors().leftCols(m);
    int p = 0;
    for (long j = 0; j < m; ++j) {
        long arg = 0;
        double best = -1.0;
        for (long k = 0; k < K; ++k) {
            const double v = std::abs(W(k, j));
            if (v > best) {
                best = v;
                arg = k;
            }
        }
        for (int comp : lat.frequency(arg)) p = std::max(p, std::abs(comp));
    }
    if (p == 0) return Eigen::VectorXd();
    std::vector<double> weight(2 * p + 1);
    for (int k = -p; k <= p; ++k)
        weight[k + p] = std::exp(std::lgamma(2.0 * p + 1.0) - std::lgamma(p + k + 1.0) -
                                 std::lgamma(p - k + 1.0) - 2.0 * p * std::numbers::ln2);
    Eigen::VectorXcd target = Eigen::VectorXcd::Zero(K);
    for (long k = 0; k < K; ++k) {
        const auto xi = lat.frequency(k);
        double w = 1.0, phase = 0.0;
        for (int i = 0; i < n; ++i) {
            if (std::abs(xi[i]) > p) {
                w = 0.0;
                break;
            }
            w *= weight[xi[i] + p];
            phase -= 2.0 * std::numbers::pi * xi[i] * (center[i] + 0.5);
        }
        if (w != 0.0) target[k] = w * Complex(std::cos(phase), std::sin(phase));
    }
    Eigen::VectorXd a = (W.adjoint() * target).real();
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale < 1e-12) return Eigen::VectorXd();
    return a / scale;
}

} // namespace

WavePacket::WavePacket(std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd coefficients,
                       double cutoff)
    : basis_(std::move(basis)), a_(std::move(coefficients)), cutoff_(cutoff) {
    if (!basis_) throw DomainError("packet: missing basis");
    if (!(cutoff_ > 0.0)) throw DomainError("packet: cutoff must be positive");
    const long m = retained_count(*basis_, cutoff_);
    if (m == 0) throw DomainError("packet: no modes at or below the cutoff");
    if (a_.size() != m)
        throw DimensionError("packet: expected " + std::to_string(m) + " coefficients, got " +
                             std::to_string(a_.size()));
    bool nonzero = false;
    for (long j = 0; j < m; ++j) {
        if (!std::isfinite(a_[j])) throw DomainError("packet: non-finite coefficient");
        if (a_[j] != 0.0) nonzero = true;
    }
    if (!nonzero) throw DomainError("packet: all coefficients vanish");
}

CoefficientVector WavePacket::frame_coefficients() const {
    return basis_->vectors().leftCols(a_.size()) * a_.cast<Complex>();
}

GridFunction WavePacket::evaluate() const {
    return basis_->lattice().transform_inverse(frame_coefficients());
}

WavePacket random_packet(std::shared_ptr<const SpectralBasis> basis, double cutoff,
                         std::uint64_t seed) {
    if (!basis) throw DomainError("random packet: missing basis");
    const long m = retained_count(*basis, cutoff);
    if (m == 0) throw DomainError("random packet: no modes at or below the cutoff");
    std::mt19937_64 rng(seed);
    Eigen::VectorXd a(m);
    for (long j = 0; j < m; ++j)
        a[j] = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    if (a.cwiseAbs().maxCoeff() < 1e-12) a[0] = 1.0;
    return WavePacket(std::move(basis), std::move(a), cutoff);
}

Eigen::MatrixXcd omega_mass_matrix(const FourierLattice& lattice, const Subdomain& omega,
                                   const Eigen::MatrixXcd& columns) {
    if (!omega.lattice().same_as(lattice))
        throw DimensionError("mass matrix: sensor built over a different lattice");
    const QuadGram g = assemble_gram(lattice, omega, columns);
    Eigen::MatrixXcd out(g.m, g.m);
    for (long j = 0; j < g.m; ++j)
        for (long k = 0; k < g.m; ++k) {
            const QC e = g.a[j * g.m + k];
            out(j, k) = Complex(static_cast<double>(e.re), static_cast<double>(e.im));
        }
    return out;
}

ObservabilityResult observability_constant(const SpectralBasis& basis, const Subdomain& omega,
                                           double lambda) {
    if (!omega.lattice().same_as(basis.lattice()))
        throw DimensionError("observability: sensor built over a different lattice");
    const long m = retained_count(basis, lambda);
    if (m == 0) throw DomainError("observability: no modes at or below lambda");
    const Eigen::MatrixXcd W = basis.vectors().leftCols(m);
    const QuadGram g = assemble_gram(basis.lattice(), omega, W);
    const SmallestPair p = smallest_eigenpair(g);
    const F floor = 1e-30 * std::max<F>(1.0, g.frobenius());
    if (p.sigma <= floor) {
        std::ostringstream msg;
        msg << "observability: sigma_min = " << static_cast<double>(p.sigma)
            << " is below the quad eigensolver trust floor; the sensor is too small for "
               "this truncation";
        throw IllConditionedSensorError(msg.str());
    }
    ObservabilityResult r;
    r.sigma_min = static_cast<double>(p.sigma);
    r.constant = static_cast<double>(1.0 / sqrtq(p.sigma));
    r.extremal = p.vec;
    return r;
}

FitResult fit_exponential(const std::vector<double>& grid, const std::vector<double>& values) {
    if (grid.size() != values.size())
        throw DimensionError("fit_exponential: grid/value length mismatch");
    if (grid.size() < 3) throw DomainError("fit_exponential: need at least 3 points");
    std::vector<double> logs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 1.0))
            throw DomainError("fit_exponential: values must be >= 1");
        logs[i] = std::log(values[i]);
    }
    const LineFit f = fit_line(grid, logs);
    return {std::exp(f.intercept), f.slope, f.r2};
}

ObservabilityReport observability_sweep(const SpectralBasis& basis, const Subdomain& omega,
                                        const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw DomainError("observability sweep: empty lambda grid");
    ObservabilityReport rep;
    for (double lam : lambdas) {
        const ObservabilityResult r = observability_constant(basis, omega, lam);
        rep.lambdas.push_back(lam);
        rep.constants.push_back(std::max(1.0, r.constant));
        rep.sigma_mins.push_back(r.sigma_min);
    }
    if (rep.lambdas.size() >= 3) rep.fit = fit_exponential(rep.lambdas, rep.constants);
    return rep;
}

SpaceTimeField build_F(const WavePacket& packet, std::vector<double> time_grid) {
    if (time_grid.empty() || time_grid.front() != 0.0 || !(time_grid.back() > 0.0))
        throw DomainError("build_F: time grid must run from 0 to a positive horizon");
    if (packet.cutoff() * time_grid.back() > 700.0)
        throw RescalingError("build_F: lambda*T exceeds 700; rescale time or lower the cutoff");
    const long m = packet.mode_count();
    const Eigen::VectorXd a = packet.coefficients();
    auto basis = packet.basis_ptr();
    auto fn = [basis, a, m](long mode, double t, int d) -> Complex {
        if (mode >= m) return 0.0;
        const double lam = basis->lambda(mode), c = a[mode];
        if (lam == 0.0) {
            if (d == 0) return c * t;
            if (d == 1) return c;
            return 0.0;
        }
        if (d == 0) return c * std::sinh(lam * t) / lam;
        if (d == 1) return c * std::cosh(lam * t);
        return c * lam * std::sinh(lam * t);
    };
    return SpaceTimeField(basis, std::move(time_grid), fn);
}

namespace {

struct InterpolationNorms {
    double mid = 0.0;
    double full = 0.0;
    double komega = 0.0;
};

InterpolationNorms interpolation_norms(const WavePacket& packet, const Subdomain& omega,
                                       double horizon, double alpha, long time_samples) {
    if (!(horizon > 0.0)) throw DomainError("interpolation: horizon must be positive");
    if (!(alpha > 0.0) || !(alpha < horizon / 2.0))
        throw DomainError("interpolation: alpha must lie in (0, T/2)");
    if (time_samples < 3) throw DomainError("interpolation: need at least 3 time samples");
    if (!omega.lattice().same_as(packet.basis().lattice()))
        throw DimensionError("interpolation: sensor built over a different lattice");
    const SpaceTimeField field = build_F(packet, uniform_grid(0.0, horizon, time_samples));
    InterpolationNorms n;
    n.full = sobolev_norm(field, 1);
    n.mid = sobolev_norm(field, 1, alpha, horizon - alpha);
    const Eigen::MatrixXcd col = packet.frame_coefficients();
    const QuadGram g = assemble_gram(packet.basis().lattice(), omega, col);
    n.komega = static_cast<double>(sqrtq(std::max<F>(0.0, g.a[0].re)));
    if (n.komega <= 1e-14 * packet.coefficients().norm())
        throw SingularOperatorError("interpolation: packet vanishes on the sensor");
    return n;
}

} // namespace

double interpolation_ratio(const WavePacket& packet, const Subdomain& omega, double horizon,
                           double alpha, double kappa_exp, long time_samples) {
    if (!(kappa_exp > 0.0) || !(kappa_exp < 1.0))
        throw DomainError("interpolation: kappa_exp must lie in (0, 1)");
    const InterpolationNorms n = interpolation_norms(packet, omega, horizon, alpha, time_samples);
    return n.mid / (std::pow(n.full, kappa_exp) * std::pow(n.komega, 1.0 - kappa_exp));
}

InterpolationSearch interpolation_search(const WavePacket& packet, const Subdomain& omega,
                                         double horizon, double alpha, long time_samples) {
    const InterpolationNorms n = interpolation_norms(packet, omega, horizon, alpha, time_samples);
    InterpolationSearch s;
    for (int k = 1; k <= 19; ++k) {
        const double kappa = 0.05 * k;
        const double ratio =
            n.mid / (std::pow(n.full, kappa) * std::pow(n.komega, 1.0 - kappa));
        s.exponents.push_back(kappa);
        s.ratios.push_back(ratio);
        if (s.ratio == 0.0 || ratio < s.ratio) {
            s.ratio = ratio;
            s.kappa = kappa;
        }
    }
    return s;
}

SymmetryReport symmetry_check(const SpaceTimeField& field, long time_samples) {
    if (time_samples < 8 || time_samples > (1L << 22))
        throw DomainError("symmetry: time samples out of range");
    const double L = field.horizon();
    if (!(L > 0.0) || std::abs(field.start() + L) > 1e-12 * std::max(1.0, L))
        throw DomainError("symmetry: field must span the symmetric window [-L, L]");
    const SpectralBasis& basis = field.basis();
    const long m = basis.size(), P = time_samples;
    const double pi = std::numbers::pi;

    std::vector<Complex> in(P), out(P);
    FftwPlan plan(static_cast<int>(P), in.data(), out.data());
    double lhs = 0.0;
    for (long j = 0; j < m; ++j) {
        const double lam = basis.lambda(j);
        for (long s = 0; s < P; ++s)
            in[s] = field.coefficient(j, -L + 2.0 * L * static_cast<double>(s) / P, 0);
        plan.run();
        for (long k = 0; k < P; ++k) {
            const long kt = k <= P / 2 ? k : k - P;
            const double w = pi * static_cast<double>(kt) / L;
            const double w2 = w * w + lam * lam;
            lhs += 2.0 * L * w2 * w2 * std::norm(out[k] / static_cast<double>(P));
        }
    }

    auto defect_density = [&](double t) {
        double total = 0.0;
        for (long j = 0; j < m; ++j) {
            const double lam = basis.lambda(j);
            total += std::norm(lam * lam * field.coefficient(j, t, 0) - field.coefficient(j, t, 2));
        }
        return total;
    };
    const double rhs = 2.0 * simpson_refined(defect_density, 0.0, L, 1e-11, 64);

    SymmetryReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.rel_error = std::abs(lhs - rhs) / std::max({lhs, rhs, 1e-300});
    double defect = 0.0, scale = 0.0;
    const long Q = 128;
    for (long q = 0; q <= Q; ++q) {
        const double t = L * static_cast<double>(q) / Q;
        for (long j = 0; j < m; ++j) {
            const Complex plus = field.coefficient(j, t, 0);
            const Complex minus = field.coefficient(j, -t, 0);
            defect = std::max(defect, std::abs(plus + minus));
            scale = std::max({scale, std::abs(plus), std::abs(minus)});
        }
    }
    rep.odd_defect = defect / std::max(scale, 1e-300);
    return rep;
}

double doubling_ratio(const WavePacket& packet, const std::vector<double>& center, double radius,
                      long oversample) {
    const FourierLattice& lat = packet.basis().lattice();
    const int n = lat.dimension();
    if (static_cast<int>(center.size()) != n)
        throw DimensionError("doubling: center dimension mismatch");
    if (!(radius > 0.0) || !(radius < 0.25))
        throw DomainError("doubling: radius must lie in (0, 1/4) so B(2R) stays injective");
    if (oversample < 1) throw DomainError("doubling: oversample must be >= 1");
    const CoefficientVector c = packet.frame_coefficients();
    int f_top = 1;
    std::vector<QC> coeff;
    std::vector<int> freq;
    for (long k = 0; k < c.size(); ++k) {
        if (std::abs(c[k]) == 0.0) continue;
        const std::vector<int> xi = lat.frequency(k);
        for (int v : xi) f_top = std::max(f_top, std::abs(v));
        coeff.push_back(QC{c[k].real(), c[k].imag()});
        freq.insert(freq.end(), xi.begin(), xi.end());
    }
    // the sups are taken in quad precision: concentrated packets dip many
    // orders below the double roundoff floor inside the inner ball, and the
    // vanishing guard has to be able to see that
    const F two_pi = 2.0 * quad_pi();
    const double step = 1.0 / (2.0 * oversample * f_top);
    const long kmax = static_cast<long>(std::floor(2.0 * radius / step));
    std::vector<long> digit(n, -kmax);
    std::vector<F> x(n);
    F sup1 = 0.0, sup2 = 0.0;
    while (true) {
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double off = digit[i] * step;
            r2 += off * off;
            x[i] = F(center[i]) + F(off);
        }
        if (r2 <= 4.0 * radius * radius) {
            F re = 0.0, im = 0.0;
            for (std::size_t k = 0; k < coeff.size(); ++k) {
                F dot = 0.0;
                for (int i = 0; i < n; ++i) dot += F(freq[k * n + i]) * x[i];
                const F ph = two_pi * dot;
                const F cs = cosq(ph), sn = sinq(ph);
                re += coeff[k].re * cs - coeff[k].im * sn;
                im += coeff[k].re * sn + coeff[k].im * cs;
            }
            const F v = re * re + im * im;
            if (v > sup2) sup2 = v;
            if (r2 <= radius * radius && v > sup1) sup1 = v;
        }
        int i = n - 1;
        while (i >= 0 && ++digit[i] > kmax) digit[i--] = -kmax;
        if (i < 0) break;
    }
    const F s1 = sqrtq(sup1), s2 = sqrtq(sup2);
    if (s1 <= 1e-14 * std::max<F>(s2, 1e-300))
        throw SingularOperatorError("doubling: packet vanishes on the inner ball");
    return static_cast<double>(s2 / s1);
}

DoublingReport doubling_sweep(std::shared_ptr<const SpectralBasis> basis,
                              const std::vector<double>& center, double radius,
                              const std::vector<double>& lambdas, long packets_per_cell,
                              std::uint64_t seed) {
    if (!basis) throw DomainError("doubling sweep: missing basis");
    if (lambdas.empty()) throw DomainError("doubling sweep: empty lambda grid");
    if (packets_per_cell < 1) throw DomainError("doubling sweep: need at least one packet");
    std::mt19937_64 master(seed);
    DoublingReport rep;
    rep.center = center;
    rep.radius = radius;
    for (double lam : lambdas) {
        double best = 0.0;
        for (long p = 0; p < packets_per_cell; ++p) {
            const WavePacket packet = random_packet(basis, lam, master());
            best = std::max(best, doubling_ratio(packet, center, radius));
        }
        const long m = retained_count(*basis, lam);
        if (m > 0) {
            const Eigen::VectorXd bump = concentration_coefficients(*basis, m, center);
            if (bump.size() > 0)
                best = std::max(best,
                                doubling_ratio(WavePacket(basis, bump, lam), center, radius));
        }
        rep.lambdas.push_back(lam);
        rep.ratios.push_back(best);
    }
    if (rep.lambdas.size() >= 3) rep.fit = fit_exponential(rep.lambdas, rep.ratios);
    return rep;
}

} // namespace speclab
