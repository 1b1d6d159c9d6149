#include "speclab/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace speclab {

namespace {

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// fftw_execute is thread-safe, plan creation/destruction is not.
struct FftwPlan {
    fftw_plan plan;
    FftwPlan(int rank, const int* dims, Complex* in, Complex* out, int sign) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft(rank, dims,
                             reinterpret_cast<fftw_complex*>(in),
                             reinterpret_cast<fftw_complex*>(out),
                             sign, FFTW_ESTIMATE);
    }
    ~FftwPlan() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }
    void run() { fftw_execute(plan); }
};

long ipow(long b, int e) {
    long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

} // namespace

FourierLattice::FourierLattice(int dimension, int cutoff) : n_(dimension), N_(cutoff) {
    if (n_ < 1 || n_ > 4) throw DimensionError("lattice: dimension must be in 1..4");
    if (N_ < 1) throw DomainError("lattice: cutoff must be >= 1");
    G_ = 2 * (2 * N_ + 1);
    grid_size_ = ipow(G_, n_);
    freq_count_ = ipow(2L * N_ + 1, n_);
    if (grid_size_ > (1L << 26)) throw DomainError("lattice: grid too large");
}

std::vector<int> FourierLattice::frequency(long index) const {
    if (index < 0 || index >= freq_count_) throw DomainError("lattice: frequency index out of range");
    std::vector<int> xi(n_);
    const long M = 2L * N_ + 1;
    for (int i = n_ - 1; i >= 0; --i) {
        xi[i] = static_cast<int>(index % M) - N_;
        index /= M;
    }
    return xi;
}

long FourierLattice::frequency_index(const std::vector<int>& xi) const {
    if (static_cast<int>(xi.size()) != n_) throw DimensionError("lattice: frequency arity mismatch");
    const long M = 2L * N_ + 1;
    long idx = 0;
    for (int i = 0; i < n_; ++i) {
        if (xi[i] < -N_ || xi[i] > N_) throw DomainError("lattice: frequency outside cutoff");
        idx = idx * M + (xi[i] + N_);
    }
    return idx;
}

std::vector<double> FourierLattice::grid_point(long index) const {
    if (index < 0 || index >= grid_size_) throw DomainError("lattice: grid index out of range");
    std::vector<double> x(n_);
    for (int i = n_ - 1; i >= 0; --i) {
        x[i] = static_cast<double>(index % G_) / G_;
        index /= G_;
    }
    return x;
}

void FourierLattice::check_grid(const GridFunction& u, const char* who) const {
    if (u.size() != grid_size_) throw DimensionError(std::string(who) + ": grid length mismatch");
}

void FourierLattice::check_coeffs(const CoefficientVector& c, const char* who) const {
    if (c.size() != freq_count_) throw DimensionError(std::string(who) + ": coefficient length mismatch");
}

CoefficientVector FourierLattice::transform_forward(const GridFunction& u) const {
    check_grid(u, "transform_forward");
    std::vector<Complex> in(u.data(), u.data() + u.size());
    std::vector<Complex> out(grid_size_);
    std::vector<int> dims(n_, G_);
    FftwPlan plan(n_, dims.data(), in.data(), out.data(), FFTW_FORWARD);
    plan.run();
    CoefficientVector c(freq_count_);
    const double scale = 1.0 / static_cast<double>(grid_size_);
    for (long k = 0; k < freq_count_; ++k) {
        const std::vector<int> xi = frequency(k);
        long bin = 0;
        for (int i = 0; i < n_; ++i) {
            const int b = xi[i] >= 0 ? xi[i] : xi[i] + G_;
            bin = bin * G_ + b;
        }
        c[k] = out[bin] * scale;
    }
    return c;
}

GridFunction FourierLattice::transform_inverse(const CoefficientVector& coeffs) const {
    check_coeffs(coeffs, "transform_inverse");
    std::vector<Complex> in(grid_size_, Complex(0, 0));
    std::vector<Complex> out(grid_size_);
    for (long k = 0; k < freq_count_; ++k) {
        const std::vector<int> xi = frequency(k);
        long bin = 0;
        for (int i = 0; i < n_; ++i) {
            const int b = xi[i] >= 0 ? xi[i] : xi[i] + G_;
            bin = bin * G_ + b;
        }
        in[bin] = coeffs[k];
    }
    std::vector<int> dims(n_, G_);
    FftwPlan plan(n_, dims.data(), in.data(), out.data(), FFTW_BACKWARD);
    plan.run();
    return Eigen::Map<GridFunction>(out.data(), grid_size_);
}

Eigen::VectorXcd FourierLattice::full_spectrum(const GridFunction& u) const {
    check_grid(u, "full_spectrum");
    std::vector<Complex> in(u.data(), u.data() + u.size());
    std::vector<Complex> out(grid_size_);
    std::vector<int> dims(n_, G_);
    FftwPlan plan(n_, dims.data(), in.data(), out.data(), FFTW_FORWARD);
    plan.run();
    Eigen::VectorXcd c = Eigen::Map<Eigen::VectorXcd>(out.data(), grid_size_);
    c *= 1.0 / static_cast<double>(grid_size_);
    return c;
}

long FourierLattice::bin_index(const std::vector<int>& m) const {
    if (static_cast<int>(m.size()) != n_) throw DimensionError("bin_index: arity mismatch");
    long bin = 0;
    for (int i = 0; i < n_; ++i) {
        int b = m[i] % G_;
        if (b < 0) b += G_;
        bin = bin * G_ + b;
    }
    return bin;
}

GridFunction FourierLattice::spectral_derivative(const GridFunction& table, int axis, int order) const {
    check_grid(table, "spectral_derivative");
    if (axis < 0 || axis >= n_) throw DomainError("spectral_derivative: axis out of range");
    if (order < 0) throw DomainError("spectral_derivative: negative order");
    if (order == 0) return table;

    const long stride = ipow(G_, n_ - 1 - axis);
    const long lines = grid_size_ / G_;
    GridFunction result = table;
    std::vector<Complex> line(G_), spec(G_);
    int dims[1] = {G_};
    FftwPlan fwd(1, dims, line.data(), spec.data(), FFTW_FORWARD);
    FftwPlan bwd(1, dims, spec.data(), line.data(), FFTW_BACKWARD);

    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<Complex> mult(G_);
    for (int b = 0; b < G_; ++b) {
        const int eta = b <= G_ / 2 - 1 ? b : b - G_;
        Complex f(0.0, two_pi * eta);
        Complex m(1.0, 0.0);
        for (int q = 0; q < order; ++q) m *= f;
        mult[b] = m / static_cast<double>(G_);
    }

    for (long l = 0; l < lines; ++l) {
        // base index of this line: insert the axis coordinate at `axis`
        const long outer = l / stride;
        const long inner = l % stride;
        const long base = outer * stride * G_ + inner;
        for (int j = 0; j < G_; ++j) line[j] = result[base + j * stride];
        fwd.run();
        for (int j = 0; j < G_; ++j) spec[j] *= mult[j];
        bwd.run();
        for (int j = 0; j < G_; ++j) result[base + j * stride] = line[j];
    }
    return result;
}

Complex FourierLattice::evaluate(const CoefficientVector& coeffs, const std::vector<double>& x) const {
    check_coeffs(coeffs, "evaluate");
    if (static_cast<int>(x.size()) != n_) throw DimensionError("evaluate: point arity mismatch");
    const double two_pi = 2.0 * std::numbers::pi;
    Complex acc(0, 0);
    for (long k = 0; k < freq_count_; ++k) {
        const std::vector<int> xi = frequency(k);
        double phase = 0;
        for (int i = 0; i < n_; ++i) phase += x[i] * xi[i];
        acc += coeffs[k] * std::polar(1.0, two_pi * phase);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Subdomain

namespace {

double overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

} // namespace

Subdomain::Subdomain(LatticePtr lattice) : lattice_(std::move(lattice)) {}

Subdomain::Subdomain(LatticePtr lattice, std::vector<Box> boxes) : lattice_(std::move(lattice)) {
    const int n = lattice_->dimension();
    if (boxes.empty()) throw InvalidSubdomainError("subdomain: no boxes");
    for (const Box& b : boxes) {
        if (static_cast<int>(b.lo.size()) != n || static_cast<int>(b.hi.size()) != n)
            throw InvalidSubdomainError("subdomain: box arity mismatch");
        for (int i = 0; i < n; ++i) {
            if (!(b.lo[i] >= 0.0 && b.lo[i] < b.hi[i] && b.hi[i] <= 1.0))
                throw InvalidSubdomainError("subdomain: box not inside [0,1)^n or empty");
        }
    }

    // Normalize the union into disjoint atoms by coordinate compression.
    std::vector<std::vector<double>> cuts(n);
    for (int i = 0; i < n; ++i) {
        for (const Box& b : boxes) {
            cuts[i].push_back(b.lo[i]);
            cuts[i].push_back(b.hi[i]);
        }
        std::sort(cuts[i].begin(), cuts[i].end());
        cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
    }
    std::vector<int> cell(n, 0);
    std::vector<Box> atoms;
    while (true) {
        Box atom;
        atom.lo.resize(n);
        atom.hi.resize(n);
        bool valid = true;
        for (int i = 0; i < n; ++i) {
            if (cell[i] + 1 >= static_cast<int>(cuts[i].size())) {
                valid = false;
                break;
            }
            atom.lo[i] = cuts[i][cell[i]];
            atom.hi[i] = cuts[i][cell[i] + 1];
        }
        if (valid) {
            std::vector<double> center(n);
            for (int i = 0; i < n; ++i) center[i] = 0.5 * (atom.lo[i] + atom.hi[i]);
            for (const Box& b : boxes) {
                bool inside = true;
                for (int i = 0; i < n; ++i)
                    inside = inside && center[i] >= b.lo[i] && center[i] < b.hi[i];
                if (inside) {
                    atoms.push_back(atom);
                    break;
                }
            }
        }
        int i = n - 1;
        for (; i >= 0; --i) {
            if (++cell[i] + 1 < static_cast<int>(cuts[i].size())) break;
            cell[i] = 0;
        }
        if (i < 0) break;
    }
    boxes_ = std::move(atoms);

    measure_ = 0.0;
    for (const Box& a : boxes_) {
        double v = 1.0;
        for (int i = 0; i < n; ++i) v *= a.hi[i] - a.lo[i];
        measure_ += v;
    }
    if (measure_ <= 0.0) throw InvalidSubdomainError("subdomain: empty region");

    const int G = lattice_->points_per_axis();
    const double h = 1.0 / G;
    weights_ = Eigen::VectorXd::Zero(lattice_->grid_size());
    // Per atom: per-axis lists of (cell index, overlap length), combined by
    // outer product.
    for (const Box& a : boxes_) {
        std::vector<std::vector<std::pair<long, double>>> axis_parts(n);
        for (int i = 0; i < n; ++i) {
            const int k0 = static_cast<int>(std::floor(a.lo[i] * G));
            const int k1 = std::min(G - 1, static_cast<int>(std::floor((a.hi[i] - 1e-15) * G)));
            for (int k = k0; k <= k1; ++k) {
                const double o = overlap(k * h, (k + 1) * h, a.lo[i], a.hi[i]);
                if (o > 0.0) axis_parts[i].push_back({k, o});
            }
        }
        std::vector<std::size_t> pick(n, 0);
        while (true) {
            long idx = 0;
            double w = 1.0;
            for (int i = 0; i < n; ++i) {
                idx = idx * G + axis_parts[i][pick[i]].first;
                w *= axis_parts[i][pick[i]].second;
            }
            weights_[idx] += w;
            int i = n - 1;
            for (; i >= 0; --i) {
                if (++pick[i] < axis_parts[i].size()) break;
                pick[i] = 0;
            }
            if (i < 0) break;
        }
    }
    full_ = std::abs(measure_ - 1.0) < 1e-15;
}

Subdomain Subdomain::full(LatticePtr lattice) {
    Subdomain s(lattice);
    const int n = lattice->dimension();
    Box b;
    b.lo.assign(n, 0.0);
    b.hi.assign(n, 1.0);
    s.boxes_ = {b};
    s.measure_ = 1.0;
    const double h = 1.0 / lattice->points_per_axis();
    double cell = 1.0;
    for (int i = 0; i < n; ++i) cell *= h;
    s.weights_ = Eigen::VectorXd::Constant(lattice->grid_size(), cell);
    s.full_ = true;
    return s;
}

Subdomain Subdomain::intervals(LatticePtr lattice,
                               const std::vector<std::pair<double, double>>& segs) {
    if (lattice->dimension() != 1) throw DimensionError("intervals: 1D lattices only");
    std::vector<Box> boxes;
    for (auto [lo, hi] : segs) {
        lo -= std::floor(lo);
        hi -= std::floor(hi);
        if (lo < hi) {
            boxes.push_back({{lo}, {hi}});
        } else {
            // wrapping interval
            if (lo < 1.0) boxes.push_back({{lo}, {1.0}});
            if (hi > 0.0) boxes.push_back({{0.0}, {hi}});
        }
    }
    return Subdomain(lattice, std::move(boxes));
}

bool Subdomain::contains(const std::vector<double>& x) const {
    const int n = lattice_->dimension();
    if (static_cast<int>(x.size()) != n) throw DimensionError("contains: point arity mismatch");
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = x[i] - std::floor(x[i]);
    for (const Box& b : boxes_) {
        bool inside = true;
        for (int i = 0; i < n; ++i) inside = inside && y[i] >= b.lo[i] && y[i] < b.hi[i];
        if (inside) return true;
    }
    return false;
}

Complex inner_product(const FourierLattice& lattice, const GridFunction& f, const GridFunction& g) {
    lattice.check_grid(f, "inner_product");
    lattice.check_grid(g, "inner_product");
    return f.cwiseProduct(g.conjugate()).sum() / static_cast<double>(lattice.grid_size());
}

Complex inner_product(const Subdomain& region, const GridFunction& f, const GridFunction& g) {
    region.lattice().check_grid(f, "inner_product");
    region.lattice().check_grid(g, "inner_product");
    if (region.measure() <= 0.0) throw InvalidSubdomainError("inner_product: empty region");
    Complex acc(0, 0);
    const Eigen::VectorXd& w = region.weights();
    for (long i = 0; i < w.size(); ++i)
        if (w[i] != 0.0) acc += w[i] * f[i] * std::conj(g[i]);
    return acc;
}

// ---------------------------------------------------------------------------
// DilatedTorus

DilatedTorus::DilatedTorus(double T, double eps, int K) : T_(T), eps_(eps), K_(K) {
    if (!(T > 0.0)) throw DomainError("dilated torus: invalid horizon T <= 0");
    if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("dilated torus: padding must lie in [0,1)");
    if (K < 1) throw DomainError("dilated torus: mode cap must be >= 1");
    mu_.resize(K + 1);
    const double L = T_ + eps_;
    for (int k = 0; k <= K; ++k) {
        const double w = std::numbers::pi * k / L;
        mu_[k] = w * w;
    }
}

double DilatedTorus::eigenvalue(int k) const {
    const int a = std::abs(k);
    if (a > K_) throw DomainError("dilated torus: mode index beyond cap");
    return mu_[a];
}

Complex DilatedTorus::eigenfunction(int k, double t) const {
    const double L = T_ + eps_;
    return std::polar(1.0 / std::sqrt(2.0 * L), std::numbers::pi * k * t / L);
}

DilatedTorus dilated_eigendata(double T, double eps, int K) { return DilatedTorus(T, eps, K); }

} // namespace speclab
