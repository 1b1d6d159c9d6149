#include "speclab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "speclab/numerics.hpp"

namespace speclab {

namespace {

double freq_norm(const std::vector<int>& xi) {
    double s = 0;
    for (int c : xi) s += static_cast<double>(c) * c;
    return std::sqrt(s);
}

double bracket(const std::vector<int>& xi) {
    double s = 1.0;
    for (int c : xi) s += static_cast<double>(c) * c;
    return std::sqrt(s);
}

// dominant coefficient index with the largest modulus; lowest index on ties
long dominant_index(const Eigen::VectorXcd& v) {
    long best = 0;
    double best_abs = -1.0;
    for (long i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best_abs + 1e-14) {
            best_abs = a;
            best = i;
        }
    }
    return best;
}

} // namespace

const Eigen::VectorXd& EllipticOperator::multiplier() const {
    if (!multiplier_) throw DomainError("operator: dense representation has no multiplier table");
    return values_;
}

const Eigen::MatrixXcd& EllipticOperator::matrix() const {
    if (multiplier_) throw DomainError("operator: multiplier representation has no dense matrix");
    return matrix_;
}

CoefficientVector EllipticOperator::apply(const CoefficientVector& c) const {
    if (c.size() != lattice_->frequency_count())
        throw DimensionError("operator apply: coefficient length mismatch");
    if (multiplier_) return values_.cast<Complex>().cwiseProduct(c);
    return matrix_ * c;
}

Eigen::VectorXcd EllipticOperator::frame_eigenvector(long r) const {
    if (r < 0 || r >= mu_.size()) throw DimensionError("operator: eigenvector index out of range");
    const long K = lattice_->frequency_count();
    if (multiplier_) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(K);
        v[source_[r]] = 1.0;
        return v;
    }
    return eigvecs_.col(source_[r]);
}

Eigen::MatrixXcd EllipticOperator::dense_matrix() const {
    if (multiplier_) return values_.cast<Complex>().asDiagonal();
    return matrix_;
}

Eigen::MatrixXcd EllipticOperator::kernel_projector() const {
    const long K = lattice_->frequency_count();
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(K, K);
    for (long r = 0; r < mu_.size(); ++r) {
        if (mu_[r] != 0.0) continue;
        const Eigen::VectorXcd v = frame_eigenvector(r);
        P += v * v.adjoint();
    }
    return P;
}

EllipticOperator assemble_operator(const ToroidalSymbol& sym) {
    if (!(sym.order() > 0.0)) throw OrderError("assemble_operator: order must be positive");
    EllipticOperator op;
    op.lattice_ = sym.lattice_ptr();
    op.nu_ = sym.order();
    op.multiplier_ = sym.is_multiplier();

    const FourierLattice& lat = sym.lattice();
    const long K = lat.frequency_count();
    const long rows = op.multiplier_ ? 1 : lat.grid_size();

    // positivity audit at sampled (x, xi), xi != 0
    double min_val = std::numeric_limits<double>::infinity();
    double ratio_min = std::numeric_limits<double>::infinity();
    double ratio_max = 0.0;
    const double R = std::max(1.0, lat.cutoff() / 2.0);
    for (long j = 0; j < K; ++j) {
        const auto xi = lat.frequency(j);
        const double nrm = freq_norm(xi);
        if (nrm == 0.0) continue;
        const double weight = std::pow(bracket(xi), -op.nu_);
        for (long i = 0; i < rows; ++i) {
            const Complex v = sym.value(i, j);
            min_val = std::min(min_val, v.real());
            if (v.real() <= 0.0)
                throw NotEllipticError("assemble_operator: symbol not strictly positive off xi=0");
            if (nrm >= R) {
                const double q = std::abs(v) * weight;
                ratio_min = std::min(ratio_min, q);
                ratio_max = std::max(ratio_max, q);
            }
        }
    }
    op.report_.min_sampled_value = min_val;
    op.report_.ellipticity_radius = R;
    op.report_.ellipticity_ratio = ratio_min > 0.0 ? ratio_max / ratio_min
                                                   : std::numeric_limits<double>::infinity();
    if (!std::isfinite(op.report_.ellipticity_ratio))
        throw NotEllipticError("assemble_operator: ellipticity ratio diverges");

    if (op.multiplier_) {
        op.values_.resize(K);
        double defect2 = 0.0;
        for (long j = 0; j < K; ++j) {
            const Complex v = sym.value(0, j);
            op.values_[j] = v.real();
            defect2 += v.imag() * v.imag();
        }
        op.report_.hermitian_defect = std::sqrt(defect2);

        std::vector<long> idx(K);
        std::iota(idx.begin(), idx.end(), 0L);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](long a, long b) { return op.values_[a] < op.values_[b]; });
        op.mu_.resize(K);
        op.source_.resize(K);
        for (long r = 0; r < K; ++r) {
            op.mu_[r] = op.values_[idx[r]];
            op.source_[r] = idx[r];
        }
    } else {
        // Galerkin matrix A_{xi,eta} = x-Fourier coefficient of a(., eta) at xi-eta
        Eigen::MatrixXcd A(K, K);
        for (long eta = 0; eta < K; ++eta) {
            const Eigen::VectorXcd spec = lat.full_spectrum(sym.x_slice(eta));
            const auto eta_f = lat.frequency(eta);
            for (long xi = 0; xi < K; ++xi) {
                auto diff = lat.frequency(xi);
                for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= eta_f[i];
                A(xi, eta) = spec[lat.bin_index(diff)];
            }
        }
        Eigen::MatrixXcd skew = 0.5 * (A - A.adjoint());
        op.report_.hermitian_defect = skew.norm();
        op.matrix_ = 0.5 * (A + A.adjoint());

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.matrix_);
        if (es.info() != Eigen::Success)
            throw DomainError("assemble_operator: eigensolver failed to converge");
        Eigen::VectorXd mu = es.eigenvalues();
        Eigen::MatrixXcd V = es.eigenvectors();

        // deterministic order inside (near-)degenerate clusters: sort by the
        // dominant frequency index, then rotate the dominant entry positive
        std::vector<long> idx(K);
        std::iota(idx.begin(), idx.end(), 0L);
        std::vector<long> dom(K);
        for (long j = 0; j < K; ++j) dom[j] = dominant_index(V.col(j));
        std::stable_sort(idx.begin(), idx.end(), [&](long a, long b) {
            if (mu[a] != mu[b]) return mu[a] < mu[b];
            return dom[a] < dom[b];
        });
        op.mu_.resize(K);
        op.source_.resize(K);
        op.eigvecs_.resize(K, K);
        for (long r = 0; r < K; ++r) {
            op.mu_[r] = mu[idx[r]];
            op.source_[r] = r;
            Eigen::VectorXcd v = V.col(idx[r]);
            const Complex pivot = v[dom[idx[r]]];
            if (std::abs(pivot) > 0) v *= std::conj(pivot) / std::abs(pivot);
            op.eigvecs_.col(r) = v;
        }
    }
    // snap roundoff-scale negatives to zero; genuine negatives stay and only
    // the lambda root is clamped later
    const double snap = 1e-12 * (1.0 + (op.mu_.size() ? std::abs(op.mu_[op.mu_.size() - 1]) : 0.0));
    for (long r = 0; r < op.mu_.size(); ++r) {
        if (op.mu_[r] < 0.0 && op.mu_[r] > -snap) op.mu_[r] = 0.0;
        if (op.mu_[r] < 0.0) op.clamped_ = true;
    }
    op.floor_ = op.mu_.size() ? std::max(0.0, op.mu_[0]) : 0.0;
    return op;
}

EllipticOperator shift_to_positive(const EllipticOperator& op, double c) {
    if (!(c > 0.0)) throw DomainError("shift_to_positive: shift must be positive");
    EllipticOperator out = op;
    if (out.multiplier_)
        out.values_.array() += c;
    else
        out.matrix_ += c * Eigen::MatrixXcd::Identity(out.matrix_.rows(), out.matrix_.cols());
    out.mu_.array() += c;
    out.floor_ = out.mu_.size() ? std::max(0.0, out.mu_[0]) : 0.0;
    out.clamped_ = out.mu_.size() && out.mu_[0] < 0.0;
    return out;
}

SpectralBasis eigendata(const EllipticOperator& op, double lambda_max) {
    if (!(lambda_max > 0.0)) throw DomainError("eigendata: lambda_max must be positive");
    SpectralBasis b;
    b.lattice_ = op.lattice_;
    b.nu_ = op.nu_;
    b.clamp_warning_ = op.clamped_;
    const double mu_cap = std::pow(lambda_max, op.nu_);
    b.truncation_warning_ = mu_cap > 0.5 * op.spectral_ceiling();

    const long K = op.lattice_->frequency_count();
    auto root = [&](double mu) { return std::pow(std::max(mu, 0.0), 1.0 / op.nu_); };
    long m = 0;
    while (m < op.mu_.size() && root(op.mu_[m]) <= lambda_max) ++m;
    b.next_mu_ = m < op.mu_.size() ? op.mu_[m] : std::numeric_limits<double>::infinity();

    b.mu_.resize(m);
    b.lambda_.resize(m);
    b.vectors_ = Eigen::MatrixXcd::Zero(K, m);
    for (long j = 0; j < m; ++j) {
        b.mu_[j] = op.mu_[j];
        b.lambda_[j] = root(op.mu_[j]);
        if (op.multiplier_)
            b.vectors_(op.source_[j], j) = 1.0;
        else
            b.vectors_.col(j) = op.eigvecs_.col(op.source_[j]);
    }
    return b;
}

GridFunction SpectralBasis::eigenfunction(long j) const {
    return lattice_->transform_inverse(vectors_.col(j));
}

void SpectralBasis::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("basis save: cannot open " + path);
    out.precision(17);
    out << lattice_->dimension() << ' ' << lattice_->cutoff() << ' ' << nu_ << ' ' << size()
        << '\n';
    for (long j = 0; j < size(); ++j) {
        out << j << ' ' << mu_[j] << ' ' << lambda_[j];
        for (long k = 0; k < vectors_.rows(); ++k)
            out << ' ' << vectors_(k, j).real() << ' ' << vectors_(k, j).imag();
        out << '\n';
    }
    if (!out) throw IoError("basis save: write failed for " + path);
}

SpectralBasis SpectralBasis::load(LatticePtr lattice, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("basis load: cannot open " + path);
    int n, N;
    double nu;
    long m;
    if (!(in >> n >> N >> nu >> m)) throw IoError("basis load: malformed header in " + path);
    if (!lattice) lattice = std::make_shared<FourierLattice>(n, N);
    if (lattice->dimension() != n || lattice->cutoff() != N)
        throw DimensionError("basis load: lattice mismatch with file header");
    SpectralBasis b;
    b.lattice_ = lattice;
    b.nu_ = nu;
    b.mu_.resize(m);
    b.lambda_.resize(m);
    b.vectors_.resize(lattice->frequency_count(), m);
    for (long j = 0; j < m; ++j) {
        long idx;
        if (!(in >> idx >> b.mu_[j] >> b.lambda_[j]))
            throw IoError("basis load: malformed row in " + path);
        for (long k = 0; k < b.vectors_.rows(); ++k) {
            double re, im;
            if (!(in >> re >> im)) throw IoError("basis load: malformed row in " + path);
            b.vectors_(k, j) = Complex(re, im);
        }
    }
    return b;
}

SpectralBasis SpectralBasis::load(const std::string& path) { return load(nullptr, path); }

GridFunction project(const SpectralBasis& basis, double lambda, const GridFunction& f) {
    const FourierLattice& lat = basis.lattice();
    CoefficientVector fh = lat.transform_forward(f);
    CoefficientVector acc = CoefficientVector::Zero(fh.size());
    for (long j = 0; j < basis.size(); ++j) {
        if (basis.lambda(j) > lambda) break;
        const Complex c = basis.vectors().col(j).dot(fh); // conjugates the column
        acc += c * basis.vectors().col(j);
    }
    return lat.transform_inverse(acc);
}

SpaceTimeField::SpaceTimeField(std::shared_ptr<const SpectralBasis> basis,
                               std::vector<double> time_grid, ModalFn fn)
    : basis_(std::move(basis)), grid_(std::move(time_grid)), fn_(std::move(fn)) {
    if (grid_.size() < 2) throw DomainError("field: time grid needs at least two points");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1]))
            throw DomainError("field: time grid must be strictly increasing");
    for (double t : grid_)
        for (long j = 0; j < basis_->size(); ++j)
            if (!std::isfinite(std::abs(fn_(j, t, 0))))
                throw DomainError("field: non-finite modal coefficient");
}

Complex SpaceTimeField::coefficient(long mode, double t, int t_deriv) const {
    if (mode < 0 || mode >= basis_->size()) throw DimensionError("field: mode out of range");
    if (t_deriv < 0 || t_deriv > 2) throw OrderError("field: time derivative order must be <= 2");
    return fn_(mode, t, t_deriv);
}

CoefficientVector SpaceTimeField::frame_coefficients(double t, int t_deriv) const {
    CoefficientVector c(basis_->size());
    for (long j = 0; j < basis_->size(); ++j) c[j] = coefficient(j, t, t_deriv);
    return basis_->vectors() * c;
}

GridFunction SpaceTimeField::evaluate(double t) const {
    return basis_->lattice().transform_inverse(frame_coefficients(t, 0));
}

double sobolev_norm(const SpaceTimeField& field, int s) {
    return sobolev_norm(field, s, field.start(), field.horizon());
}

double sobolev_norm(const SpaceTimeField& field, int s, double a, double b) {
    if (s < 0 || s > 2) throw OrderError("sobolev_norm: s must be 0, 1, or 2");
    if (!(b > a)) throw DomainError("sobolev_norm: empty time interval");
    const SpectralBasis& basis = field.basis();
    const FourierLattice& lat = basis.lattice();
    const long K = lat.frequency_count();
    Eigen::VectorXd w(K);
    for (long k = 0; k < K; ++k) {
        const auto xi = lat.frequency(k);
        double q = 1.0;
        for (int c : xi) q += 4.0 * std::numbers::pi * std::numbers::pi * c * c;
        w[k] = q;
    }
    const long m = basis.size();
    auto integrand = [&](double t) {
        double total = 0.0;
        Eigen::VectorXcd modal(m);
        for (long q = 0; q < m; ++q) modal[q] = field.coefficient(q, t, 0);
        const Eigen::VectorXcd frame = basis.vectors() * modal;
        for (int j = 0; j <= s; ++j) {
            Eigen::VectorXcd dmodal(m);
            for (long q = 0; q < m; ++q) dmodal[q] = field.coefficient(q, t, j);
            total += dmodal.squaredNorm(); // |d_t^j f|^2 via orthonormality
            for (long k = 0; k < K; ++k)
                total += std::pow(w[k], j) * std::norm(frame[k]); // |(1-Delta)^{j/2} f|^2
        }
        return total;
    };
    const double val = simpson_refined(integrand, a, b, 1e-9, 64);
    return std::sqrt(std::max(0.0, val));
}

} // namespace speclab
