#include "speclab/symbol.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace speclab {

namespace {

double bracket(const std::vector<int>& xi) {
    double s = 1.0;
    for (int c : xi) s += static_cast<double>(c) * c;
    return std::sqrt(s);
}

int total(const MultiIndex& m) {
    int s = 0;
    for (int c : m) s += c;
    return s;
}

} // namespace

ToroidalSymbol::ToroidalSymbol(LatticePtr lattice, double order, double rho, double delta)
    : lattice_(std::move(lattice)), order_(order), rho_(rho), delta_(delta) {
    if (!(rho_ > 0.0 && rho_ <= 1.0 && delta_ >= 0.0 && delta_ < rho_))
        throw DomainError("symbol: need 0 <= delta < rho <= 1");
}

void ToroidalSymbol::detect_flags() {
    positive_ = true;
    for (long j = 0; j < table_.cols() && positive_; ++j)
        for (long i = 0; i < table_.rows(); ++i) {
            const Complex v = table_(i, j);
            if (v.imag() != 0.0 || !(v.real() > 0.0)) {
                positive_ = false;
                break;
            }
        }
}

ToroidalSymbol ToroidalSymbol::from_callable(LatticePtr lattice, double order, SymbolFn fn,
                                             double rho, double delta) {
    ToroidalSymbol s(lattice, order, rho, delta);
    const long G = lattice->grid_size();
    const long K = lattice->frequency_count();
    s.table_.resize(G, K);
    for (long j = 0; j < K; ++j) {
        const auto xi = lattice->frequency(j);
        for (long i = 0; i < G; ++i) s.table_(i, j) = fn(lattice->grid_point(i), xi);
    }
    s.multiplier_ = false;
    s.detect_flags();
    return s;
}

ToroidalSymbol ToroidalSymbol::from_multiplier(LatticePtr lattice, double order, MultiplierFn fn,
                                               double rho, double delta) {
    ToroidalSymbol s(lattice, order, rho, delta);
    const long K = lattice->frequency_count();
    s.table_.resize(1, K);
    for (long j = 0; j < K; ++j) s.table_(0, j) = fn(lattice->frequency(j));
    s.multiplier_ = true;
    s.detect_flags();
    return s;
}

ToroidalSymbol ToroidalSymbol::from_table(LatticePtr lattice, double order, Eigen::MatrixXcd table,
                                          double rho, double delta) {
    ToroidalSymbol s(lattice, order, rho, delta);
    if (table.cols() != lattice->frequency_count())
        throw DimensionError("symbol table: column count must match frequency count");
    if (table.rows() != lattice->grid_size() && table.rows() != 1)
        throw DimensionError("symbol table: row count must be 1 or the grid size");
    s.table_ = std::move(table);
    s.multiplier_ = s.table_.rows() == 1;
    if (!s.multiplier_) {
        // collapse x-independent tables
        bool constant = true;
        for (long i = 1; i < s.table_.rows() && constant; ++i)
            constant = (s.table_.row(i) == s.table_.row(0));
        if (constant) {
            Eigen::MatrixXcd row = s.table_.row(0);
            s.table_ = row;
            s.multiplier_ = true;
        }
    }
    s.detect_flags();
    return s;
}

Complex ToroidalSymbol::value(long grid_index, long freq_index) const {
    return table_(multiplier_ ? 0 : grid_index, freq_index);
}

GridFunction ToroidalSymbol::x_slice(long freq_index) const {
    if (multiplier_)
        return GridFunction::Constant(lattice_->grid_size(), table_(0, freq_index));
    return table_.col(freq_index);
}

void ToroidalSymbol::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("symbol save: cannot open " + path);
    out.precision(17);
    out << lattice_->dimension() << ' ' << lattice_->cutoff() << ' ' << order_ << ' ' << rho_
        << ' ' << delta_ << '\n';
    for (long i = 0; i < table_.rows(); ++i) {
        for (long j = 0; j < table_.cols(); ++j) {
            out << i;
            for (int c : lattice_->frequency(j)) out << ' ' << c;
            out << ' ' << table_(i, j).real() << ' ' << table_(i, j).imag() << '\n';
        }
    }
    if (!out) throw IoError("symbol save: write failed for " + path);
}

ToroidalSymbol ToroidalSymbol::load(LatticePtr lattice, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("symbol load: cannot open " + path);
    int n, N;
    double order, rho, delta;
    if (!(in >> n >> N >> order >> rho >> delta))
        throw IoError("symbol load: malformed header in " + path);
    if (!lattice) lattice = std::make_shared<FourierLattice>(n, N);
    if (lattice->dimension() != n || lattice->cutoff() != N)
        throw DimensionError("symbol load: lattice mismatch with file header");

    Eigen::MatrixXcd table(lattice->grid_size(), lattice->frequency_count());
    Eigen::MatrixXd seen = Eigen::MatrixXd::Zero(table.rows(), table.cols());
    long rows = 0;
    long max_x = -1;
    std::string line;
    std::getline(in, line); // finish header line
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        long xi_idx;
        std::vector<int> xi(n);
        double re, im;
        long x_idx;
        if (!(ls >> x_idx)) throw IoError("symbol load: malformed row in " + path);
        for (int i = 0; i < n; ++i)
            if (!(ls >> xi[i])) throw IoError("symbol load: malformed row in " + path);
        if (!(ls >> re >> im)) throw IoError("symbol load: malformed row in " + path);
        xi_idx = lattice->frequency_index(xi);
        if (x_idx < 0 || x_idx >= table.rows())
            throw IoError("symbol load: x-index out of range in " + path);
        table(x_idx, xi_idx) = Complex(re, im);
        seen(x_idx, xi_idx) = 1.0;
        max_x = std::max(max_x, x_idx);
        ++rows;
    }
    if (max_x == 0) {
        Eigen::MatrixXcd row = table.row(0);
        if (seen.row(0).minCoeff() < 1.0)
            throw IoError("symbol load: incomplete multiplier table in " + path);
        return from_table(lattice, order, row, rho, delta);
    }
    if (seen.minCoeff() < 1.0) throw IoError("symbol load: incomplete table in " + path);
    return from_table(lattice, order, std::move(table), rho, delta);
}

ToroidalSymbol ToroidalSymbol::load(const std::string& path) { return load(nullptr, path); }

GridFunction quantize(const ToroidalSymbol& sym, const GridFunction& u) {
    const FourierLattice& lat = sym.lattice();
    if (u.size() != lat.grid_size()) throw DimensionError("quantize: grid mismatch");
    CoefficientVector uh = lat.transform_forward(u);
    if (sym.is_multiplier()) {
        for (long j = 0; j < uh.size(); ++j) uh[j] *= sym.value(0, j);
        return lat.transform_inverse(uh);
    }
    // accumulate per-frequency rank-one contributions a(.,xi) u_hat(xi) e_xi
    GridFunction out = GridFunction::Zero(lat.grid_size());
    const double two_pi = 2.0 * std::numbers::pi;
    const int G = lat.points_per_axis();
    const int n = lat.dimension();
    for (long j = 0; j < uh.size(); ++j) {
        if (uh[j] == Complex(0, 0)) continue;
        const auto xi = lat.frequency(j);
        // e^{i 2 pi x.xi} factorizes over axes; walk the flattened grid.
        for (long g = 0; g < lat.grid_size(); ++g) {
            long rem = g;
            double phase = 0;
            for (int i = n - 1; i >= 0; --i) {
                const int coord = static_cast<int>(rem % G);
                rem /= G;
                phase += static_cast<double>(coord) / G * xi[i];
            }
            out[g] += sym.value(g, j) * uh[j] * std::polar(1.0, two_pi * phase);
        }
    }
    return out;
}

double seminorm(const ToroidalSymbol& sym, const MultiIndex& alpha, const MultiIndex& beta) {
    const FourierLattice& lat = sym.lattice();
    const int n = lat.dimension();
    if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
        throw DimensionError("seminorm: multi-index arity mismatch");
    for (int c : alpha)
        if (c < 0) throw DomainError("seminorm: negative multi-index");
    for (int c : beta)
        if (c < 0) throw DomainError("seminorm: negative multi-index");
    const int N = lat.cutoff();
    for (int i = 0; i < n; ++i)
        if (alpha[i] > 2 * N)
            throw InsufficientCutoffError("seminorm: xi-differences exhaust the lattice");

    // x-derivative of every frequency column, done spectrally.
    const long K = lat.frequency_count();
    Eigen::MatrixXcd cols(sym.is_multiplier() ? 1 : lat.grid_size(), K);
    if (sym.is_multiplier() && total(beta) > 0) {
        cols.setZero(); // d_x of an x-constant vanishes
    } else if (sym.is_multiplier()) {
        for (long j = 0; j < K; ++j) cols(0, j) = sym.value(0, j);
    } else {
        for (long j = 0; j < K; ++j) {
            GridFunction col = sym.x_slice(j);
            for (int i = 0; i < n; ++i)
                if (beta[i] > 0) col = lat.spectral_derivative(col, i, beta[i]);
            cols.col(j) = col;
        }
    }

    // forward differences in xi; valid base points shrink by alpha_i per axis.
    const double exponent = sym.rho() * total(alpha) - sym.delta() * total(beta);
    double sup = 0.0;
    for (long j = 0; j < K; ++j) {
        const auto xi = lat.frequency(j);
        bool valid = true;
        for (int i = 0; i < n; ++i) valid = valid && xi[i] + alpha[i] <= N;
        if (!valid) continue;
        // alternating-sign expansion of Delta^alpha at base xi
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(cols.rows());
        std::vector<int> step(n, 0);
        while (true) {
            double sign = 1.0;
            long parity = 0;
            std::vector<int> shifted = xi;
            long choose = 1;
            for (int i = 0; i < n; ++i) {
                shifted[i] += step[i];
                parity += alpha[i] - step[i];
                long c = 1;
                for (int q = 0; q < step[i]; ++q) c = c * (alpha[i] - q) / (q + 1);
                choose *= c;
            }
            sign = (parity % 2) ? -1.0 : 1.0;
            acc += sign * static_cast<double>(choose) * cols.col(lat.frequency_index(shifted));
            int i = n - 1;
            for (; i >= 0; --i) {
                if (++step[i] <= alpha[i]) break;
                step[i] = 0;
            }
            if (i < 0) break;
        }
        const double w = std::pow(bracket(xi), exponent);
        sup = std::max(sup, w * acc.cwiseAbs().maxCoeff());
    }
    return sup;
}

SeminormReport seminorm_report(const ToroidalSymbol& sym) {
    const int n = sym.lattice().dimension();
    SeminormReport rep;
    rep.max_total_order = n / 2 + 1;
    rep.dimensional_constant = std::pow(2.0, n / 2 + 2);
    std::function<void(MultiIndex&, MultiIndex&, int, int)> walk = [&](MultiIndex& a, MultiIndex& b,
                                                                       int axis, int budget) {
        if (axis == 2 * n) {
            rep.constants[{a, b}] = seminorm(sym, a, b);
            return;
        }
        MultiIndex& target = axis < n ? a : b;
        const int i = axis % n;
        for (int v = 0; v <= budget; ++v) {
            target[i] = v;
            walk(a, b, axis + 1, budget - v);
        }
        target[i] = 0;
    };
    MultiIndex a(n, 0), b(n, 0);
    walk(a, b, 0, rep.max_total_order);
    for (const auto& [key, v] : rep.constants) rep.bound = std::max(rep.bound, v);
    return rep;
}

double cv_bound(const ToroidalSymbol& sym) {
    if (sym.order() != 0.0) throw OrderError("cv_bound: symbol must have order zero");
    return seminorm_report(sym).bound;
}

} // namespace speclab
