#include "speclab/control.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "speclab/errors.hpp"
#include "speclab/numerics.hpp"

namespace speclab {

namespace {

Eigen::VectorXd fractional_rates(const SpectralBasis& basis, double alpha) {
    const long m = static_cast<long>(basis.size());
    Eigen::VectorXd s(m);
    for (long j = 0; j < m; ++j) s[j] = std::pow(basis.mu(j), alpha);
    return s;
}

double kernel_weight(double x, double horizon) {
    if (x <= 0.0) return horizon;
    return -std::expm1(-x * horizon) / x;
}

// G = M o K on rows x cols of the rate vector, K_{jk} = int_0^T e^{-(s_j+s_k)t} dt.
Eigen::MatrixXcd hadamard_gramian(const Eigen::MatrixXcd& mass,
                                  const Eigen::VectorXd& rates, double horizon,
                                  long rows, long cols) {
    Eigen::MatrixXcd g(rows, cols);
    for (long j = 0; j < rows; ++j)
        for (long k = 0; k < cols; ++k)
            g(j, k) = mass(j, k) * kernel_weight(rates[j] + rates[k], horizon);
    return g;
}

// Mirror the lower triangle so the result is Hermitian to the last bit.
void symmetrize(Eigen::MatrixXcd& g) {
    const long m = g.rows();
    for (long j = 0; j < m; ++j) {
        g(j, j) = Complex(g(j, j).real(), 0.0);
        for (long k = 0; k < j; ++k) g(k, j) = std::conj(g(j, k));
    }
}

struct GramianSolve {
    Eigen::VectorXcd phi;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double ridge = 0.0;
};

GramianSolve solve_gramian(const Eigen::MatrixXcd& gramian, const Eigen::VectorXcd& rhs,
                           const char* who) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gramian);
    if (es.info() != Eigen::Success)
        throw UncontrollableTruncationError(std::string(who) + ": Gramian eigensolve failed");
    GramianSolve out;
    const Eigen::VectorXd& sigma = es.eigenvalues();
    out.sigma_min = sigma[0];
    out.sigma_max = sigma[sigma.size() - 1];
    if (!(out.sigma_max > 0.0))
        throw UncontrollableTruncationError(std::string(who) +
                                            ": Gramian vanishes, the sensor observes nothing");
    if (out.sigma_min <= 1e-13 * out.sigma_max) {
        out.ridge = 1e-12 * gramian.trace().real() / static_cast<double>(gramian.rows());
        if (!(out.ridge > 0.0))
            throw UncontrollableTruncationError(std::string(who) +
                                                ": Gramian too singular to regularize");
    }
    Eigen::VectorXcd modal = es.eigenvectors().adjoint() * rhs;
    for (long j = 0; j < modal.size(); ++j) modal[j] /= sigma[j] + out.ridge;
    out.phi = es.eigenvectors() * modal;
    if (!out.phi.allFinite())
        throw UncontrollableTruncationError(std::string(who) +
                                            ": regularized solve produced non-finite multiplier");
    return out;
}

Eigen::VectorXcd decay_scaled(const Eigen::VectorXd& rates, double t,
                              const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out(v.size());
    for (long j = 0; j < v.size(); ++j) out[j] = std::exp(-t * rates[j]) * v[j];
    return out;
}

} // namespace

ControlProblem::ControlProblem(std::shared_ptr<const SpectralBasis> basis, double alpha,
                               double horizon, Subdomain sensor, CoefficientVector initial)
    : basis_(std::move(basis)), alpha_(alpha), horizon_(horizon),
      sensor_(std::move(sensor)), initial_(std::move(initial)) {
    if (!basis_) throw DimensionError("ControlProblem: null basis");
    if (basis_->size() == 0) throw DimensionError("ControlProblem: empty truncation");
    if (!(alpha_ > 0.0)) throw DomainError("ControlProblem: alpha must be positive");
    if (!(horizon_ > 0.0)) throw DomainError("ControlProblem: horizon must be positive");
    if (!basis_->lattice().same_as(sensor_.lattice()))
        throw DimensionError("ControlProblem: sensor lives on a different lattice");
    if (initial_.size() != static_cast<long>(basis_->size()))
        throw DimensionError("ControlProblem: initial state has wrong modal dimension");
    if (!initial_.allFinite())
        throw DomainError("ControlProblem: initial state is not finite");
}

double ControlProblem::tail_decay() const {
    const double next = basis_->next_mu();
    if (!std::isfinite(next)) return 0.0;
    return std::exp(-std::pow(next, alpha_) * horizon_);
}

CoefficientVector semigroup_apply(const ControlProblem& problem, double t,
                                  const CoefficientVector& state) {
    if (t < 0.0) throw DomainError("semigroup_apply: negative time");
    if (state.size() != static_cast<long>(problem.basis().size()))
        throw DimensionError("semigroup_apply: state has wrong modal dimension");
    return decay_scaled(fractional_rates(problem.basis(), problem.alpha()), t, state);
}

Eigen::MatrixXcd observability_gramian(const ControlProblem& problem) {
    const SpectralBasis& basis = problem.basis();
    const long m = static_cast<long>(basis.size());
    const Eigen::MatrixXcd mass =
        omega_mass_matrix(basis.lattice(), problem.sensor(), basis.vectors());
    const Eigen::VectorXd rates = fractional_rates(basis, problem.alpha());
    Eigen::MatrixXcd g = hadamard_gramian(mass, rates, problem.horizon(), m, m);
    symmetrize(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NotEllipticError("observability_gramian: eigenvalue audit failed");
    const double lo = es.eigenvalues()[0];
    const double hi = es.eigenvalues()[m - 1];
    if (lo < -1e-10 * std::max(hi, 1.0)) {
        std::ostringstream msg;
        msg << "observability_gramian: assembled matrix is indefinite (min eigenvalue "
            << lo << ")";
        throw NotEllipticError(msg.str());
    }
    return g;
}

ControlField::ControlField(std::shared_ptr<const SpectralBasis> basis, Subdomain sensor,
                           Eigen::VectorXcd phi, double alpha, double horizon)
    : basis_(std::move(basis)), sensor_(std::move(sensor)), phi_(std::move(phi)),
      horizon_(horizon) {
    if (!basis_) throw DimensionError("ControlField: null basis");
    if (phi_.size() != static_cast<long>(basis_->size()))
        throw DimensionError("ControlField: multiplier has wrong modal dimension");
    rates_ = fractional_rates(*basis_, alpha);
}

Eigen::VectorXcd ControlField::profile(double t) const {
    if (empty()) throw DomainError("ControlField: empty field");
    if (t < 0.0 || t > horizon_)
        throw DomainError("ControlField: time outside [0, horizon]");
    return decay_scaled(rates_, horizon_ - t, phi_);
}

Complex ControlField::operator()(double t, const std::vector<double>& x) const {
    Eigen::VectorXcd modal = profile(t);
    if (!sensor_->contains(x)) return Complex(0.0, 0.0);
    const CoefficientVector frame = basis_->vectors() * modal;
    return basis_->lattice().evaluate(frame, x);
}

ControlResult hum_control(const ControlProblem& problem) {
    const SpectralBasis& basis = problem.basis();
    const long m = static_cast<long>(basis.size());
    const double horizon = problem.horizon();
    const Eigen::MatrixXcd mass =
        omega_mass_matrix(basis.lattice(), problem.sensor(), basis.vectors());
    const Eigen::VectorXd rates = fractional_rates(basis, problem.alpha());
    Eigen::MatrixXcd gramian = hadamard_gramian(mass, rates, horizon, m, m);
    symmetrize(gramian);

    const Eigen::VectorXcd decayed = decay_scaled(rates, horizon, problem.initial());
    const GramianSolve solve = solve_gramian(gramian, -decayed, "hum_control");

    ControlResult result;
    result.phi = solve.phi;
    result.control = ControlField(problem.basis_ptr(), problem.sensor(), solve.phi,
                                  problem.alpha(), horizon);
    const double u0_norm = std::max(problem.initial().norm(), 1.0);
    result.residual = (decayed + gramian * solve.phi).norm() / u0_norm;
    result.cost = std::sqrt(std::max(0.0, -std::real(solve.phi.dot(decayed))));
    result.condition = solve.sigma_min > 0.0
                           ? solve.sigma_max / solve.sigma_min
                           : std::numeric_limits<double>::infinity();
    result.tikhonov = solve.ridge;
    result.tail_decay = problem.tail_decay();

    const auto energy = [&](double t) {
        const Eigen::VectorXcd w = decay_scaled(rates, horizon - t, solve.phi);
        return std::real(w.dot(mass * w));
    };
    result.cost_quadrature =
        std::sqrt(std::max(0.0, simpson_refined(energy, 0.0, horizon, 1e-12, 64)));
    return result;
}

LrResult lr_iterative_control(const ControlProblem& problem, double growth,
                              double lambda0) {
    const MillerReport gate = miller_gate(problem.alpha(), problem.nu());
    if (!gate.admissible) {
        std::ostringstream msg;
        msg << "lr_iterative_control: alpha nu = " << problem.alpha_nu()
            << " <= 1, the dyadic iteration does not converge";
        throw InadmissibleExponentError(msg.str());
    }
    if (!(growth > 1.0))
        throw DomainError("lr_iterative_control: growth factor must exceed 1");

    const SpectralBasis& basis = problem.basis();
    const long m = static_cast<long>(basis.size());
    if (lambda0 <= 0.0) lambda0 = basis.lambda(std::min<long>(3, m - 1));

    const Eigen::MatrixXcd mass =
        omega_mass_matrix(basis.lattice(), problem.sensor(), basis.vectors());
    const Eigen::VectorXd rates = fractional_rates(basis, problem.alpha());

    LrResult out;
    Eigen::VectorXcd u = problem.initial();
    const double u0_norm = std::max(u.norm(), 1.0);
    double t_left = problem.horizon();
    double cap = lambda0;
    double cost_sq = 0.0;

    while (true) {
        if (out.stages.size() >= 200)
            throw DomainError("lr_iterative_control: growth factor too slow, stage budget exhausted");
        const double stage_len = 0.5 * t_left;
        const double tau = 0.5 * stage_len;

        long mb = 0;
        while (mb < m && basis.lambda(mb) <= cap) ++mb;

        LrStage stage;
        stage.lambda_cap = cap;
        stage.active_modes = mb;
        stage.active_time = tau;

        if (mb > 0) {
            Eigen::MatrixXcd block = hadamard_gramian(mass, rates, tau, mb, mb);
            symmetrize(block);
            const Eigen::VectorXcd decayed =
                decay_scaled(rates.head(mb), tau, u.head(mb));
            const GramianSolve solve = solve_gramian(block, -decayed, "lr_iterative_control");
            const double stage_cost_sq =
                std::max(0.0, -std::real(solve.phi.dot(decayed)));
            stage.cost = std::sqrt(stage_cost_sq);
            cost_sq += stage_cost_sq;
            // Free decay plus the cross-coupled action of the block control
            // on every retained mode.
            const Eigen::MatrixXcd cross = hadamard_gramian(mass, rates, tau, m, mb);
            u = decay_scaled(rates, tau, u) + cross * solve.phi;
        } else {
            u = decay_scaled(rates, tau, u);
        }
        u = decay_scaled(rates, tau, u);
        stage.post_norm = u.norm();
        out.stages.push_back(stage);
        t_left -= stage_len;
        if (mb == m) break;
        cap *= growth;
    }

    u = decay_scaled(rates, t_left, u);
    out.final_residual = u.norm() / u0_norm;
    out.total_cost = std::sqrt(cost_sq);
    return out;
}

MillerReport miller_gate(double alpha, double nu) {
    if (!(alpha > 0.0)) throw DomainError("miller_gate: alpha must be positive");
    if (!(nu > 0.0)) throw DomainError("miller_gate: nu must be positive");
    MillerReport report;
    report.gamma = 1.0 / (alpha * nu);
    report.admissible = alpha * nu > 1.0;
    if (report.admissible) report.beta_star = 1.0 / (alpha * nu - 1.0);
    return report;
}

CostCurve cost_curve(const ControlProblem& problem, const std::vector<double>& horizons) {
    if (horizons.empty()) throw DomainError("cost_curve: empty horizon grid");
    for (double h : horizons)
        if (!(h > 0.0)) throw DomainError("cost_curve: horizons must be positive");
    const MillerReport gate = miller_gate(problem.alpha(), problem.nu());
    if (!gate.admissible)
        throw InadmissibleExponentError("cost_curve: alpha nu <= 1, the cost law is vacuous");

    const SpectralBasis& basis = problem.basis();
    const long m = static_cast<long>(basis.size());
    const Eigen::MatrixXcd mass =
        omega_mass_matrix(basis.lattice(), problem.sensor(), basis.vectors());
    const Eigen::VectorXd rates = fractional_rates(basis, problem.alpha());

    CostCurve curve;
    curve.beta_star = gate.beta_star;
    for (double horizon : horizons) {
        CostPoint point;
        point.horizon = horizon;
        Eigen::MatrixXcd gramian = hadamard_gramian(mass, rates, horizon, m, m);
        symmetrize(gramian);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> audit(gramian, Eigen::EigenvaluesOnly);
        const double sigma_min = audit.eigenvalues()[0];
        const double sigma_max = audit.eigenvalues()[m - 1];
        point.condition = sigma_min > 0.0 ? sigma_max / sigma_min
                                          : std::numeric_limits<double>::infinity();
        if (audit.info() != Eigen::Success || sigma_min <= 1e-13 * sigma_max) {
            point.cost = std::numeric_limits<double>::quiet_NaN();
            curve.points.push_back(point);
            continue;
        }
        Eigen::MatrixXcd terminal = Eigen::MatrixXcd::Zero(m, m);
        for (long j = 0; j < m; ++j) terminal(j, j) = std::exp(-2.0 * horizon * rates[j]);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ges(terminal, gramian);
        if (ges.info() != Eigen::Success) {
            point.cost = std::numeric_limits<double>::quiet_NaN();
            curve.points.push_back(point);
            continue;
        }
        point.cost = std::sqrt(std::max(0.0, ges.eigenvalues().maxCoeff()));
        point.ok = true;
        curve.points.push_back(point);
    }

    std::vector<std::pair<double, double>> good;
    for (const CostPoint& p : curve.points)
        if (p.ok && p.cost > 0.0) good.emplace_back(p.horizon, p.cost);
    std::sort(good.begin(), good.end());
    if (good.size() < 2)
        throw FitError("cost_curve: fewer than two well-conditioned grid points");
    const std::size_t half = (good.size() + 1) / 2;
    std::vector<double> logs_t, logs_c;
    for (std::size_t i = 0; i < std::max<std::size_t>(half, 2); ++i) {
        logs_t.push_back(std::log(good[i].first));
        logs_c.push_back(std::log(good[i].second));
    }
    const LineFit power = fit_line(logs_t, logs_c);
    curve.beta_fit = -power.slope;
    curve.C1 = std::exp(power.intercept);
    curve.fit_r2 = power.r2;
    std::vector<double> scaled;
    for (std::size_t i = 0; i < logs_t.size(); ++i)
        scaled.push_back(std::pow(std::exp(logs_t[i]), -curve.beta_fit));
    const LineFit expo = fit_line(scaled, logs_c);
    curve.C2 = expo.slope;
    return curve;
}

} // namespace speclab
