#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "speclab/spectral.hpp"

using namespace speclab;

namespace {

constexpr double kPi = std::numbers::pi;

ToroidalSymbol helmholtz_like(LatticePtr lat) {
    return ToroidalSymbol::from_multiplier(lat, 2.0, [](const std::vector<int>& xi) {
        double s = 0;
        for (int c : xi) s += double(c) * c;
        return Complex(1.0 + 4.0 * kPi * kPi * s, 0.0);
    });
}

ToroidalSymbol variable_helmholtz(LatticePtr lat) {
    return ToroidalSymbol::from_callable(
        lat, 2.0, [](const std::vector<double>& x, const std::vector<int>& xi) {
            double s = 0;
            for (int c : xi) s += double(c) * c;
            return Complex((2.0 + std::cos(2.0 * kPi * x[0])) * (1.0 + 4.0 * kPi * kPi * s), 0.0);
        });
}

// independent route: assemble the frame matrix column by column through
// quantize, then symmetrize and eigensolve densely
Eigen::MatrixXcd quantize_route_matrix(const ToroidalSymbol& sym) {
    const FourierLattice& lat = sym.lattice();
    const long K = lat.frequency_count();
    Eigen::MatrixXcd M(K, K);
    for (long j = 0; j < K; ++j) {
        CoefficientVector e = CoefficientVector::Zero(K);
        e[j] = 1.0;
        M.col(j) = lat.transform_forward(quantize(sym, lat.transform_inverse(e)));
    }
    return 0.5 * (M + M.adjoint());
}

} // namespace

TEST_CASE("multiplier assembly: floor, representation, spectrum head") {
    auto lat = std::make_shared<FourierLattice>(1, 6);
    EllipticOperator op = assemble_operator(helmholtz_like(lat));
    CHECK(op.is_multiplier());
    CHECK(op.floor() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(op.order() == doctest::Approx(2.0));
    CHECK(op.report().hermitian_defect == doctest::Approx(0.0));

    SpectralBasis b = eigendata(op, 5.0 * 2.0 * kPi);
    REQUIRE(b.size() >= 4);
    CHECK(b.mu(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(b.mu(1) == doctest::Approx(1.0 + 4.0 * kPi * kPi).epsilon(1e-14));
    CHECK(b.mu(2) == doctest::Approx(1.0 + 4.0 * kPi * kPi).epsilon(1e-14));
    CHECK(b.mu(3) == doctest::Approx(1.0 + 16.0 * kPi * kPi).epsilon(1e-14));
    for (long j = 1; j < b.size(); ++j) CHECK(b.mu(j) >= b.mu(j - 1));
}

TEST_CASE("multiplier eigenvectors are coordinate vectors, ties in lex order") {
    auto lat = std::make_shared<FourierLattice>(1, 4);
    SpectralBasis b = eigendata(assemble_operator(helmholtz_like(lat)), 100.0);
    for (long j = 0; j < b.size(); ++j) {
        const auto v = b.vector(j);
        long nonzero = 0;
        for (long k = 0; k < v.size(); ++k)
            if (std::abs(v[k]) > 0) ++nonzero;
        CHECK(nonzero == 1);
    }
    // the mu = 1+4pi^2 pair: frequency -1 precedes +1
    CHECK(std::abs(b.vector(1)[lat->frequency_index({-1})] - Complex(1, 0)) < 1e-15);
    CHECK(std::abs(b.vector(2)[lat->frequency_index({+1})] - Complex(1, 0)) < 1e-15);
}

TEST_CASE("sign-changing symbol is rejected as not elliptic") {
    auto lat = std::make_shared<FourierLattice>(1, 4);
    auto sym = ToroidalSymbol::from_multiplier(lat, 1.0, [](const std::vector<int>& xi) {
        return Complex(double(xi[0]), 0.0);
    });
    CHECK_THROWS_AS(assemble_operator(sym), NotEllipticError);
}

TEST_CASE("variable-coefficient assembly matches the quantize-route oracle") {
    auto lat = std::make_shared<FourierLattice>(1, 6);
    auto sym = variable_helmholtz(lat);
    EllipticOperator op = assemble_operator(sym);
    CHECK_FALSE(op.is_multiplier());
    CHECK(op.report().min_sampled_value > 0.0);
    CHECK(std::isfinite(op.report().ellipticity_ratio));

    Eigen::MatrixXcd H = quantize_route_matrix(sym);
    CHECK((op.matrix() - H).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    SpectralBasis b = eigendata(op, 1e9);
    REQUIRE(b.size() == es.eigenvalues().size());
    for (long j = 0; j < b.size(); ++j) {
        const double ref = es.eigenvalues()[j];
        CHECK(std::abs(b.mu(j) - ref) <= 1e-8 * (1.0 + std::abs(ref)));
    }
}

TEST_CASE("self-adjointness of the assembled pairing") {
    auto lat = std::make_shared<FourierLattice>(1, 5);
    EllipticOperator op = assemble_operator(variable_helmholtz(lat));
    SpectralBasis b = eigendata(op, 40.0);
    REQUIRE(b.size() >= 3);
    for (long j = 0; j < b.size(); ++j)
        for (long k = 0; k < b.size(); ++k) {
            const Complex p = b.vector(k).dot(op.apply(b.vector(j)));
            const double want = j == k ? b.mu(j) : 0.0;
            CHECK(std::abs(p - Complex(want, 0)) <= 1e-9 * (1.0 + b.mu(j)));
        }
}

TEST_CASE("orthonormality and residual invariants") {
    auto lat = std::make_shared<FourierLattice>(1, 5);
    EllipticOperator op = assemble_operator(variable_helmholtz(lat));
    SpectralBasis b = eigendata(op, 1e9);
    Eigen::MatrixXcd G = b.vectors().adjoint() * b.vectors();
    CHECK((G - Eigen::MatrixXcd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() < 1e-10);
    for (long j = 0; j < b.size(); ++j) {
        const double res = (op.apply(b.vector(j)) - b.mu(j) * b.vector(j)).norm();
        CHECK(res <= 1e-8 * (1.0 + b.mu(j)));
    }
}

TEST_CASE("projection: mode selection, reproduction, idempotence, monotonicity") {
    auto lat = std::make_shared<FourierLattice>(1, 5);
    EllipticOperator op = assemble_operator(helmholtz_like(lat));
    SpectralBasis b = eigendata(op, 1e6);
    const long J = b.size() - 1;
    GridFunction f = b.eigenfunction(0) + b.eigenfunction(J);

    GridFunction low = project(b, 0.5 * (b.lambda(0) + b.lambda(1)), f);
    CHECK((low - b.eigenfunction(0)).cwiseAbs().maxCoeff() < 1e-10);

    GridFunction all = project(b, b.lambda(J), f);
    CHECK((all - f).cwiseAbs().maxCoeff() < 1e-10);

    const double lam = b.lambda(2);
    GridFunction once = project(b, lam, f);
    GridFunction twice = project(b, lam, once);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);

    const double lo = b.lambda(1), hi = b.lambda(3);
    GridFunction nested = project(b, lo, project(b, hi, f));
    CHECK((nested - project(b, lo, f)).cwiseAbs().maxCoeff() < 1e-12);

    long prev = 0;
    for (double lam_cap = 1.0; lam_cap < 40.0; lam_cap += 1.0) {
        long count = 0;
        while (count < b.size() && b.lambda(count) <= lam_cap) ++count;
        CHECK(count >= prev);
        prev = count;
    }
}

TEST_CASE("shift_to_positive relabels the spectrum and keeps eigenvectors") {
    auto lat = std::make_shared<FourierLattice>(1, 4);
    auto lap = ToroidalSymbol::from_multiplier(lat, 2.0, [](const std::vector<int>& xi) {
        return Complex(4.0 * kPi * kPi * xi[0] * xi[0], 0.0);
    });
    EllipticOperator op = assemble_operator(lap);
    CHECK(op.floor() == doctest::Approx(0.0));
    EllipticOperator shifted = shift_to_positive(op, 4.0);
    CHECK(shifted.floor() == doctest::Approx(4.0));

    SpectralBasis b0 = eigendata(op, 1e6);
    SpectralBasis b1 = eigendata(shifted, 1e6);
    REQUIRE(b0.size() == b1.size());
    for (long j = 0; j < b0.size(); ++j) {
        CHECK(b1.mu(j) == b0.mu(j) + 4.0);
        CHECK((b1.vector(j) - b0.vector(j)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(b1.lambda(0) == doctest::Approx(2.0).epsilon(1e-15)); // (0 + 4)^{1/2}

    CHECK_THROWS_AS(shift_to_positive(op, 0.0), DomainError);
}

TEST_CASE("truncation warning on lambda_max past the reliable range") {
    auto lat = std::make_shared<FourierLattice>(1, 4);
    EllipticOperator op = assemble_operator(helmholtz_like(lat));
    CHECK_FALSE(eigendata(op, 2.0).truncation_warning());
    CHECK(eigendata(op, std::sqrt(op.spectral_ceiling())).truncation_warning());
}

TEST_CASE("basis round-trips through the columnar file") {
    auto lat = std::make_shared<FourierLattice>(1, 4);
    SpectralBasis b = eigendata(assemble_operator(variable_helmholtz(lat)), 30.0);
    const auto path = std::filesystem::temp_directory_path() / "speclab_basis_rt.txt";
    b.save(path.string());
    SpectralBasis back = SpectralBasis::load(path.string());
    REQUIRE(back.size() == b.size());
    CHECK(back.nu() == doctest::Approx(b.nu()));
    for (long j = 0; j < b.size(); ++j) {
        CHECK(back.mu(j) == doctest::Approx(b.mu(j)).epsilon(1e-15));
        CHECK(back.lambda(j) == doctest::Approx(b.lambda(j)).epsilon(1e-15));
        CHECK((back.vector(j) - b.vector(j)).cwiseAbs().maxCoeff() < 1e-15);
    }
    std::filesystem::remove(path);
}

TEST_CASE("sobolev norm of the constant field") {
    auto lat = std::make_shared<FourierLattice>(1, 3);
    auto b = std::make_shared<SpectralBasis>(eigendata(assemble_operator(helmholtz_like(lat)), 1e6));
    const double T = 0.7;
    SpaceTimeField f(b, {0.0, T}, [](long mode, double, int d) {
        if (mode == 0 && d == 0) return Complex(1.0, 0.0);
        return Complex(0.0, 0.0);
    });
    CHECK(sobolev_norm(f, 0) == doctest::Approx(std::sqrt(2.0 * T)).epsilon(1e-12));
    CHECK_THROWS_AS(sobolev_norm(f, 3), OrderError);
}

TEST_CASE("s=0 norm is sqrt(2) times the space-time L2 norm") {
    auto lat = std::make_shared<FourierLattice>(1, 3);
    auto b = std::make_shared<SpectralBasis>(eigendata(assemble_operator(helmholtz_like(lat)), 1e6));
    const double T = 1.3;
    SpaceTimeField f(b, {0.0, T}, [](long mode, double t, int d) {
        if (d > 0) return Complex(0.0, 0.0);
        return Complex(std::cos(t + mode), std::sin(0.3 * t * mode));
    });
    // Parseval in the modes: ||f(t)||^2 = sum_j |c_j(t)|^2
    double l2sq = 0;
    const int P = 4096;
    for (int i = 0; i <= P; ++i) {
        const double t = T * i / P;
        double row = 0;
        for (long j = 0; j < b->size(); ++j) row += std::norm(f.coefficient(j, t, 0));
        l2sq += row * (i == 0 || i == P ? 0.5 : 1.0) * (T / P);
    }
    CHECK(sobolev_norm(f, 0) == doctest::Approx(std::sqrt(2.0 * l2sq)).epsilon(1e-6));
}

TEST_CASE("H^1 norm of a single sinh mode matches the closed form") {
    auto lat = std::make_shared<FourierLattice>(1, 3);
    auto b = std::make_shared<SpectralBasis>(eigendata(assemble_operator(helmholtz_like(lat)), 1e6));
    const long j0 = 1; // frequency -1 by the tie-break
    const double lam = b->lambda(j0);
    const double T = 0.5;
    SpaceTimeField f(b, {0.0, T}, [&](long mode, double t, int d) {
        if (mode != j0) return Complex(0.0, 0.0);
        if (d == 0) return Complex(std::sinh(lam * t), 0.0);
        if (d == 1) return Complex(lam * std::cosh(lam * t), 0.0);
        return Complex(lam * lam * std::sinh(lam * t), 0.0);
    });
    const double w = 1.0 + 4.0 * kPi * kPi; // frame weight of frequency 1
    const double sh2 = std::sinh(2.0 * lam * T) / (4.0 * lam) - T / 2.0;  // int sinh^2
    const double ch2 = std::sinh(2.0 * lam * T) / (4.0 * lam) + T / 2.0;  // int cosh^2
    const double closed = std::sqrt((2.0 + w) * sh2 + lam * lam * ch2);
    CHECK(sobolev_norm(f, 1) == doctest::Approx(closed).epsilon(1e-8));
}

TEST_CASE("field validation") {
    auto lat = std::make_shared<FourierLattice>(1, 2);
    auto b = std::make_shared<SpectralBasis>(eigendata(assemble_operator(helmholtz_like(lat)), 1e6));
    auto fn = [](long, double, int) { return Complex(1.0, 0.0); };
    CHECK_THROWS_AS(SpaceTimeField(b, {0.0}, fn), DomainError);
    CHECK_THROWS_AS(SpaceTimeField(b, {0.0, 0.0}, fn), DomainError);
    CHECK_THROWS_AS(SpaceTimeField(b, {1.0, 0.5}, fn), DomainError);
    SpaceTimeField ok(b, {0.0, 1.0}, fn);
    CHECK_THROWS_AS(ok.coefficient(0, 0.5, 3), OrderError);
}
