#include "doctest.h"

#include "speclab/lattice.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace speclab;

namespace {

LatticePtr make_lattice(int n, int N) { return std::make_shared<FourierLattice>(n, N); }

// O(K.G) direct-summation oracle for the forward transform.
CoefficientVector dft_oracle(const FourierLattice& lat, const GridFunction& u) {
    CoefficientVector c(lat.frequency_count());
    const double two_pi = 2.0 * std::numbers::pi;
    for (long k = 0; k < lat.frequency_count(); ++k) {
        const auto xi = lat.frequency(k);
        Complex acc(0, 0);
        for (long g = 0; g < lat.grid_size(); ++g) {
            const auto x = lat.grid_point(g);
            double phase = 0;
            for (int i = 0; i < lat.dimension(); ++i) phase += x[i] * xi[i];
            acc += u[g] * std::polar(1.0, -two_pi * phase);
        }
        c[k] = acc / static_cast<double>(lat.grid_size());
    }
    return c;
}

GridFunction random_bandlimited(const FourierLattice& lat, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    CoefficientVector c(lat.frequency_count());
    for (long k = 0; k < c.size(); ++k) c[k] = Complex(gauss(rng), gauss(rng));
    return lat.transform_inverse(c);
}

} // namespace

TEST_CASE("frequency enumeration matches (2N+1)^n and round-trips") {
    auto lat = make_lattice(2, 3);
    CHECK(lat->frequency_count() == 49);
    CHECK(lat->points_per_axis() == 14);
    for (long k = 0; k < lat->frequency_count(); ++k)
        CHECK(lat->frequency_index(lat->frequency(k)) == k);
}

TEST_CASE("forward transform agrees with the direct DFT oracle") {
    for (int n = 1; n <= 2; ++n) {
        auto lat = make_lattice(n, n == 1 ? 6 : 2);
        GridFunction u = random_bandlimited(*lat, 17);
        CoefficientVector mine = lat->transform_forward(u);
        CoefficientVector ref = dft_oracle(*lat, u);
        CHECK((mine - ref).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("transform round-trip is the identity on the retained band") {
    auto lat = make_lattice(1, 8);
    GridFunction u = random_bandlimited(*lat, 3);
    GridFunction v = lat->transform_inverse(lat->transform_forward(u));
    CHECK((u - v).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("Parseval holds on band-limited functions") {
    auto lat = make_lattice(1, 10);
    GridFunction u = random_bandlimited(*lat, 5);
    CoefficientVector c = lat->transform_forward(u);
    const double lhs = std::real(inner_product(*lat, u, u));
    const double rhs = c.squaredNorm();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("pure exponential transforms to a coordinate vector") {
    auto lat = make_lattice(1, 5);
    const double two_pi = 2.0 * std::numbers::pi;
    GridFunction u(lat->grid_size());
    for (long g = 0; g < lat->grid_size(); ++g)
        u[g] = std::polar(1.0, two_pi * 3.0 * lat->grid_point(g)[0]);
    CoefficientVector c = lat->transform_forward(u);
    for (long k = 0; k < c.size(); ++k) {
        const double expect = lat->frequency(k)[0] == 3 ? 1.0 : 0.0;
        CHECK(std::abs(c[k] - expect) < 1e-12);
    }
}

TEST_CASE("spectral derivative matches the analytic derivative of cos") {
    auto lat = make_lattice(1, 6);
    const double two_pi = 2.0 * std::numbers::pi;
    GridFunction u(lat->grid_size()), du(lat->grid_size());
    for (long g = 0; g < lat->grid_size(); ++g) {
        const double x = lat->grid_point(g)[0];
        u[g] = std::cos(two_pi * 2.0 * x);
        du[g] = -two_pi * 2.0 * std::sin(two_pi * 2.0 * x);
    }
    GridFunction got = lat->spectral_derivative(u, 0, 1);
    CHECK((got - du).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("inner products over the full manifold are quadrature-exact") {
    auto lat = make_lattice(1, 4);
    GridFunction f = random_bandlimited(*lat, 7), g = random_bandlimited(*lat, 8);
    CoefficientVector cf = lat->transform_forward(f), cg = lat->transform_forward(g);
    Complex frame = (cg.conjugate().cwiseProduct(cf)).sum(); // sum f_hat conj(g_hat)
    CHECK(std::abs(inner_product(*lat, f, g) - frame) < 1e-11);
}

TEST_CASE("subdomain weights sum to the measure") {
    auto lat = make_lattice(1, 8);
    auto omega = Subdomain::intervals(lat, {{0.0, 0.3}});
    CHECK(omega.measure() == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(omega.weights().sum() == doctest::Approx(0.3).epsilon(1e-13));

    auto lat2 = make_lattice(2, 2);
    Subdomain box2(lat2, {Box{{0.1, 0.2}, {0.5, 0.7}}});
    CHECK(box2.measure() == doctest::Approx(0.4 * 0.5).epsilon(1e-14));
    CHECK(box2.weights().sum() == doctest::Approx(0.2).epsilon(1e-13));
}

TEST_CASE("overlapping boxes are not double counted") {
    auto lat = make_lattice(1, 6);
    Subdomain u(lat, {Box{{0.1}, {0.5}}, Box{{0.3}, {0.6}}});
    CHECK(u.measure() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("<1,1> over omega=(0,1/2) equals 1/2 and full-manifold pairing is exact") {
    auto lat = make_lattice(1, 8);
    GridFunction one = GridFunction::Constant(lat->grid_size(), Complex(1, 0));
    auto omega = Subdomain::intervals(lat, {{0.0, 0.5}});
    CHECK(std::abs(inner_product(omega, one, one) - Complex(0.5, 0)) < 1e-13);
    CHECK(std::abs(inner_product(*lat, one, one) - Complex(1.0, 0)) < 1e-14);
}

TEST_CASE("empty and malformed regions are rejected") {
    auto lat = make_lattice(1, 4);
    CHECK_THROWS_AS(Subdomain(lat, {Box{{0.5}, {0.5}}}), InvalidSubdomainError);
    CHECK_THROWS_AS(Subdomain(lat, {Box{{-0.1}, {0.5}}}), InvalidSubdomainError);
    CHECK_THROWS_AS(Subdomain(lat, std::vector<Box>{}), InvalidSubdomainError);
}

TEST_CASE("wrapping interval splits into two boxes") {
    auto lat = make_lattice(1, 4);
    auto w = Subdomain::intervals(lat, {{0.9, 0.1}});
    CHECK(w.measure() == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(w.contains({0.95}));
    CHECK(w.contains({0.05}));
    CHECK(!w.contains({0.5}));
}

TEST_CASE("dilated torus eigenvalues: formula, parity, monotonicity") {
    DilatedTorus torus = dilated_eigendata(1.0, 0.0, 8);
    CHECK(torus.eigenvalue(0) == 0.0);
    CHECK(torus.eigenvalue(1) == doctest::Approx(std::numbers::pi * std::numbers::pi).epsilon(1e-15));
    for (int k = 1; k <= 8; ++k) {
        CHECK(torus.eigenvalue(k) == torus.eigenvalue(-k));
        CHECK(torus.eigenvalue(k) > torus.eigenvalue(k - 1));
    }
    DilatedTorus padded = dilated_eigendata(1.0, 0.5, 4);
    const double w = std::numbers::pi * 3 / 1.5;
    CHECK(padded.eigenvalue(3) == doctest::Approx(w * w).epsilon(1e-15));
}

TEST_CASE("dilated torus validates horizon and padding") {
    CHECK_THROWS_AS(dilated_eigendata(0.0, 0.1, 4), DomainError);
    CHECK_THROWS_AS(dilated_eigendata(1.0, 1.0, 4), DomainError);
    CHECK_THROWS_AS(dilated_eigendata(1.0, 0.1, 0), DomainError);
}

TEST_CASE("dilated torus eigenfunctions are orthonormal in L^2(T_{T,eps})") {
    DilatedTorus torus = dilated_eigendata(0.7, 0.3, 3);
    const double L = torus.half_length();
    const int P = 4096;
    for (int k = -2; k <= 2; ++k) {
        for (int l = -2; l <= 2; ++l) {
            Complex acc(0, 0);
            for (int s = 0; s < P; ++s) {
                const double t = -L + 2.0 * L * s / P;
                acc += torus.eigenfunction(k, t) * std::conj(torus.eigenfunction(l, t));
            }
            acc *= 2.0 * L / P;
            CHECK(std::abs(acc - (k == l ? 1.0 : 0.0)) < 1e-12);
        }
    }
}
