#include "doctest.h"

#include "speclab/errors.hpp"
#include "speclab/numerics.hpp"
#include "speclab/psi.hpp"

#include <array>
#include <cmath>
#include <vector>

using namespace speclab;

TEST_CASE("bump evaluation matches the closed-form values at zero") {
    const double a = 0.6;
    const double e0 = std::pow(a, 20) * std::exp(-1.0 / (a * a));
    CHECK(bump_eval(0.0, a, 0) == doctest::Approx(e0).epsilon(1e-14));
    CHECK(bump_eval(0.0, a, 0) ==
          doctest::Approx(2.2732722307723892771e-6).epsilon(1e-14));
    CHECK(bump_eval(0.0, a, 1) == 0.0);
    CHECK(bump_eval(0.0, a, 3) == 0.0);
    CHECK(bump_eval(0.0, a, 2) ==
          doctest::Approx(-1.6137426329557084375e-4).epsilon(1e-13));
    CHECK(bump_eval(0.0, a, 2) ==
          doctest::Approx(-2.0 * std::pow(a, 16) * (10.0 * a * a + 1.0) *
                          std::exp(-1.0 / (a * a)))
              .epsilon(1e-13));
    CHECK(bump_eval(0.0, a, 4) ==
          doctest::Approx(3.1092480842697345337e-2).epsilon(1e-13));

    for (int i = 0; i <= 4; ++i) {
        CHECK(bump_eval(a, a, i) == 0.0);
        CHECK(bump_eval(1.25 * a, a, i) == 0.0);
        CHECK(bump_eval(a * (1.0 - 1e-7), a, i) == 0.0);
    }

    CHECK_THROWS_AS(bump_eval(-0.05, a), DomainError);
    CHECK_THROWS_AS(bump_eval(4.0 * a / 3.0 + 1e-9, a), DomainError);
    CHECK_THROWS_AS(bump_eval(0.3, 0.0), DomainError);
    CHECK_THROWS_AS(bump_eval(0.3, -0.6), DomainError);
    CHECK_THROWS_AS(bump_eval(0.3, a, 5), OrderError);
    CHECK_THROWS_AS(bump_eval(0.3, a, -1), OrderError);
}

TEST_CASE("bump derivatives agree with finite differences") {
    for (double a : {0.6, 0.15}) {
        const double h = a / 300.0;
        std::array<double, 5> sup{};
        const std::array<double, 5> frac = {0.1, 0.3, 0.55, 0.75, 0.87};
        for (int i = 1; i <= 4; ++i)
            for (double f : frac)
                sup[i] = std::max(sup[i], std::abs(bump_eval(f * a, a, i)));
        for (int i = 1; i <= 4; ++i) {
            for (double f : frac) {
                const double t = f * a;
                const auto [offsets, weights] = central_fd_stencil(i, 8, h);
                double fd = 0.0;
                for (std::size_t k = 0; k < offsets.size(); ++k)
                    fd += weights[k] * bump_eval(t + offsets[k] * h, a, 0);
                CHECK(std::abs(fd - bump_eval(t, a, i)) <= 1e-6 * sup[i]);
            }
        }
    }
}

TEST_CASE("correction coefficients solve the vanishing conditions") {
    const double a = 0.6;
    const CorrectionCoeffs cc = correction_coeffs(a);

    const double a2 = a * a, a4 = a2 * a2, a8 = a4 * a4;
    CHECK(cc.b == doctest::Approx(-(10.0 * a2 + 1.0) / a4).epsilon(1e-13));
    CHECK(cc.c ==
          doctest::Approx((110.0 * a4 + 22.0 * a2 + 1.0) / (2.0 * a8))
              .epsilon(1e-13));
    CHECK(cc.b == doctest::Approx(-35.49382716049382716).epsilon(1e-12));
    CHECK(cc.c == doctest::Approx(689.91960067062947721).epsilon(1e-12));

    CHECK(cc.b_alt ==
          doctest::Approx(-8.1823767763171616511e-5).epsilon(1e-12));
    CHECK(cc.c_alt == doctest::Approx(-1139.7785231794184275).epsilon(1e-12));
    CHECK(std::abs(cc.b - cc.b_alt) > 30.0);

    CHECK(cc.audit2 <= 1e-8);
    CHECK(cc.audit4 <= 1e-8);
    CHECK(cc.audit2_alt >= 1e-7);

    const CorrectionCoeffs small = correction_coeffs(0.15);
    CHECK(small.audit2 <= 1e-8);
    CHECK(small.audit4 <= 1e-8);
    CHECK(small.audit2_alt >= 1e-7);

    CHECK_THROWS_AS(correction_coeffs(0.0), DomainError);
    CHECK_THROWS_AS(correction_coeffs(-1.0), DomainError);
    CHECK_THROWS_AS(correction_coeffs(0.03), SingularOperatorError);
}

TEST_CASE("psi branches, values, and derivatives") {
    const PsiFunction psi(0.8, 1.0);
    CHECK(psi.a() == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(psi.horizon() == 1.0);

    const double psi0 = psi.psi0();
    CHECK(psi0 == doctest::Approx(5.1677666352008750894e-12).epsilon(1e-13));
    CHECK(psi0 < psi.epsilon());
    CHECK(psi(0.0) == psi0);
    CHECK(psi(0.5) == psi0);
    CHECK(psi(1.0 - 1e-12) == psi0);
    for (int i = 1; i <= 4; ++i) CHECK(psi.derivative(0.7, i) == 0.0);
    CHECK(psi.derivative(0.0, 1) == 0.0);

    CHECK(psi(1.0) == doctest::Approx(psi0).epsilon(1e-12));

    CHECK(psi(1.1) / psi0 ==
          doctest::Approx(0.9923761780311663194).epsilon(1e-12));
    CHECK(psi(1.2) / psi0 ==
          doctest::Approx(0.76677455912414506267).epsilon(1e-12));
    CHECK(psi(1.3) / psi0 ==
          doctest::Approx(0.21824835906520018564).epsilon(1e-12));
    CHECK(psi(1.45) / psi0 ==
          doctest::Approx(2.6349113626829085871e-4).epsilon(1e-11));

    CHECK(psi.derivative(1.3, 1) / psi0 ==
          doctest::Approx(-4.508834861105386276).epsilon(1e-11));
    CHECK(psi.derivative(1.3, 2) / psi0 ==
          doctest::Approx(49.507584577513369279).epsilon(1e-11));
    CHECK(psi.derivative(1.3, 3) / psi0 ==
          doctest::Approx(477.57209026849431791).epsilon(1e-11));
    CHECK(psi.derivative(1.3, 4) / psi0 ==
          doctest::Approx(-23856.391353637132261).epsilon(1e-10));

    for (int i = 0; i <= 4; ++i) {
        CHECK(psi.derivative(1.6, i) == 0.0);
        CHECK(psi.derivative(1.8, i) == 0.0);
    }

    CHECK_THROWS_AS(psi(-0.1), DomainError);
    CHECK_THROWS_AS(psi(1.8 + 1e-9), DomainError);
    CHECK_THROWS_AS(psi.derivative(0.5, 5), OrderError);
    CHECK_THROWS_AS(PsiFunction(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(PsiFunction(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(PsiFunction(0.5, 0.0), DomainError);
    CHECK_THROWS_AS(PsiFunction(0.07, 1.0), SingularOperatorError);
}

TEST_CASE("psi ratios to psi(0) are normalization invariant") {
    const PsiFunction psi(0.5, 2.0);
    const CorrectionCoeffs cc = correction_coeffs(psi.a());
    const double e0 = bump_eval(0.0, psi.a(), 0);
    const int binom[5][5] = {{1, 0, 0, 0, 0},
                             {1, 1, 0, 0, 0},
                             {1, 2, 1, 0, 0},
                             {1, 3, 3, 1, 0},
                             {1, 4, 6, 4, 1}};
    auto poly = [&cc](double s, int i) {
        const double s2 = s * s;
        switch (i) {
        case 0: return 1.0 - cc.b * s2 + cc.c * s2 * s2;
        case 1: return -2.0 * cc.b * s + 4.0 * cc.c * s2 * s;
        case 2: return -2.0 * cc.b + 12.0 * cc.c * s2;
        case 3: return 24.0 * cc.c * s;
        default: return 24.0 * cc.c;
        }
    };
    for (double s : {0.05, 0.13, 0.21, 0.3}) {
        for (int i = 0; i <= 4; ++i) {
            double eta = 0.0;
            for (int k = 0; k <= i; ++k)
                eta += binom[i][k] * bump_eval(s, psi.a(), k) * poly(s, i - k);
            CHECK(psi.derivative(psi.horizon() + s, i) / psi.psi0() ==
                  doctest::Approx(eta / e0).epsilon(1e-12));
        }
    }
}

TEST_CASE("lemma report holds over the epsilon grid") {
    const std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                      0.6, 0.7, 0.8, 0.9};
    double sup4_coarse = 0.0, sup4_fine = 0.0;
    for (double eps : grid) {
        const PsiFunction psi(eps, 1.0);
        const PsiReport coarse = verify_psi(psi, 2000);
        const PsiReport fine = verify_psi(psi, 4000);
        CHECK(coarse.ok);
        CHECK(fine.ok);
        CHECK(fine.failure.empty());
        CHECK(fine.branch_residual[0] <= 1e-6);
        CHECK(fine.branch_residual[1] <= 1e-6);
        CHECK(fine.branch_residual[2] <= 1e-6);
        CHECK(fine.branch_residual[3] <= 1e-6);
        CHECK(fine.psi0 > 0.0);
        CHECK(fine.psi0 < eps);
        sup4_coarse = std::max(sup4_coarse, coarse.sup[4]);
        sup4_fine = std::max(sup4_fine, fine.sup[4]);
    }
    CHECK(sup4_fine > 0.0);
    CHECK(sup4_coarse / sup4_fine == doctest::Approx(1.0).epsilon(0.02));

    const PsiFunction tight(0.8, 1.0);
    const PsiReport rep = verify_psi(tight, 4000);
    CHECK(rep.branch_residual[0] <= 1e-9);
    CHECK(rep.branch_residual[1] <= 1e-9);
    CHECK(rep.branch_residual[2] <= 1e-6);
    CHECK(rep.branch_residual[3] <= 1e-7);

    const double m0a = uniform_sup_bound(1.0, grid, 2000);
    const double m0b = uniform_sup_bound(1.0, grid, 4000);
    CHECK(m0a > 2.4e-5);
    CHECK(m0a < 2.8e-5);
    CHECK(m0b / m0a == doctest::Approx(1.0).epsilon(0.02));

    CHECK_THROWS_AS(verify_psi(tight, 8), DomainError);
    CHECK_THROWS_AS(uniform_sup_bound(1.0, {}, 2000), DomainError);
}
