#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "qpencil/errors.hpp"
#include "qpencil/fundamental.hpp"
#include "test_support.hpp"

using namespace qpencil;
using namespace qpencil::testing;

namespace {

const IntegrationSettings kDefault{};

// (Y(pi), Y'(pi)) for constant coefficients via the matrix exponential.
std::pair<Mat, Mat> expm_at_pi(const Mat& q1, const Mat& q0, cplx rho, const Mat& y0, const Mat& dy0) {
    const auto m = q1.rows();
    Mat g = Mat::Zero(2 * m, 2 * m);
    g.topRightCorner(m, m) = eye(m);
    g.bottomLeftCorner(m, m) = -(rho * rho * eye(m) + 2.0 * kI * rho * q1 + q0);
    Mat init(2 * m, m);
    init << y0, dy0;
    const Mat out = (kPi * g).exp() * init;
    return {out.topRows(m), out.bottomRows(m)};
}

Pencil constant_pencil_2x2() {
    Mat q1(2, 2), q0(2, 2), h1(2, 2), h0(2, 2), H1(2, 2), H0(2, 2);
    q1 << cplx(0.4, 0.1), 0.2, cplx(-0.1, 0.3), -0.5;
    q0 << 1.0, cplx(0.3, -0.2), 0.1, cplx(-0.4, 0.6);
    h1 << 0.3, 0.1, 0.0, -0.2;
    h0 << 0.5, 0.0, cplx(0, 0.2), 1.0;
    H1 << -0.1, 0.2, 0.1, 0.25;
    H0 << 0.0, 0.3, -0.3, 0.7;
    Pencil p = Pencil::zero(2);
    p.Q1 = CoefficientFunction::constant(q1);
    p.Q0 = CoefficientFunction::constant(q0);
    p.h1 = h1;
    p.h0 = h0;
    p.H1 = H1;
    p.H0 = H0;
    return p;
}

double sup_diff(const Trajectory& a, const Trajectory& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, norm(a.value[i] - b.value[i]));
    return d;
}

}  // namespace

TEST_CASE("fundamental system closed forms") {
    SUBCASE("free, rho = 3") {
        const auto cs = fundamental_CS(Pencil::zero(1), 3.0, kDefault);
        for (std::size_t i = 0; i < cs.C.size(); i += 13) {
            const double x = cs.C.x[i];
            CHECK(std::abs(cs.C.value[i](0, 0) - std::cos(3 * x)) < 1e-9);
            CHECK(std::abs(cs.S.value[i](0, 0) - std::sin(3 * x) / 3) < 1e-9);
        }
    }
    SUBCASE("free, rho = 0") {
        const auto cs = fundamental_CS(Pencil::zero(1), 0.0, kDefault);
        for (std::size_t i = 0; i < cs.C.size(); i += 13) {
            CHECK(std::abs(cs.C.value[i](0, 0) - 1.0) < 1e-12);
            CHECK(std::abs(cs.S.value[i](0, 0) - cs.S.x[i]) < 1e-12);
        }
    }
    SUBCASE("Q1 = 0.3, rho = 1") {
        const cplx omega = std::sqrt(cplx(1.0, 0.6));
        const auto cs = fundamental_CS(constant_scalar(0.3, 0.0), 1.0, kDefault);
        for (std::size_t i = 0; i < cs.C.size(); i += 7) {
            CHECK(std::abs(cs.C.value[i](0, 0) - std::cos(omega * cs.C.x[i])) < 1e-9);
            CHECK(std::abs(cs.S.value[i](0, 0) - std::sin(omega * cs.S.x[i]) / omega) < 1e-9);
        }
    }
}

TEST_CASE("phi and psi") {
    SUBCASE("free phi = cos(rho x), psi = cos(rho (pi - x))") {
        const cplx rho(2.3, 0.4);
        const auto phi = solution_phi(Pencil::zero(1), rho, kDefault);
        const auto psi = solution_psi(Pencil::zero(1), rho, kDefault);
        CHECK(psi.direction == Direction::Backward);
        for (std::size_t i = 0; i < phi.size(); i += 11) {
            const double x = phi.x[i];
            CHECK(std::abs(phi.value[i](0, 0) - std::cos(rho * x)) < 1e-9);
            CHECK(std::abs(psi.value[i](0, 0) - std::cos(rho * (kPi - x))) < 1e-9);
        }
        CHECK(std::abs(solution_psi(Pencil::zero(1), 1.0, kDefault).value.front()(0, 0) + 1.0) < 1e-9);
    }
    SUBCASE("Robin h0 = 2: phi = cos x - 2 sin x") {
        const auto phi = solution_phi(constant_scalar(0, 0, 2.0), 1.0, kDefault);
        for (std::size_t i = 0; i < phi.size(); i += 11)
            CHECK(std::abs(phi.value[i](0, 0) - (std::cos(phi.x[i]) - 2 * std::sin(phi.x[i]))) < 1e-9);
    }
    SUBCASE("diagonal m=2 decouples") {
        Pencil p = Pencil::zero(2);
        p.Q1 = CoefficientFunction::constant(diag2(0.3, -0.2));
        p.Q0 = CoefficientFunction::constant(diag2(0.5, 1.0));
        p.H1 = diag2(0.2, -0.4);
        p.H0 = diag2(1.0, 0.0);
        const cplx rho(1.7, 0.2);
        const auto psi = solution_psi(p, rho, kDefault);
        const auto a = solution_psi(constant_scalar(0.3, 0.5, 0, 0, 1.0, 0.2), rho, kDefault);
        const auto b = solution_psi(constant_scalar(-0.2, 1.0, 0, 0, 0.0, -0.4), rho, kDefault);
        for (std::size_t i = 0; i < psi.size(); i += 9) {
            CHECK(std::abs(psi.value[i](0, 0) - a.value[i](0, 0)) < 1e-12);
            CHECK(std::abs(psi.value[i](1, 1) - b.value[i](0, 0)) < 1e-12);
            CHECK(std::abs(psi.value[i](0, 1)) == 0.0);
        }
    }
    SUBCASE("phi expansion through C and S") {
        for (std::uint64_t seed = 100; seed < 106; ++seed) {
            const Pencil p = random_pencil(seed, {.m = 1 + static_cast<Eigen::Index>(seed % 3)});
            CHECK(phi_expansion_gap(p, cplx(-7.0 + 2.5 * (seed - 100), 0.3), kDefault) <= 1e-8);
        }
    }
}

TEST_CASE("Weyl matrix of the free Neumann problem is cot(pi rho)/rho") {
    const Pencil p = Pencil::zero(1);
    const auto check = [&](cplx rho, cplx expect) {
        const auto w = weyl_matrix(p, rho, kDefault);
        CHECK(std::abs(w.M()(0, 0) - expect) < 1e-8);
        CHECK(std::abs(w.M_via_phi(0, 0) - expect) < 1e-8);
        CHECK(w.discrepancy < 1e-9);
    };
    check(0.25, 4.0);
    check(0.5, 0.0);
    check(kI, -1.0 / std::tanh(kPi));
    const cplx r(1.7, 0.3);
    check(r, std::cos(kPi * r) / std::sin(kPi * r) / r);
    CHECK_THROWS_AS(weyl_matrix(p, 1.0, kDefault), NearEigenvalue);
    CHECK_THROWS_AS(weyl_matrix(p, 2.0 + 1e-12, kDefault), NearEigenvalue);
}

TEST_CASE("Weyl matrix of a constant 2x2 pencil against the matrix exponential") {
    const Pencil p = constant_pencil_2x2();
    for (cplx rho : {cplx(0.7, 0.2), cplx(-3.1, 1.0), cplx(5.5, -0.4)}) {
        const Mat I = eye(2), O = zeros(2);
        const auto [phi, dphi] = expm_at_pi(p.Q1.value(0), p.Q0.value(0), rho, I, -(kI * rho * p.h1 + p.h0));
        const auto [S, dS] = expm_at_pi(p.Q1.value(0), p.Q0.value(0), rho, O, I);
        const Mat Vphi = dphi + (kI * rho * p.H1 + p.H0) * phi;
        const Mat VS = dS + (kI * rho * p.H1 + p.H0) * S;
        const Mat expect = -Vphi.inverse() * VS;
        const auto w = weyl_matrix(p, rho, kDefault);
        CHECK(norm(w.M() - expect) < 1e-8 * (1 + norm(expect)));
        CHECK(std::abs(char_function(p, rho, kDefault) - Vphi.determinant()) < 1e-8 * (1 + std::abs(Vphi.determinant())));
    }
}

TEST_CASE("Weyl solution") {
    SUBCASE("free, rho = 0.5: Phi = sin(x/2)/(1/2)") {
        const auto Phi = weyl_solution(Pencil::zero(1), 0.5, kDefault);
        for (std::size_t i = 0; i < Phi.size(); i += 10)
            CHECK(std::abs(Phi.value[i](0, 0) - std::sin(0.5 * Phi.x[i]) / 0.5) < 1e-9);
    }
    SUBCASE("defining conditions and agreement with S + phi M on random pencils") {
        for (std::uint64_t seed = 200; seed < 208; ++seed) {
            const Pencil p = random_pencil(seed, {.m = 1 + static_cast<Eigen::Index>(seed % 3)});
            const cplx rho(-12.0 + 3.0 * (seed - 200), 0.7 - 0.2 * (seed - 200));
            const auto Phi = weyl_solution(p, rho, kDefault);
            const Mat U = boundary_form(BoundaryKind::U, p, rho, Phi.value.front(), Phi.deriv.front());
            const Mat V = boundary_form(BoundaryKind::V, p, rho, Phi.value.back(), Phi.deriv.back());
            CHECK(norm(U - eye(p.m)) <= 1e-8);
            CHECK(norm(V) <= 1e-8);
            const auto alt = weyl_solution_from_phi(p, rho, kDefault);
            CHECK(sup_diff(Phi, alt) <= 1e-7 * (1.0 + norm(Phi.value.front())));
        }
    }
}

TEST_CASE("route agreement on random pencils") {
    for (std::uint64_t seed = 300; seed < 312; ++seed) {
        const Pencil p = random_pencil(seed, {.m = 1 + static_cast<Eigen::Index>(seed % 3)});
        const double u = static_cast<double>(seed - 300);
        const cplx rho(20.0 * std::cos(0.9 * u), 0.9 * std::sin(1.7 * u));
        try {
            const auto w = weyl_matrix(p, rho, kDefault);
            CHECK(w.discrepancy <= 1e-7 * (1.0 + norm(w.M())));
        } catch (const NearEigenvalue&) {
        }
    }
}

TEST_CASE("adjoint solutions") {
    SUBCASE("scalar adjoints coincide with the direct solutions") {
        const Pencil p = random_pencil(7, {.m = 1});
        const cplx rho(3.3, -0.6);
        const auto adj = adjoint_solutions(p, rho, kDefault);
        const auto phi = solution_phi(p, rho, kDefault);
        const auto Phi = weyl_solution(p, rho, kDefault);
        CHECK(sup_diff(adj.phi, phi) < 1e-12 * (1 + norm(phi.value.back())));
        CHECK(sup_diff(adj.Phi, Phi) < 1e-12 * (1 + norm(Phi.value.front())));
        CHECK(std::abs(adj.M(0, 0) - weyl_matrix(p, rho, kDefault).M()(0, 0)) < 1e-10);
    }
    SUBCASE("anchors") {
        const Pencil p = random_pencil(8, {.m = 2});
        const cplx rho(2.1, 0.5);
        const auto adj = adjoint_solutions(p, rho, kDefault);
        CHECK(norm(adj.phi.value.front() - eye(2)) == 0.0);
        CHECK(norm(adj.S.value.front()) == 0.0);
        CHECK(norm(adj.S.deriv.front() - eye(2)) == 0.0);
        CHECK(norm(adj.psi.value.back() - eye(2)) == 0.0);
        CHECK(norm(boundary_form(BoundaryKind::UStar, p, rho, adj.phi.value.front(), adj.phi.deriv.front())) < 1e-14);
        CHECK(norm(boundary_form(BoundaryKind::VStar, p, rho, adj.psi.value.back(), adj.psi.deriv.back())) < 1e-14);
        CHECK(norm(boundary_form(BoundaryKind::UStar, p, rho, adj.Phi.value.front(), adj.Phi.deriv.front()) - eye(2)) < 1e-9);
        CHECK(adj.consistency_gap < 1e-8);
    }
    SUBCASE("free pencil: Phi* = Phi") {
        const auto adj = adjoint_solutions(Pencil::zero(2), cplx(0.7, 0.1), kDefault);
        const auto Phi = weyl_solution(Pencil::zero(2), cplx(0.7, 0.1), kDefault);
        CHECK(sup_diff(adj.Phi, Phi) < 1e-12);
    }
    SUBCASE("M = M* on random matrix pencils") {
        for (std::uint64_t seed = 400; seed < 406; ++seed) {
            const Pencil p = random_pencil(seed, {.m = 2 + static_cast<Eigen::Index>(seed % 2)});
            for (int k = 0; k < 4; ++k) {
                const cplx rho(-15.0 + 9.0 * k + 0.5 * (seed - 400), 0.8 * std::sin(seed + k));
                const Mat M = weyl_matrix(p, rho, kDefault).M();
                const Mat Ms = adjoint_solutions(p, rho, kDefault).M;
                CHECK(norm(M - Ms) <= 1e-7 * (1 + norm(M)));
            }
        }
    }
}

TEST_CASE("block inverse identity") {
    for (std::uint64_t seed = 500; seed < 506; ++seed) {
        const Pencil p = random_pencil(seed, {.m = 1 + static_cast<Eigen::Index>(seed % 3)});
        const cplx rho(11.0 - 4.0 * (seed - 500), 0.5);
        const auto phi = solution_phi(p, rho, kDefault);
        const auto Phi = weyl_solution(p, rho, kDefault);
        CHECK(block_inverse_residual(phi, Phi, adjoint_solutions(p, rho, kDefault)) <= 1e-7);
    }
}

TEST_CASE("characteristic function") {
    const Pencil p = Pencil::zero(1);
    CHECK(std::abs(char_function(p, 2.0, kDefault)) < 1e-9);
    CHECK(std::abs(char_function(p, 0.5, kDefault) + 0.5) < 1e-9);
    const cplx r(1.3, 0.4);
    CHECK(std::abs(char_function(p, r, kDefault) + r * std::sin(kPi * r)) < 1e-9);
    CHECK(std::abs(char_function_U(p, 2.0, kDefault)) < 1e-9);

    Pencil d = Pencil::zero(2);
    d.Q0 = CoefficientFunction::constant(diag2(0.5, -0.3));
    d.h1 = diag2(0.2, 0.1);
    d.H0 = diag2(0.0, 0.4);
    const cplx rho(2.2, -0.3);
    const cplx a = char_function(constant_scalar(0, 0.5, 0, 0.2), rho, kDefault);
    const cplx b = char_function(constant_scalar(0, -0.3, 0, 0.1, 0.4), rho, kDefault);
    CHECK(std::abs(char_function(d, rho, kDefault) - a * b) < 1e-9 * (1 + std::abs(a * b)));
}
