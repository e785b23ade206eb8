#include <cmath>

#include "doctest.h"
#include "qpencil/errors.hpp"
#include "qpencil/fundamental.hpp"
#include "qpencil/volterra.hpp"
#include "test_support.hpp"

using namespace qpencil;
using namespace qpencil::testing;

namespace {

const IntegrationSettings kDefault{};

struct Gap {
    double value = 0.0;
    double deriv = 0.0;
};

// Exponentially weighted sup-distance between a Picard trajectory and matode on the same grid.
Gap weighted_gap(const Trajectory& a, const Trajectory& b) {
    Gap g;
    const double tau = std::abs(a.rho.imag());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = std::exp(-tau * a.x[i]);
        g.value = std::max(g.value, w * norm(a.value[i] - b.value[i]));
        g.deriv = std::max(g.deriv, w * norm(a.deriv[i] - b.deriv[i]));
    }
    return g;
}

FundamentalSystem matode_on(const Pencil& p, cplx rho, const std::vector<double>& grid) {
    IntegrationSettings s;
    s.output_grid = grid;
    return fundamental_CS(p, rho, s);
}

}  // namespace

TEST_CASE("reference solutions") {
    SUBCASE("Q1 = 0") {
        const auto tf = solve_transport(Pencil::zero(1), kDefault);
        const cplx rho(4.0, 0.5);
        for (double x : {0.0, 0.7, 2.2, kPi}) {
            const auto r = birkhoff_reference(Pencil::zero(1), rho, x, tf);
            CHECK(std::abs(r.C0(0, 0) - std::cos(rho * x)) < 1e-13);
            CHECK(std::abs(r.S0(0, 0) - std::sin(rho * x) / rho) < 1e-13);
            CHECK(std::abs(r.dS0(0, 0) - std::cos(rho * x)) < 1e-13);
        }
    }
    SUBCASE("constant scalar Q1 = q") {
        const double q = 0.7;
        const Pencil p = constant_scalar(q, 0.0);
        const auto tf = solve_transport(p, kDefault);
        const cplx rho(3.0, -1.0);
        for (double x : {0.0, 1.1, 2.9}) {
            const auto r = birkhoff_reference(p, rho, x, tf);
            const cplx expect = 0.5 * std::exp(kI * rho * x) * std::exp(-q * x) + 0.5 * std::exp(-kI * rho * x) * std::exp(q * x);
            CHECK(std::abs(r.C0(0, 0) - expect) < 1e-10 * std::abs(expect));
        }
    }
    SUBCASE("anchors, kernel identity and the inverse Wronskian block") {
        const Pencil p = random_pencil(11, {.m = 2});
        const auto tf = solve_transport(p, kDefault);
        const cplx rho(6.0, 0.8);
        const auto r0 = birkhoff_reference(p, rho, 0.0, tf);
        CHECK(norm(r0.C0 - eye(2)) < 1e-14);
        CHECK(norm(r0.S0) < 1e-14);
        CHECK(norm(r0.C0s - eye(2)) < 1e-14);
        CHECK(norm(r0.S0s) < 1e-14);
        for (double x : {0.4, 1.9, 3.0}) {
            for (double t : {0.1, 1.3, 2.5}) {
                const auto rx = birkhoff_reference(p, rho, x, tf);
                const auto rt = birkhoff_reference(p, rho, t, tf);
                const Mat lhs = rx.S0 * rt.C0s - rx.C0 * rt.S0s;
                const Mat rhs = (std::exp(kI * rho * (x - t)) * tf(Transport::Minus, x) * tf(Transport::PlusStar, t) -
                                 std::exp(-kI * rho * (x - t)) * tf(Transport::Plus, x) * tf(Transport::MinusStar, t)) /
                                (2.0 * kI * rho);
                CHECK(norm(lhs - rhs) < 1e-10 * (1 + norm(rhs)));
            }
            const auto r = birkhoff_reference(p, rho, x, tf);
            Mat W(4, 4), Winv(4, 4), D = Mat::Zero(4, 4);
            W << r.C0, r.S0, r.dC0, r.dS0;
            Winv << r.dS0s, -r.S0s, -r.dC0s, r.C0s;
            Mat shift = -p.Q1.value(x);
            shift.diagonal().array() += kI * rho;
            D.topLeftCorner(2, 2) = D.bottomRightCorner(2, 2) = kI * rho * inverse(shift);
            CHECK(norm(Winv * D * W - eye(4)) < 1e-9);
        }
    }
    CHECK_THROWS_AS(birkhoff_reference(Pencil::zero(1), 0.5, 1.0, solve_transport(Pencil::zero(1), kDefault)),
                    ValidationError);
}

TEST_CASE("forcing term") {
    CHECK(norm(forcing_F(Pencil::zero(2), 3.0, 1.0, eye(2), eye(2))) == 0.0);
    const Pencil c = constant_scalar(0.4, 0.0);
    CHECK(std::abs(forcing_F(c, 3.0, 1.0, scalar(2.0), scalar(5.0))(0, 0) + 0.32) < 1e-14);
    const Pencil cosq = scalar_fn([](double x) { return std::cos(x); }, [](double) { return 0.0; });
    const Mat Y = scalar(cplx(1.5, -0.5));
    CHECK(std::abs(forcing_F(cosq, cplx(0, 5), 0.0, Y, scalar(7.0))(0, 0) + Y(0, 0)) < 1e-12);
}

TEST_CASE("Picard solution of the free pencil converges at once") {
    const auto tf = solve_transport(Pencil::zero(1), kDefault);
    const auto res = picard_solve(Pencil::zero(1), 5.0, FundamentalKind::C, tf);
    CHECK(res.state.iterations == 1);
    for (std::size_t i = 0; i < res.trajectory.size(); ++i)
        CHECK(std::abs(res.trajectory.value[i](0, 0) - std::cos(5 * res.trajectory.x[i])) < 1e-13);
}

TEST_CASE("Picard against matode") {
    SUBCASE("Q1 = 0.3, rho = 10") {
        const Pencil p = constant_scalar(0.3, 0.0);
        const auto tf = solve_transport(p, kDefault);
        const auto res = picard_solve(p, 10.0, FundamentalKind::C, tf);
        const auto ref = matode_on(p, 10.0, res.trajectory.x);
        CHECK(weighted_gap(res.trajectory, ref.C).value <= 1e-6);
        CHECK(norm(res.trajectory.value.front() - eye(1)) <= 1e-12);
        CHECK(norm(res.trajectory.deriv.front()) <= 1e-12);
    }
    SUBCASE("random matrix pencils, C and S") {
        for (std::uint64_t seed = 600; seed < 604; ++seed) {
            const Pencil p = random_pencil(seed, {.m = 2 + static_cast<Eigen::Index>(seed % 2)});
            const auto tf = solve_transport(p, kDefault);
            const cplx rho = std::polar(5.0 + 15.0 * (seed - 600), 0.3 * (static_cast<double>(seed) - 601.5));
            const auto C = picard_solve(p, rho, FundamentalKind::C, tf);
            const auto S = picard_solve(p, rho, FundamentalKind::S, tf);
            const auto ref = matode_on(p, rho, C.trajectory.x);
            const auto gc = weighted_gap(C.trajectory, ref.C);
            const auto gs = weighted_gap(S.trajectory, ref.S);
            CHECK(gc.value <= 1e-5);
            CHECK(gc.deriv <= 1e-5 * std::abs(rho));
            CHECK(gs.value <= 1e-5);
            CHECK(gs.deriv <= 1e-5 * std::abs(rho));
            CHECK(norm(S.trajectory.deriv.front() - eye(p.m)) <= 1e-12);
            CHECK(norm(S.trajectory.value.front()) <= 1e-12);
        }
    }
}

TEST_CASE("Picard differences contract") {
    const Pencil p = random_pencil(77, {.m = 2});
    const auto tf = solve_transport(p, kDefault);
    const auto res = picard_solve(p, cplx(30.0, 1.0), FundamentalKind::C, tf);
    const auto& h = res.state.history;
    REQUIRE(h.size() >= 3);
    for (std::size_t i = 2; i < h.size(); ++i)
        if (h[i - 1] < 1.0 && h[i - 1] > 1e-13) CHECK(h[i] < h[i - 1]);
    CHECK(h.back() <= 1e-12);
}

TEST_CASE("Picard errors") {
    const Pencil p = random_pencil(3, {.m = 1});
    const auto tf = solve_transport(p, kDefault);
    CHECK_THROWS_AS(picard_solve(p, 0.5, FundamentalKind::C, tf), ValidationError);
    PicardOptions one;
    one.max_iter = 1;
    CHECK_THROWS_AS(picard_solve(p, 5.0, FundamentalKind::C, tf, one), NonConvergence);
    CHECK_THROWS_AS(picard_solve(random_pencil(3, {.m = 2}), 5.0, FundamentalKind::C, tf), ValidationError);
}
