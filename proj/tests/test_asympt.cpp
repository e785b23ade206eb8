#include <cmath>

#include "doctest.h"
#include "qpencil/asympt.hpp"
#include "qpencil/errors.hpp"
#include "test_support.hpp"

using namespace qpencil;
using namespace qpencil::testing;

namespace {

const IntegrationSettings kDefault{};
const double kDelta = kPi / 6;

SectorRay ray(int sign, double arg, double lo = 10, double hi = 80, int n = 8) {
    return SectorRay{sign, kDelta, arg, SectorRay::log_moduli(lo, hi, n)};
}

Pencil smooth_scalar() {
    return scalar_fn([](double x) { return 0.3 + 0.1 * std::sin(x); }, [](double) { return 0.2; });
}

}  // namespace

TEST_CASE("leading terms in closed form") {
    const auto tf0 = solve_transport(Pencil::zero(1), kDefault);
    const cplx rho(7.0, 2.0);
    CHECK(std::abs(predict_leading(SolutionKind::C, Pencil::zero(1), 1.1, rho, 0, Sector::Both, tf0)(0, 0) -
                   std::cos(rho * 1.1)) < 1e-14);
    CHECK(std::abs(predict_leading(SolutionKind::S, Pencil::zero(1), 1.1, rho, 0, Sector::Both, tf0)(0, 0) -
                   std::sin(rho * 1.1) / rho) < 1e-14);
    CHECK(std::abs(predict_leading(SolutionKind::M, Pencil::zero(1), 0.0, rho, 0, Sector::Plus, tf0)(0, 0) -
                   1.0 / (kI * rho)) < 1e-15);

    Pencil h = Pencil::zero(1);
    h.h1 = scalar(0.5);
    const cplx r(3.0, -4.0);
    const double x = 0.8;
    CHECK(std::abs(predict_leading(SolutionKind::phi, h, x, r, 1, Sector::Minus, tf0)(0, 0) -
                   0.5 * kI * r * std::exp(kI * r * x) * 0.5) < 1e-13);

    CHECK_THROWS_AS(predict_leading(SolutionKind::Phi, h, x, r, 0, Sector::Both, tf0), ValidationError);
    CHECK_THROWS_AS(predict_leading(SolutionKind::phi_star, h, x, r, 0, Sector::Both, tf0), ValidationError);
    CHECK_THROWS_AS(predict_leading(SolutionKind::M, h, x, r, 1, Sector::Plus, tf0), ValidationError);
    CHECK_THROWS_AS(predict_leading(SolutionKind::C, h, x, r, 2, Sector::Both, tf0), ValidationError);
}

TEST_CASE("kind names round trip") {
    for (auto k : {SolutionKind::C, SolutionKind::S, SolutionKind::phi, SolutionKind::psi, SolutionKind::Phi,
                   SolutionKind::M, SolutionKind::phi_star, SolutionKind::psi_star, SolutionKind::Phi_star})
        CHECK(kind_from_name(kind_name(k)) == k);
    CHECK_THROWS_AS(kind_from_name("Q"), ValidationError);
}

TEST_CASE("evaluated solutions match the full trajectories") {
    const Pencil p = random_pencil(13, {.m = 2});
    const cplx rho(6.0, 1.5);
    const double x = kPi / 3;
    IntegrationSettings s;
    s.output_grid = {x};
    const auto Phi = weyl_solution(p, rho, s);
    const auto adj = adjoint_solutions(p, rho, s);
    const auto ix = static_cast<std::size_t>(Phi.find(x));
    CHECK(norm(evaluate_solution(SolutionKind::Phi, p, x, rho, 1, kDefault) - Phi.deriv[ix]) < 1e-9 * norm(Phi.deriv[ix]));
    CHECK(norm(evaluate_solution(SolutionKind::Phi_star, p, x, rho, 0, kDefault) - adj.Phi.value[ix]) <
          1e-9 * norm(adj.Phi.value[ix]));
    CHECK(norm(evaluate_solution(SolutionKind::psi_star, p, x, rho, 0, kDefault) - adj.psi.value[ix]) <
          1e-9 * norm(adj.psi.value[ix]));
    CHECK(norm(evaluate_solution(SolutionKind::psi, p, kPi, rho, 0, kDefault) - eye(2)) == 0.0);
}

TEST_CASE("free pencil: C is exact to precision") {
    const auto tf = solve_transport(Pencil::zero(1), kDefault);
    const auto fit = residual_decay(SolutionKind::C, Pencil::zero(1), 1.0, 0, ray(+1, kPi / 2), kDefault, tf);
    CHECK(fit.exact_to_precision);
    CHECK(fit.meets_claim());
}

TEST_CASE("decay rates for a smooth scalar pencil") {
    const Pencil p = smooth_scalar();
    const auto tf = solve_transport(p, kDefault);
    const auto fit = residual_decay(SolutionKind::C, p, kPi / 3, 0, ray(+1, kDelta), kDefault, tf);
    CHECK_FALSE(fit.exact_to_precision);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(0.2));
    Pencil ph = p;
    ph.h1 = scalar(0.25);
    const auto mfit = residual_decay(SolutionKind::M, ph, 0.0, 0, ray(+1, kDelta), kDefault, tf);
    CHECK(std::abs(mfit.slope + 2.0) <= 0.3);
}

TEST_CASE("claimed orders on every kind, both sectors") {
    const Pencil p = random_pencil(5, {.m = 2});
    const auto tf = solve_transport(p, kDefault);
    for (int sign : {+1, -1}) {
        const auto r = ray(sign, sign * kPi / 2, 10, 80, 6);
        for (auto k : {SolutionKind::C, SolutionKind::S, SolutionKind::phi, SolutionKind::psi, SolutionKind::Phi,
                       SolutionKind::phi_star, SolutionKind::psi_star, SolutionKind::Phi_star})
            for (int nu : {0, 1}) {
                const auto fit = residual_decay(k, p, kPi / 3, nu, r, kDefault, tf);
                INFO(kind_name(k), " nu=", nu, " sign=", sign, " slope=", fit.slope);
                CHECK(fit.claimed_order == leading_order(k, nu) - 1);
                CHECK(std::abs(fit.slope - fit.claimed_order) < 0.2);
            }
        const auto m = residual_decay(SolutionKind::M, p, 0.0, 0, r, kDefault, tf);
        CHECK(std::abs(m.slope + 2.0) < 0.2);
    }
}

TEST_CASE("two-term and one-term phi differ by the recessive term") {
    const Pencil p = random_pencil(9, {.m = 2});
    const auto tf = solve_transport(p, kDefault);
    const double x = kPi / 4;
    const auto r = ray(+1, 2 * kPi / 5, 5, 9, 5);
    std::vector<double> normalised;
    for (const cplx rho : r.points()) {
        const Mat both = predict_leading(SolutionKind::phi, p, x, rho, 0, Sector::Both, tf);
        const Mat one = predict_leading(SolutionKind::phi, p, x, rho, 0, Sector::Plus, tf);
        const double ratio = norm(both - one) / norm(one);
        normalised.push_back(ratio * std::exp(2.0 * rho.imag() * x));
    }
    for (double v : normalised) CHECK(v == doctest::Approx(normalised.front()).epsilon(1e-8));
}

TEST_CASE("Weyl solution prediction through the bullet transports equals the direct form") {
    const Pencil p = random_pencil(19, {.m = 3});
    const auto tf = solve_transport(p, kDefault);
    for (double x : {0.3, 1.2, 2.8})
        for (Sector sec : {Sector::Plus, Sector::Minus})
            for (int nu : {0, 1}) {
                const cplx rho = sec == Sector::Plus ? cplx(5.0, 9.0) : cplx(5.0, -9.0);
                const Mat a = predict_leading(SolutionKind::Phi, p, x, rho, nu, sec, tf);
                const Mat b = predict_weyl_solution_direct(p, x, rho, nu, sec, tf);
                CHECK(norm(a - b) <= 1e-9 * norm(a));
            }
}

TEST_CASE("mu norms") {
    const auto mu = mu_norms(Pencil::zero(1), 5.0, kDefault);
    CHECK(mu.mu0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mu.mu1 == doctest::Approx(5.0).epsilon(1e-2));

    const Pencil p = random_pencil(31, {.m = 2});
    std::vector<double> lr, lmu;
    for (double r : SectorRay::log_moduli(10, 80, 8)) {
        const cplx rho = std::polar(r, 0.3);
        const auto m = mu_norms(p, rho, kDefault);
        CHECK(m.mu0 <= 5.0);
        CHECK(m.mu1 <= 5.0 * r);
        lr.push_back(std::log(r));
        lmu.push_back(std::log(m.mu0));
    }
    CHECK(theil_sen_slope(lr, lmu) <= 0.1);
}

TEST_CASE("fit helpers") {
    const auto f = fit_log_log({1, 2, 4, 8}, {3, 0.75, 0.1875, 0.046875});
    CHECK(f.slope == doctest::Approx(-2.0));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
    CHECK(f.residual < 1e-12);
    CHECK(theil_sen_slope({0, 1, 2, 3, 4}, {0, 1, 2, 30, 4}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(fit_log_log({1}, {1}), ValidationError);
    CHECK_THROWS_AS(fit_log_log({1, 2}, {1, 0}), ValidationError);
}
