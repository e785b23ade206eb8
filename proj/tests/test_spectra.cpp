#include <cmath>

#include "doctest.h"
#include "qpencil/errors.hpp"
#include "qpencil/spectra.hpp"
#include "test_support.hpp"

using namespace qpencil;
using namespace qpencil::testing;

namespace {

const IntegrationSettings kDefault{};

Pencil free_diag2() { return Pencil::zero(2); }

}  // namespace

TEST_CASE("contour geometry") {
    const auto c = Contour::circle(cplx(1, 1), 2.0, 64);
    const auto p0 = c.points(0), p1 = c.points(1);
    REQUIRE(p0.size() == 64);
    REQUIRE(p1.size() == 128);
    for (std::size_t k = 0; k < p0.size(); ++k) CHECK(std::abs(p1[2 * k] - p0[k]) < 1e-15);
    const auto r = Contour::rectangle(0, 4, 0, 1, 100);
    const auto q0 = r.points(0), q1 = r.points(2);
    REQUIRE(q1.size() == 4 * q0.size());
    for (std::size_t k = 0; k < q0.size(); ++k) CHECK(std::abs(q1[4 * k] - q0[k]) < 1e-15);
    CHECK(q0.front() == cplx(0, 0));
    CHECK_THROWS_AS(Contour::circle(0.0, 1.0, 32), ValidationError);
    CHECK_THROWS_AS(Contour::circle(0.0, -1.0), ValidationError);
    CHECK_THROWS_AS(Contour::rectangle(1, 0, 0, 1), ValidationError);
}

TEST_CASE("argument principle counts for the free pencil") {
    const Pencil p = Pencil::zero(1);
    CHECK(count_zeros(p, Contour::circle(2.0, 1.5), kDefault) == 3);
    CHECK(count_zeros(p, Contour::circle(0.5, 0.2), kDefault) == 0);
    CHECK(count_zeros(free_diag2(), Contour::circle(2.0, 1.5), kDefault) == 6);
    CHECK(count_zeros(p, Contour::circle(0.0, 0.5), kDefault) == 2);
    CHECK_THROWS_AS(count_zeros(p, Contour::circle(0.0, 1.0), kDefault), ZeroOnContour);
}

TEST_CASE("count additivity over quadrants") {
    const Pencil p = random_pencil(17, {.m = 2});
    const double x0 = 0.31, x1 = 6.17, y0 = -1.13, y1 = 0.87, xm = 3.03, ym = -0.21;
    const int whole = count_zeros(p, Contour::rectangle(x0, x1, y0, y1), kDefault);
    const int parts = count_zeros(p, Contour::rectangle(x0, xm, y0, ym), kDefault) +
                      count_zeros(p, Contour::rectangle(xm, x1, y0, ym), kDefault) +
                      count_zeros(p, Contour::rectangle(x0, xm, ym, y1), kDefault) +
                      count_zeros(p, Contour::rectangle(xm, x1, ym, y1), kDefault);
    CHECK(whole > 0);
    CHECK(whole == parts);
}

TEST_CASE("eigenvalues of the free pencil") {
    const Pencil p = Pencil::zero(1);
    const auto recs = locate_eigenvalues(p, {0.5, 10.5, -1.0, 1.0}, kDefault);
    REQUIRE(recs.size() == 10);
    for (int n = 1; n <= 10; ++n) {
        const auto& r = recs[n - 1];
        CHECK(std::abs(r.rho - cplx(n, 0)) < 1e-8);
        CHECK(r.multiplicity == 1);
        CHECK_FALSE(r.cluster);
        CHECK(r.residual <= 1e-8 * r.contour_max);
    }
    const auto origin = locate_eigenvalues(p, {-0.4, 0.4, -0.4, 0.4}, kDefault);
    REQUIRE(origin.size() == 1);
    CHECK(origin[0].multiplicity == 2);
    CHECK_FALSE(origin[0].cluster);
    CHECK(std::abs(origin[0].rho) < 1e-7);
}

TEST_CASE("eigenvalues with Q0 = 1 are sqrt(n^2 - 1)") {
    const Pencil p = constant_scalar(0.0, 1.0);
    const auto recs = locate_eigenvalues(p, {0.5, 3.5, -0.5, 0.5}, kDefault);
    REQUIRE(recs.size() == 2);
    CHECK(std::abs(recs[0].rho - std::sqrt(3.0)) < 1e-8);
    CHECK(std::abs(recs[1].rho - std::sqrt(8.0)) < 1e-8);
    const auto top = locate_eigenvalues(p, {-0.3, 0.3, 0.7, 1.3}, kDefault);
    REQUIRE(top.size() == 1);
    CHECK(std::abs(top[0].rho - kI) < 1e-8);
    CHECK(top[0].multiplicity == 1);
}

TEST_CASE("zeros of det V(phi) and det U(psi) agree") {
    const Pencil p = random_pencil(23, {.m = 2});
    const Rectangle region{0.21, 4.33, -1.07, 1.19};
    const auto a = locate_eigenvalues(p, region, kDefault);
    const auto b = locate_zeros([&](cplx r) { return char_function_U(p, r, kDefault); }, region);
    REQUIRE(a.size() == b.size());
    REQUIRE(!a.empty());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(std::abs(a[k].rho - b[k].rho) < 1e-7);
        CHECK(a[k].multiplicity == b[k].multiplicity);
    }
    // Each zero is a pole of M.
    for (const auto& r : a) {
        if (r.multiplicity != 1) continue;
        const double near = norm(weyl_matrix(p, r.rho + 1e-4, kDefault).M());
        const double far = norm(weyl_matrix(p, r.rho + cplx(0, 0.05), kDefault).M());
        CHECK(near > 100.0 * far);
    }
}

TEST_CASE("residues of the free Weyl function are 1/(pi n)") {
    const Pencil p = Pencil::zero(1);
    for (int n = 1; n <= 3; ++n) {
        const auto a = residue_matrices(p, static_cast<double>(n), 1, 0.3, kDefault);
        const auto b = residue_matrices(p, static_cast<double>(n), 1, 0.2, kDefault);
        REQUIRE(a.size() == 1);
        CHECK(std::abs(a[0](0, 0) - 1.0 / (kPi * n)) < 1e-7);
        CHECK(norm(a[0] - b[0]) < 1e-7);
    }
    // Removing the singular part leaves a bounded remainder as the offset shrinks.
    const Mat r1 = residue_matrices(p, 1.0, 1, 0.3, kDefault)[0];
    std::vector<double> rest;
    for (double d : {0.05, 0.01, 0.002})
        rest.push_back(norm(weyl_matrix(p, 1.0 + d, kDefault).M() - r1 / d));
    CHECK(rest[2] < 1.0);
    CHECK(std::abs(rest[2] - rest[1]) < std::abs(rest[1] - rest[0]) + 1e-9);

    // The double pole at the origin: M = 1/(pi rho^2) + O(1).
    const auto origin = residue_matrices(p, 0.0, 2, 0.5, kDefault);
    CHECK(std::abs(origin[0](0, 0)) < 1e-8);
    CHECK(std::abs(origin[1](0, 0) - 1.0 / kPi) < 1e-8);
}

TEST_CASE("residue preconditions") {
    const Pencil p = Pencil::zero(1);
    CHECK_THROWS_AS(residue_matrices(p, 1.0, 1, 1.2, kDefault), ValidationError);
    CHECK_THROWS_AS(residue_matrices(p, 1.0, 4, 0.3, kDefault), ValidationError);
}

TEST_CASE("h1 from the Weyl matrix asymptotics") {
    const auto moduli = SectorRay::log_moduli(12.5, 50.0, 3);
    const SectorRay plus{+1, kPi / 6, kPi / 2, moduli};
    const SectorRay minus{-1, kPi / 6, -kPi / 2, moduli};
    SUBCASE("free pencil") {
        const auto h = estimate_h1_from_M(Pencil::zero(1), plus, minus, kDefault);
        CHECK(norm(h.h1) < 1e-3);
        CHECK(h.gap <= 1e-3);
    }
    SUBCASE("scalar h1 = 0.5") {
        Pencil p = random_pencil(41, {.m = 1});
        p.h1 = scalar(0.5);
        const auto h = estimate_h1_from_M(p, plus, minus, kDefault);
        CHECK(std::abs(h.h1(0, 0) - 0.5) < 1e-2);
    }
    SUBCASE("diagonal m = 2") {
        Pencil p = random_pencil(42, {.m = 2});
        p.h1 = diag2(0.3, -0.2);
        const auto h = estimate_h1_from_M(p, plus, minus, kDefault);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs(h.h1(i, j) - p.h1(i, j)) < 1e-2);
        CHECK(h.gap < 1e-2);
    }
    SUBCASE("invalid rays") {
        CHECK_THROWS_AS(estimate_h1_from_M(Pencil::zero(1), minus, plus, kDefault), ValidationError);
        const SectorRay outside{+1, kPi / 6, 0.1, moduli};
        CHECK_THROWS_AS(estimate_h1_from_M(Pencil::zero(1), outside, minus, kDefault), ValidationError);
    }
}

TEST_CASE("multiple zeros and close pairs") {
    const cplx a(1.0, 0.5);
    const auto dbl = locate_zeros([&](cplx z) { return (z - a) * (z - a) * (z + 2.0); }, {-3.1, 3.3, -1.2, 1.4});
    REQUIRE(dbl.size() == 2);
    CHECK(std::abs(dbl[0].rho + 2.0) < 1e-9);
    CHECK(dbl[0].multiplicity == 1);
    CHECK(std::abs(dbl[1].rho - a) < 1e-7);
    CHECK(dbl[1].multiplicity == 2);
    CHECK_FALSE(dbl[1].cluster);

    const cplx b = a + 1e-3;
    const auto pair = locate_zeros([&](cplx z) { return (z - a) * (z - b); }, {0.3, 1.9, -0.2, 1.1});
    REQUIRE(pair.size() == 2);
    CHECK(std::abs(pair[0].rho - a) < 1e-9);
    CHECK(std::abs(pair[1].rho - b) < 1e-9);
    CHECK(pair[0].multiplicity + pair[1].multiplicity == 2);

    const auto triple = locate_zeros([&](cplx z) { return (z - a) * (z - a) * (z - a); }, {0.3, 1.9, -0.2, 1.1});
    REQUIRE(triple.size() == 1);
    CHECK(triple[0].multiplicity == 3);
    CHECK(std::abs(triple[0].rho - a) < 1e-5);
}
