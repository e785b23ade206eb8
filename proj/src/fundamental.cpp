#include "qpencil/fundamental.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "qpencil/errors.hpp"

namespace qpencil {

namespace {

Mat robin(cplx rho, const Mat& h1, const Mat& h0) { return kI * rho * h1 + h0; }

const std::array<double, 1> kAtPi{kPi};
const std::array<double, 1> kAtZero{0.0};

// Condition of a boundary form B = W' + R W measured against the size of its terms, so that
// a scalar form that cancels to rounding level is also flagged.
double boundary_condition(const Mat& B, const Mat& W, const Mat& dW, const Mat& R, cplx rho) {
    const double scale = norm(dW) + (1.0 + std::abs(rho) + norm(R)) * norm(W);
    const double c = condition_number(B);
    if (!std::isfinite(c)) return c;
    return std::max(c, norm(inverse(B)) * scale);
}

void check_conditioning(const char* what, double cond) {
    if (!(cond <= kNearEigenvalueCond))
        throw NearEigenvalue(std::string(what) + " is near-singular, rho is close to an eigenvalue", cond);
}

}  // namespace

FundamentalSystem fundamental_CS(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const Mat I = eye(p.m), O = zeros(p.m);
    return {integrate_pencil_ode(Side::Right, p, rho, I, O, 0.0, kPi, s),
            integrate_pencil_ode(Side::Right, p, rho, O, I, 0.0, kPi, s)};
}

Trajectory solution_phi(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    return integrate_pencil_ode(Side::Right, p, rho, eye(p.m), -robin(rho, p.h1, p.h0), 0.0, kPi, s);
}

Trajectory solution_psi(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    return integrate_pencil_ode(Side::Right, p, rho, eye(p.m), -robin(rho, p.H1, p.H0), kPi, 0.0, s);
}

double phi_expansion_gap(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const auto cs = fundamental_CS(p, rho, s);
    const auto phi = solution_phi(p, rho, s);
    const Trajectory expanded = cs.C - cs.S.times_right(robin(rho, p.h1, p.h0));
    double gap = 0.0, size = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        gap = std::max(gap, norm(phi.value[i] - expanded.value[i]));
        size = std::max(size, norm(phi.value[i]));
    }
    return gap / (1.0 + size);
}

WeylEvaluation weyl_matrix(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const Mat I = eye(p.m), O = zeros(p.m);
    const auto psi = integrate_pencil_ode(Side::Right, p, rho, I, -robin(rho, p.H1, p.H0), kPi, 0.0, kAtZero, s);
    const auto phi = integrate_pencil_ode(Side::Right, p, rho, I, -robin(rho, p.h1, p.h0), 0.0, kPi, kAtPi, s);
    const auto S = integrate_pencil_ode(Side::Right, p, rho, O, I, 0.0, kPi, kAtPi, s);

    const Mat U_psi = boundary_form(BoundaryKind::U, p, rho, psi.value.front(), psi.deriv.front());
    const Mat V_phi = boundary_form(BoundaryKind::V, p, rho, phi.value.back(), phi.deriv.back());
    const Mat V_S = boundary_form(BoundaryKind::V, p, rho, S.value.back(), S.deriv.back());

    WeylEvaluation w;
    w.rho = rho;
    w.cond_U_psi = boundary_condition(U_psi, psi.value.front(), psi.deriv.front(), robin(rho, p.h1, p.h0), rho);
    w.cond_V_phi = boundary_condition(V_phi, phi.value.back(), phi.deriv.back(), robin(rho, p.H1, p.H0), rho);
    check_conditioning("U(psi)", w.cond_U_psi);
    check_conditioning("V(phi)", w.cond_V_phi);
    w.M_via_psi = psi.value.front() * inverse(U_psi);
    w.M_via_phi = -inverse(V_phi) * V_S;
    w.discrepancy = norm(w.M_via_psi - w.M_via_phi);
    return w;
}

Trajectory weyl_solution(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const auto psi = solution_psi(p, rho, s);
    const Mat U_psi = boundary_form(BoundaryKind::U, p, rho, psi.value.front(), psi.deriv.front());
    check_conditioning("U(psi)",
                       boundary_condition(U_psi, psi.value.front(), psi.deriv.front(), robin(rho, p.h1, p.h0), rho));
    return psi.times_right(inverse(U_psi));
}

Trajectory weyl_solution_from_phi(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const auto w = weyl_matrix(p, rho, s);
    const auto cs = fundamental_CS(p, rho, s);
    return cs.S + solution_phi(p, rho, s).times_right(w.M());
}

AdjointBundle adjoint_solutions(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const Mat I = eye(p.m), O = zeros(p.m);
    AdjointBundle b;
    b.phi = integrate_pencil_ode(Side::Left, p, rho, I, -robin(rho, p.h1, p.h0), 0.0, kPi, s);
    b.S = integrate_pencil_ode(Side::Left, p, rho, O, I, 0.0, kPi, s);
    b.psi = integrate_pencil_ode(Side::Left, p, rho, I, -robin(rho, p.H1, p.H0), kPi, 0.0, s);
    const Mat U_psi = boundary_form(BoundaryKind::UStar, p, rho, b.psi.value.front(), b.psi.deriv.front());
    check_conditioning("U*(psi*)", boundary_condition(U_psi, b.psi.value.front(), b.psi.deriv.front(),
                                                      robin(rho, p.h1, p.h0), rho));
    b.Phi = b.psi.times_left(inverse(U_psi));
    b.M = b.Phi.value.front();
    const Trajectory alt = b.S + b.phi.times_left(b.M);
    for (std::size_t i = 0; i < alt.size(); ++i) {
        const double sc = 1.0 + std::max(norm(b.S.value[i]), norm(b.M) * norm(b.phi.value[i]));
        b.consistency_gap = std::max(b.consistency_gap, norm(b.Phi.value[i] - alt.value[i]) / sc);
    }
    return b;
}

cplx char_function(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const auto phi = integrate_pencil_ode(Side::Right, p, rho, eye(p.m), -robin(rho, p.h1, p.h0), 0.0, kPi, kAtPi, s);
    return boundary_form(BoundaryKind::V, p, rho, phi.value.back(), phi.deriv.back()).determinant();
}

cplx char_function_U(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const auto psi = integrate_pencil_ode(Side::Right, p, rho, eye(p.m), -robin(rho, p.H1, p.H0), kPi, 0.0, kAtZero, s);
    return boundary_form(BoundaryKind::U, p, rho, psi.value.front(), psi.deriv.front()).determinant();
}

double block_inverse_residual(const Trajectory& phi, const Trajectory& Phi, const AdjointBundle& adj) {
    if (phi.size() != Phi.size() || phi.size() != adj.phi.size() || phi.size() != adj.Phi.size())
        throw ValidationError("block identity: trajectories must share a grid");
    const auto m = phi.value.front().rows();
    const Mat I2 = eye(2 * m);
    Mat left(2 * m, 2 * m), right(2 * m, 2 * m);
    double worst = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        left << adj.Phi.deriv[i], -adj.Phi.value[i], -adj.phi.deriv[i], adj.phi.value[i];
        right << phi.value[i], Phi.value[i], phi.deriv[i], Phi.deriv[i];
        worst = std::max(worst, norm(left * right - I2));
    }
    return worst;
}

}  // namespace qpencil
