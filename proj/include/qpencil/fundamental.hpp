#pragma once

#include <utility>

#include "qpencil/matode.hpp"

namespace qpencil {

// Above this condition number of U(psi) or V(phi), rho is treated as an eigenvalue. The
// condition number of a form W' + R W is max(cond(B), ||B^{-1}|| (||W'|| + (1 + |rho| + ||R||) ||W||)).
inline constexpr double kNearEigenvalueCond = 1e8;

struct FundamentalSystem {
    Trajectory C;  // C(0) = I, C'(0) = 0
    Trajectory S;  // S(0) = 0, S'(0) = I
};

FundamentalSystem fundamental_CS(const Pencil& p, cplx rho, const IntegrationSettings& s);

// phi(0) = I, U(phi) = 0.
Trajectory solution_phi(const Pencil& p, cplx rho, const IntegrationSettings& s);
// psi(pi) = I, V(psi) = 0; integrated from pi towards 0.
Trajectory solution_psi(const Pencil& p, cplx rho, const IntegrationSettings& s);

// sup_x ||phi - (C - S (i rho h1 + h0))||, relative to 1 + sup ||phi||.
double phi_expansion_gap(const Pencil& p, cplx rho, const IntegrationSettings& s);

struct WeylEvaluation {
    cplx rho{};
    Mat M_via_psi;  // psi(0) U(psi)^{-1}
    Mat M_via_phi;  // -V(phi)^{-1} V(S)
    double discrepancy = 0.0;
    double cond_U_psi = 0.0;  // see kNearEigenvalueCond
    double cond_V_phi = 0.0;

    const Mat& M() const { return M_via_psi; }
};

// Both routes are always computed. Throws NearEigenvalue if either U(psi) or V(phi) has
// condition number above kNearEigenvalueCond.
WeylEvaluation weyl_matrix(const Pencil& p, cplx rho, const IntegrationSettings& s);

/**
 * Weyl solution Phi = psi U(psi)^{-1}, so U(Phi) = I and V(Phi) = 0. Its value at 0 is M.
 * The alternative form S + phi M agrees algebraically but loses accuracy when |Im rho| is
 * large, because S and phi M are both exponentially larger than Phi.
 */
Trajectory weyl_solution(const Pencil& p, cplx rho, const IntegrationSettings& s);

// S + phi M, assembled from the fundamental system.
Trajectory weyl_solution_from_phi(const Pencil& p, cplx rho, const IntegrationSettings& s);

struct AdjointBundle {
    Trajectory phi;  // phi*(0) = I, U*(phi*) = 0
    Trajectory S;    // S*(0) = 0, S*'(0) = I
    Trajectory psi;  // psi*(pi) = I, V*(psi*) = 0
    Trajectory Phi;  // U*(psi*)^{-1} psi*
    Mat M;           // Phi*(0)
    // sup_x ||Phi* - (S* + M* phi*)|| relative to the larger of the two terms.
    double consistency_gap = 0.0;
};

AdjointBundle adjoint_solutions(const Pencil& p, cplx rho, const IntegrationSettings& s);

// Delta(rho) = det V(phi). Only phi(pi), phi'(pi) are computed.
cplx char_function(const Pencil& p, cplx rho, const IntegrationSettings& s);
// det U(psi), whose zeros coincide with those of Delta.
cplx char_function_U(const Pencil& p, cplx rho, const IntegrationSettings& s);

/**
 * Residual of the block identity
 *   [[Phi*', -Phi*], [-phi*', phi*]] [[phi, Phi], [phi', Phi']] = I
 * maximised over the trajectory grid.
 */
double block_inverse_residual(const Trajectory& phi, const Trajectory& Phi, const AdjointBundle& adj);

}  // namespace qpencil
