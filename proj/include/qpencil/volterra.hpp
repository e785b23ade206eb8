#pragma once

#include <vector>

#include "qpencil/matode.hpp"

namespace qpencil {

inline constexpr double kVolterraRhoMin = 1.0;

/**
 * Exponential-transport reference solutions at (x, rho):
 *   C0  = 1/2 e^{i rho x} P-(x)  + 1/2 e^{-i rho x} P+(x)
 *   S0  = (2 i rho)^{-1} (e^{i rho x} P-(x) - e^{-i rho x} P+(x))
 * and the starred pair built from P-*, P+*. Derivatives are exact, from the transport ODEs.
 */
struct ReferenceSolutions {
    Mat C0, dC0, S0, dS0;
    Mat C0s, dC0s, S0s, dS0s;
};

ReferenceSolutions birkhoff_reference(const Pencil& p, cplx rho, double x, const TransportFamily& tf);

// F = Q1'(x) (i rho I - Q1(x))^{-1} Y' - (Q1(x)^2 + Q0(x)) Y
Mat forcing_F(const Pencil& p, cplx rho, double x, const Mat& Y, const Mat& dY);

enum class FundamentalKind { C, S };

struct PicardState {
    int iterations = 0;
    // Successive difference sup_x e^{-|Im rho| x} (||dY|| + ||dY'|| / |rho|) of the last step.
    double difference = 0.0;
    std::vector<double> history;
};

struct PicardResult {
    Trajectory trajectory;  // on the panel end points
    PicardState state;
};

struct PicardOptions {
    double tol = 1e-12;
    int max_iter = 200;
    int nodes_per_panel = 16;
    // Panel count is max(min_panels, panels_per_rho * |rho|).
    int min_panels = 32;
    double panels_per_rho = 4.0;
};

/**
 * Picard iteration for the Volterra equation of C (or S) on [0, pi]:
 *   Y = Y0 + 1/2 int_0^x {e^{i rho (x-t)} P-(x) P+*(t) - e^{-i rho (x-t)} P+(x) P-*(t)} G(t) dt,
 *   G = (i rho I - Q1)^{-1} F(t, rho, Y),
 * with Y0 = C0 or S0 (I - Q1(0)/(i rho))^{-1}. Y' comes from the differentiated equation.
 * Throws NonConvergence after max_iter iterations.
 */
PicardResult picard_solve(const Pencil& p, cplx rho, FundamentalKind which, const TransportFamily& tf,
                          const PicardOptions& opt = {});

// Panel end points used by picard_solve for this rho (useful to align other solvers' output).
std::vector<double> picard_grid(cplx rho, const PicardOptions& opt = {});

}  // namespace qpencil
