#pragma once

#include <string>
#include <vector>

#include "qpencil/fundamental.hpp"
#include "qpencil/sector.hpp"

namespace qpencil {

enum class SolutionKind { C, S, phi, psi, Phi, M, phi_star, psi_star, Phi_star };
enum class Sector { Plus, Minus, Both };

const char* kind_name(SolutionKind k);
SolutionKind kind_from_name(const std::string& name);

/**
 * Leading asymptotic term of the kind's nu-th derivative at (x, rho).
 *  - C, S: two-term form, any sector.
 *  - phi, psi: two-term form for Sector::Both, one-term sectorial form otherwise.
 *  - Phi, M, phi*, psi*, Phi*: sectorial forms only.
 * The Weyl solutions use
 *   Theta+: Phi^(nu)  = (i rho)^(nu-1) e^{i rho x} P+.(x) P+.(0)^{-1} (I + h1)^{-1}
 *   Theta-: Phi^(nu)  = (-i rho)^(nu-1) e^{-i rho x} P-.(x) P-.(0)^{-1} (I - h1)^{-1}
 * and the mirrored products for Phi*. M ignores x and requires nu = 0.
 */
Mat predict_leading(SolutionKind kind, const Pencil& p, double x, cplx rho, int nu, Sector sector,
                    const TransportFamily& tf);

// Phi prediction with P+.(x) P+.(0)^{-1} replaced by P-(x) (resp. P-.(x) P-.(0)^{-1} by P+(x)).
Mat predict_weyl_solution_direct(const Pencil& p, double x, cplx rho, int nu, Sector sector,
                                 const TransportFamily& tf);

// Computed nu-th derivative of the kind at x (M: the Weyl matrix itself).
Mat evaluate_solution(SolutionKind kind, const Pencil& p, double x, cplx rho, int nu, const IntegrationSettings& s);

// Exponent of |rho| in the leading term (C: nu, S: nu - 1, Phi: nu - 1, M: -1, ...).
int leading_order(SolutionKind kind, int nu);
// Remainder weight: e^{|tau| x}, e^{|tau| (pi - x)} for psi/psi*, e^{-|tau| x} for Phi/Phi*, 1 for M.
double remainder_scale(SolutionKind kind, double x, cplx rho);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms of the log-log fit
    std::vector<double> moduli;
    std::vector<double> remainders;  // ||computed - predicted|| / scale
    std::vector<double> noise;       // 10 rtol ||computed|| / scale
    bool exact_to_precision = false;
    int claimed_order = 0;  // leading order - 1
    int leading = 0;

    // Passes when exact to precision or slope <= bound.
    bool meets(double bound) const { return exact_to_precision || slope <= bound; }
    bool meets_claim(double band = 0.2) const { return meets(claimed_order + band); }
};

// Least-squares line through (log x, log y); y must be positive.
DecayFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

// Exact to precision when every remainder is at or below its noise level, else a log-log fit.
DecayFit decay_fit(const std::vector<double>& moduli, std::vector<double> remainders, std::vector<double> noise);

DecayFit residual_decay(SolutionKind kind, const Pencil& p, double x, int nu, const SectorRay& ray,
                        const IntegrationSettings& s, const TransportFamily& tf);

struct MuNorms {
    double mu0 = 0.0;
    double mu1 = 0.0;
};

// mu_nu = max_x ||C^(nu)(x, rho)|| e^{-|tau| x}.
MuNorms mu_norms(const Pencil& p, cplx rho, const IntegrationSettings& s);

// Median of pairwise slopes.
double theil_sen_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qpencil
