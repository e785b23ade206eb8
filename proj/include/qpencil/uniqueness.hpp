#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpencil/asympt.hpp"
#include "qpencil/spectra.hpp"

namespace qpencil {

// Above this value of max_x ||Lambda(x)|| the two pencils are reported as distinguishable.
inline constexpr double kDistinguishableLambda = 1e-6;

struct PencilPair {
    Pencil L;
    Pencil Lt;  // the tilde pencil
    TransportFamily tf;
    TransportFamily tft;

    // Validates both pencils and their common dimension, then solves both transport families.
    static PencilPair make(Pencil L, Pencil Lt, const IntegrationSettings& s);
};

/**
 * The block matrix P with P [[phi~, Phi~], [phi~', Phi~']] = [[phi, Phi], [phi', Phi']]:
 *   P_j1 = phi^(j-1) Phi~*' - Phi^(j-1) phi~*'
 *   P_j2 = Phi^(j-1) phi~*  - phi^(j-1) Phi~*
 */
struct PBlocks {
    double x = 0.0;
    cplx rho{};
    Mat P11, P12, P21, P22;
    // ||P X~ - X|| / ||X||
    double defining_residual = 0.0;
    // Magnitudes of the products cancelling in P11 and P12, used as noise scales.
    double scale11 = 0.0;
    double scale12 = 0.0;
};

// One integration per solution covers every x in xs. Throws NearEigenvalue when rho is
// close to an eigenvalue of either pencil.
std::vector<PBlocks> block_P(const PencilPair& pair, const std::vector<double>& xs, cplx rho,
                             const IntegrationSettings& s);
PBlocks block_P(const PencilPair& pair, double x, cplx rho, const IntegrationSettings& s);

/**
 * Omega = (P-(x) P~+*(x) + P+(x) P~-*(x)) / 2 and Lambda = (P-(x) P~+*(x) - P+(x) P~-*(x)) / 2i.
 * `residual` is ||Omega' - i (Lambda Q~1 - Q1 Lambda)|| with Omega' from the transport ODEs.
 */
struct OmegaLambda {
    std::vector<double> x;
    std::vector<Mat> Omega;
    std::vector<Mat> Lambda;
    std::vector<double> residual;

    double max_residual() const;
    double max_lambda() const;
    double max_omega_minus_identity() const;
};

OmegaLambda omega_lambda(const PencilPair& pair, const std::vector<double>& xs);
// Uniform grid of n points on [0, pi].
OmegaLambda omega_lambda(const PencilPair& pair, int n = 201);

struct IdentityOptions {
    std::vector<cplx> rhos;     // samples for the inverse identity and M symmetry
    std::vector<double> xs;     // interior abscissae for P; Omega/Lambda also use a fine grid
    std::vector<SectorRay> rays;  // decay fits of P11 - Omega and rho P12 - Lambda
    bool estimate_h1 = true;    // needs one ray of each sign
    int omega_grid_points = 201;
};

struct RayFits {
    int sign = 1;
    double arg = 0.0;
    DecayFit p11;  // max_x ||P11 - Omega||
    DecayFit p12;  // max_x ||rho P12 - Lambda||
};

struct IdentityReport {
    double inverse_identity = 0.0;        // max block-inverse residual, pencil L
    double inverse_identity_tilde = 0.0;  // same for the tilde pencil
    double weyl_symmetry = 0.0;           // max ||M - M*|| over both pencils
    double weyl_gap = 0.0;                // max ||M - M~|| over the samples
    double defining_relation = 0.0;       // max relative ||P X~ - X||
    double omega_at_zero = 0.0;
    double omega_derivative = 0.0;
    double max_omega_minus_identity = 0.0;
    double max_lambda = 0.0;
    bool distinguishable = false;
    std::vector<RayFits> fits;
    std::optional<H1Estimate> h1;
    std::optional<H1Estimate> h1_tilde;
    double h1_gap = 0.0;  // ||h1 - h1~|| between the two estimates

    // Flat (name, value) list in a fixed order.
    std::vector<std::pair<std::string, double>> checks() const;
};

IdentityReport check_identities(const PencilPair& pair, const IdentityOptions& opt, const IntegrationSettings& s);

}  // namespace qpencil
