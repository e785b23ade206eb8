#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "qpencil/fundamental.hpp"
#include "qpencil/sector.hpp"

namespace qpencil {

struct Circle {
    cplx center{};
    double radius = 1.0;
};

struct Rectangle {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

// Closed positively oriented contour with an initial node count (N >= 64).
struct Contour {
    std::variant<Circle, Rectangle> shape;
    int nodes = 256;

    static Contour circle(cplx center, double radius, int nodes = 256);
    static Contour rectangle(double x0, double x1, double y0, double y1, int nodes = 256);

    void check() const;
    // Counter-clockwise nodes; refinement level k has 2^k times the base count and contains
    // the nodes of level k-1 at even positions.
    std::vector<cplx> points(int level) const;
};

struct SpectralRecord {
    cplx rho{};
    int multiplicity = 0;
    std::vector<Mat> residues;
    double residual = 0.0;     // |Delta(rho)| after refinement
    double contour_max = 0.0;  // max |Delta| on the isolating contour
    bool cluster = false;      // unresolved below the minimum cell size
};

// Any scalar function of rho whose zeros are to be counted (Delta by default).
using ScalarFunction = std::function<cplx(cplx)>;

struct ZeroCount {
    int count = 0;
    int nodes = 0;
    double min_abs = 0.0;
    double max_abs = 0.0;
};

/**
 * Winding number of f along c by phase accumulation. Nodes are doubled until two
 * consecutive counts agree and, between neighbouring nodes, both the phase increment and
 * |log(|f_{k+1}| / |f_k|)| are below pi/2. Throws ZeroOnContour
 * when min |f| < 1e-8 max |f| on the nodes.
 */
ZeroCount count_zeros(const ScalarFunction& f, const Contour& c, unsigned jobs = 1);
int count_zeros(const Pencil& p, const Contour& c, const IntegrationSettings& s);

struct LocateOptions {
    double min_cell = 1e-6;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    int contour_nodes = 64;
    double jitter = 1e-6;
    // A cell holding k > 1 zeros becomes one zero of multiplicity k when the k-fold Newton
    // iteration converges and a circle of this radius (times max(1, |z|)) around the result
    // still winds k times.
    double merge_radius = 1e-4;
};

/**
 * Zeros of f in the rectangle by recursive bisection until each cell holds at most one zero,
 * followed by Newton refinement (central-difference derivative). Multiplicities come from the
 * argument principle. Coincident zeros are detected as described at merge_radius; cells that
 * still hold several zeros at size min_cell are reported as one cluster record with the summed
 * multiplicity.
 */
std::vector<SpectralRecord> locate_zeros(const ScalarFunction& f, const Rectangle& region, unsigned jobs = 1,
                                         const LocateOptions& opt = {});
std::vector<SpectralRecord> locate_eigenvalues(const Pencil& p, const Rectangle& region,
                                               const IntegrationSettings& s, const LocateOptions& opt = {});

/**
 * M_{n nu} = (2 pi i)^{-1} \oint M(rho) (rho - rho_n)^{nu - 1} d rho, nu = 1..m_n, on the circle
 * |rho - rho_n| = radius by the trapezoidal rule, doubling the node count until the largest
 * change is below 1e-8. Requires the circle to isolate a zero of multiplicity m_n <= 3.
 */
std::vector<Mat> residue_matrices(const Pencil& p, cplx rho_n, int multiplicity, double radius,
                                  const IntegrationSettings& s);

struct H1Estimate {
    Mat h1;          // mean of the two one-sided estimates
    Mat h1_plus;     // from i rho M -> (I + h1)^{-1} on the Theta+ ray
    Mat h1_minus;    // from -i rho M -> (I - h1)^{-1} on the Theta- ray
    double gap = 0.0;  // ||h1_plus - h1_minus||
    Mat limit_plus, limit_minus;
    std::vector<double> remainder_plus, remainder_minus;  // ||A(r) - A_inf|| per modulus
};

/**
 * Extrapolates A(r) = A_inf + B/r + C/r^2 by least squares over the ray moduli (as many terms
 * as moduli allow, at most three). Throws NonConvergence when the remainders do not decay.
 */
H1Estimate estimate_h1_from_M(const Pencil& p, const SectorRay& ray_plus, const SectorRay& ray_minus,
                              const IntegrationSettings& s);

}  // namespace qpencil
