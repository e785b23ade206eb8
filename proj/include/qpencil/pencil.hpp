#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "qpencil/linalg.hpp"

namespace qpencil {

enum class CoefficientKind { Polynomial, Chebyshev, Grid };

/**
 * Matrix-valued coefficient Q(x) on [0, pi].
 *
 * The representation is declared by the caller and never inferred:
 *  - Polynomial: Q(x) = sum_k c_k x^k
 *  - Chebyshev:  Q(x) = sum_k c_k T_k(t), t = 2x/pi - 1
 *  - Grid:       natural cubic spline through (x_i, Q_i); derivatives are those of the spline
 */
class CoefficientFunction {
public:
    CoefficientFunction() = default;

    static CoefficientFunction zero(Eigen::Index m);
    static CoefficientFunction constant(const Mat& value);
    static CoefficientFunction polynomial(std::vector<Mat> coeffs, bool derivative = true);
    static CoefficientFunction chebyshev(std::vector<Mat> coeffs, bool derivative = true);
    static CoefficientFunction grid(std::vector<double> nodes, std::vector<Mat> values,
                                    bool derivative = true);

    // Chebyshev interpolant of f at degree+1 Chebyshev points of [0, pi]; trailing
    // coefficients below 1e-16 relative are dropped.
    static CoefficientFunction chebyshev_fit(const std::function<Mat(double)>& f, Eigen::Index m,
                                             int degree = 32);

    CoefficientKind kind() const { return kind_; }
    Eigen::Index dim() const { return m_; }
    bool has_derivative() const { return derivative_; }

    Mat value(double x) const;
    // Throws ValidationError when the derivative flag is unset.
    Mat derivative(double x) const;

    // Polynomial / Chebyshev coefficients or grid values.
    const std::vector<Mat>& payload() const { return payload_; }
    const std::vector<double>& nodes() const { return nodes_; }

private:
    CoefficientKind kind_ = CoefficientKind::Polynomial;
    Eigen::Index m_ = 0;
    bool derivative_ = true;
    std::vector<Mat> payload_;
    std::vector<Mat> dpayload_;  // derivative series (polynomial / Chebyshev)
    std::vector<double> nodes_;
    std::vector<Mat> second_;  // spline second derivatives at nodes
};

struct Pencil {
    Eigen::Index m = 1;
    CoefficientFunction Q1;
    CoefficientFunction Q0;
    Mat h0, h1, H0, H1;

    static Pencil zero(Eigen::Index m);
};

inline constexpr double kDetEpsilon = 1e-10;

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate_pencil(const Pencil& p);

// Throws ValidationError listing every violation when the pencil is not admissible.
void require_valid(const Pencil& p);

struct CoefficientValues {
    Mat Q1;
    Mat Q0;
    std::optional<Mat> dQ1;
};

CoefficientValues eval_coefficients(const Pencil& p, double x);

enum class BoundaryKind { U, V, UStar, VStar };

/**
 * Linear boundary forms. W, dW are the solution value and x-derivative at the endpoint
 * belonging to the kind (0 for U / U*, pi for V / V*).
 *   U : dW + (i rho h1 + h0) W      U*: dW + W (i rho h1 + h0)
 *   V : dW + (i rho H1 + H0) W      V*: dW + W (i rho H1 + H0)
 */
Mat boundary_form(BoundaryKind kind, const Pencil& p, cplx rho, const Mat& W, const Mat& dW);

// ---- configuration files --------------------------------------------------------------

Pencil pencil_from_json(const nlohmann::json& doc);
nlohmann::json pencil_to_json(const Pencil& p);
Pencil load_pencil(const std::string& path);
void save_pencil(const Pencil& p, const std::string& path);

nlohmann::json matrix_to_json(const Mat& a);
Mat matrix_from_json(const nlohmann::json& j, Eigen::Index m);

// ---- random admissible pencils for property suites ------------------------------------

struct RandomPencilOptions {
    Eigen::Index m = 2;
    int trig_degree = 3;
    double q1_bound = 2.0;  // sup_x ||Q1(x)||
    double q0_bound = 2.0;  // sup_x ||Q0(x)||
    double h1_bound = 0.5;  // ||h1||, ||H1|| (keeps I +- h1 invertible)
    double h0_bound = 1.0;  // ||h0||, ||H0||
};

/**
 * Random trigonometric-polynomial coefficients
 *   Q(x) = A_0 + sum_{k=1}^{d} (A_k cos kx + B_k sin kx),
 * rescaled to a random fraction in [0.5, 1] of the requested sup-norm bound and stored
 * as a Chebyshev series. Same seed, same pencil.
 */
Pencil random_pencil(std::uint64_t seed, const RandomPencilOptions& opt = {});

}  // namespace qpencil
