#pragma once

#include <array>
#include <span>
#include <vector>

#include "qpencil/integrator.hpp"
#include "qpencil/linalg.hpp"
#include "qpencil/pencil.hpp"

namespace qpencil {

enum class Side { Right, Left };
enum class Direction { Forward, Backward };

struct IntegrationSettings {
    double rtol = 1e-10;
    double atol = 1e-12;
    // Maximum step is step_cap / (1 + |rho|) so that e^{+-i rho x} stays resolved.
    double step_cap = 0.5;
    int grid_points = 200;
    // Explicit output abscissae; overrides grid_points when non-empty.
    std::vector<double> output_grid;
    int transport_grid_points = 1025;
    // Worker threads for independent evaluations (contour nodes, rho sweeps).
    unsigned jobs = 1;

    void check() const;
    double max_step(cplx rho) const { return step_cap / (1.0 + std::abs(rho)); }
    // Ascending output abscissae covering [min(from,to), max(from,to)], endpoints included.
    std::vector<double> grid(double from, double to) const;
};

/**
 * Matrix solution sampled on an ascending x-grid. `second` holds the second derivative
 * taken from the differential equation, which lets value_at/deriv_at interpolate
 * between nodes with quintic Hermite accuracy.
 */
struct Trajectory {
    std::vector<double> x;
    std::vector<Mat> value;
    std::vector<Mat> deriv;
    std::vector<Mat> second;
    Direction direction = Direction::Forward;
    Side side = Side::Right;
    cplx rho{};

    std::size_t size() const { return x.size(); }
    // Index of the node equal to xq (within 1e-12), or -1.
    std::ptrdiff_t find(double xq) const;
    Mat value_at(double xq) const;
    Mat deriv_at(double xq) const;
    const Mat& front_value() const { return value.front(); }

    Trajectory times_right(const Mat& b) const;
    Trajectory times_left(const Mat& a) const;
};

// Sum of two trajectories on the same grid.
Trajectory operator+(const Trajectory& a, const Trajectory& b);
Trajectory operator-(const Trajectory& a, const Trajectory& b);

/**
 * Right side: Y'' = -(rho^2 I + 2 i rho Q1 + Q0) Y.
 * Left side:  Z'' = -Z (rho^2 I + 2 i rho Q1 + Q0).
 * Initial data (W0, dW0) is imposed at `from`; the trajectory covers the segment between
 * `from` and `to` on the settings' grid.
 */
Trajectory integrate_pencil_ode(Side side, const Pencil& p, cplx rho, const Mat& W0, const Mat& dW0,
                                double from, double to, const IntegrationSettings& s);

// Same, recording only the listed abscissae (which must lie in the segment).
Trajectory integrate_pencil_ode(Side side, const Pencil& p, cplx rho, const Mat& W0, const Mat& dW0,
                                double from, double to, std::span<const double> outputs,
                                const IntegrationSettings& s);

enum class Transport {
    Plus,             // P+'  =  Q1 P+,       P+(0)  = I
    Minus,            // P-'  = -Q1 P-,       P-(0)  = I
    PlusStar,         // P+*' =  P+* Q1,      P+*(0) = I
    MinusStar,        // P-*' = -P-* Q1,      P-*(0) = I
    PlusBullet,       // P+.' = -Q1 P+.,      P+.(pi) = I
    MinusBullet,      // P-.' =  Q1 P-.,      P-.(pi) = I
    PlusBulletStar,   // P+.*' = -P+.* Q1,    P+.*(pi) = I
    MinusBulletStar,  // P-.*' =  P-.* Q1,    P-.*(pi) = I
};

inline constexpr std::array<Transport, 8> kAllTransports = {
    Transport::Plus,       Transport::Minus,       Transport::PlusStar,       Transport::MinusStar,
    Transport::PlusBullet, Transport::MinusBullet, Transport::PlusBulletStar, Transport::MinusBulletStar};

const char* transport_name(Transport t);

/**
 * The eight rho-independent transport matrices, sampled on a fine uniform grid and
 * evaluated elsewhere by cubic Hermite interpolation (derivatives come from the ODEs).
 */
class TransportFamily {
public:
    TransportFamily() = default;

    Mat operator()(Transport t, double x) const;
    Mat derivative(Transport t, double x) const;
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<Mat>& samples(Transport t) const { return values_[index(t)]; }
    Eigen::Index dim() const { return m_; }

private:
    friend TransportFamily solve_transport(const Pencil& p, const IntegrationSettings& s);
    static std::size_t index(Transport t) { return static_cast<std::size_t>(t); }

    Eigen::Index m_ = 0;
    std::vector<double> grid_;
    CoefficientFunction q1_;
    std::array<std::vector<Mat>, 8> values_;
};

TransportFamily solve_transport(const Pencil& p, const IntegrationSettings& s);

struct BracketResult {
    std::vector<double> x;
    std::vector<Mat> values;  // <Z, Y>(x) = Z'(x) Y(x) - Z(x) Y'(x)
    double max_deviation = 0.0;  // max_x ||<Z,Y>(x) - <Z,Y>(x_0)||
    double max_norm = 0.0;       // max_x ||<Z,Y>(x)||
    double scale = 0.0;          // max_x (||Z'|| ||Y|| + ||Z|| ||Y'||), the cancellation scale
};

// Z must be a left-side and Y a right-side trajectory at the same rho. Grids that differ are
// merged over their overlap and both trajectories interpolated onto the merged grid.
BracketResult bracket(const Trajectory& Z, const Trajectory& Y);

}  // namespace qpencil
