#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qpencil {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Maximum row sum, ||A|| = max_j sum_k |a_jk|. Used for every matrix norm in the library.
inline double norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

inline Mat eye(Eigen::Index m) { return Mat::Identity(m, m); }
inline Mat zeros(Eigen::Index m) { return Mat::Zero(m, m); }

// Condition number in the row-sum norm; +inf when the LU factorisation is singular.
double condition_number(const Mat& a);

// Inverse via full-pivot LU. Throws NumericalError when the matrix is singular to working precision.
Mat inverse(const Mat& a);

}  // namespace qpencil
