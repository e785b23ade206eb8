#include "qpencil/linalg.hpp"

#include <limits>

#include "qpencil/errors.hpp"

namespace qpencil {

double condition_number(const Mat& a) {
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    return norm(a) * norm(lu.inverse());
}

Mat inverse(const Mat& a) {
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) throw NumericalError("matrix is singular to working precision");
    return lu.inverse();
}

}  // namespace qpencil
