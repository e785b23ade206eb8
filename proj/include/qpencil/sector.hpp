#pragma once

#include <vector>

#include "qpencil/linalg.hpp"

namespace qpencil {

/**
 * Ray rho = r e^{i arg} inside the sector
 *   Theta+_delta: delta <= arg rho <= pi - delta        (sign = +1)
 *   Theta-_delta: delta <= -arg rho <= pi - delta       (sign = -1)
 * sampled at the listed moduli.
 */
struct SectorRay {
    int sign = +1;
    double delta = kPi / 6;
    double arg = kPi / 2;
    std::vector<double> moduli;

    // Throws ValidationError unless sign is +-1, 0 < delta <= pi/2, arg lies in the sector,
    // and the moduli are increasing and >= 5.
    void check() const;
    cplx point(std::size_t k) const;
    std::vector<cplx> points() const;

    // n moduli log-spaced in [lo, hi].
    static std::vector<double> log_moduli(double lo, double hi, int n);
};

}  // namespace qpencil
