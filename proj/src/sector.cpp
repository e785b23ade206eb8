#include "qpencil/sector.hpp"

#include <cmath>

#include "qpencil/errors.hpp"

namespace qpencil {

void SectorRay::check() const {
    if (sign != 1 && sign != -1) throw ValidationError("sector sign must be + or -");
    if (!(delta > 0.0 && delta <= kPi / 2)) throw ValidationError("sector delta must lie in (0, pi/2]");
    const double a = sign * arg;
    constexpr double slack = 1e-12;
    if (!(a >= delta - slack && a <= kPi - delta + slack))
        throw ValidationError("ray argument " + std::to_string(arg) + " lies outside the sector");
    if (moduli.empty()) throw ValidationError("ray needs at least one modulus");
    for (std::size_t k = 0; k < moduli.size(); ++k) {
        if (!(moduli[k] >= 5.0)) throw ValidationError("ray moduli must be >= 5");
        if (k > 0 && !(moduli[k] > moduli[k - 1])) throw ValidationError("ray moduli must increase");
    }
}

cplx SectorRay::point(std::size_t k) const { return std::polar(moduli.at(k), arg); }

std::vector<cplx> SectorRay::points() const {
    std::vector<cplx> out;
    for (std::size_t k = 0; k < moduli.size(); ++k) out.push_back(point(k));
    return out;
}

std::vector<double> SectorRay::log_moduli(double lo, double hi, int n) {
    if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw ValidationError("invalid modulus range");
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1));
    out.back() = hi;
    return out;
}

}  // namespace qpencil
