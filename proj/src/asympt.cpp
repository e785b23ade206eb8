#include "qpencil/asympt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "qpencil/errors.hpp"
#include "qpencil/parallel.hpp"

namespace qpencil {

namespace {

constexpr std::array<const char*, 9> kNames{"C", "S", "phi", "psi", "Phi", "M", "phi*", "psi*", "Phi*"};

cplx ipow(cplx base, int e) { return e >= 0 ? std::pow(base, e) : 1.0 / std::pow(base, -e); }

void require_sector(SolutionKind k, Sector s) {
    if (s == Sector::Both)
        throw ValidationError(std::string("kind ") + kind_name(k) + " has only sectorial asymptotics");
}

void require_nu(int nu) {
    if (nu != 0 && nu != 1) throw ValidationError("nu must be 0 or 1");
}

}  // namespace

const char* kind_name(SolutionKind k) { return kNames[static_cast<std::size_t>(k)]; }

SolutionKind kind_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (name == kNames[i]) return static_cast<SolutionKind>(i);
    throw ValidationError("unknown solution kind \"" + name + "\"");
}

Mat predict_leading(SolutionKind kind, const Pencil& p, double x, cplx rho, int nu, Sector sector,
                    const TransportFamily& tf) {
    require_nu(nu);
    if (tf.dim() != p.m) throw ValidationError("transport family dimension mismatch");
    const Mat I = eye(p.m);
    const cplx ir = kI * rho;
    const cplx ep = std::exp(ir * x), em = std::exp(-ir * x);
    const cplx fp = std::exp(ir * (kPi - x)), fm = std::exp(-ir * (kPi - x));
    using T = Transport;
    switch (kind) {
    case SolutionKind::C:
        return 0.5 * ipow(ir, nu) * ep * tf(T::Minus, x) + 0.5 * ipow(-ir, nu) * em * tf(T::Plus, x);
    case SolutionKind::S:
        return 0.5 * ipow(ir, nu - 1) * ep * tf(T::Minus, x) + 0.5 * ipow(-ir, nu - 1) * em * tf(T::Plus, x);
    case SolutionKind::phi: {
        const Mat minus = 0.5 * ipow(ir, nu) * ep * tf(T::Minus, x) * (I - p.h1);
        const Mat plus = 0.5 * ipow(-ir, nu) * em * tf(T::Plus, x) * (I + p.h1);
        return sector == Sector::Both ? Mat(minus + plus) : sector == Sector::Plus ? plus : minus;
    }
    case SolutionKind::psi: {
        const Mat minus = 0.5 * ipow(-ir, nu) * fp * tf(T::MinusBullet, x) * (I + p.H1);
        const Mat plus = 0.5 * ipow(ir, nu) * fm * tf(T::PlusBullet, x) * (I - p.H1);
        return sector == Sector::Both ? Mat(minus + plus) : sector == Sector::Plus ? plus : minus;
    }
    case SolutionKind::Phi:
        require_sector(kind, sector);
        if (sector == Sector::Plus)
            return ipow(ir, nu - 1) * ep * tf(T::PlusBullet, x) * inverse(tf(T::PlusBullet, 0.0)) * inverse(I + p.h1);
        return ipow(-ir, nu - 1) * em * tf(T::MinusBullet, x) * inverse(tf(T::MinusBullet, 0.0)) * inverse(I - p.h1);
    case SolutionKind::M:
        require_sector(kind, sector);
        if (nu != 0) throw ValidationError("M has no derivative");
        return sector == Sector::Plus ? Mat(inverse(I + p.h1) / ir) : Mat(-inverse(I - p.h1) / ir);
    case SolutionKind::phi_star:
        require_sector(kind, sector);
        if (sector == Sector::Plus) return 0.5 * ipow(-ir, nu) * em * (I + p.h1) * tf(T::PlusStar, x);
        return 0.5 * ipow(ir, nu) * ep * (I - p.h1) * tf(T::MinusStar, x);
    case SolutionKind::psi_star:
        require_sector(kind, sector);
        if (sector == Sector::Plus) return 0.5 * ipow(ir, nu) * fm * (I - p.H1) * tf(T::PlusBulletStar, x);
        return 0.5 * ipow(-ir, nu) * fp * (I + p.H1) * tf(T::MinusBulletStar, x);
    case SolutionKind::Phi_star:
        require_sector(kind, sector);
        if (sector == Sector::Plus)
            return ipow(ir, nu - 1) * ep * inverse(I + p.h1) * inverse(tf(T::PlusBulletStar, 0.0)) *
                   tf(T::PlusBulletStar, x);
        return ipow(-ir, nu - 1) * em * inverse(I - p.h1) * inverse(tf(T::MinusBulletStar, 0.0)) *
               tf(T::MinusBulletStar, x);
    }
    throw ValidationError("unknown solution kind");
}

Mat predict_weyl_solution_direct(const Pencil& p, double x, cplx rho, int nu, Sector sector,
                                 const TransportFamily& tf) {
    require_nu(nu);
    require_sector(SolutionKind::Phi, sector);
    const Mat I = eye(p.m);
    const cplx ir = kI * rho;
    if (sector == Sector::Plus) return ipow(ir, nu - 1) * std::exp(ir * x) * tf(Transport::Minus, x) * inverse(I + p.h1);
    return ipow(-ir, nu - 1) * std::exp(-ir * x) * tf(Transport::Plus, x) * inverse(I - p.h1);
}

namespace {

Mat pick(const Trajectory& t, std::size_t i, int nu) { return nu == 0 ? t.value[i] : t.deriv[i]; }

// Solution of the pencil (or left) equation from Cauchy data at `from`, evaluated at x.
std::pair<Mat, Mat> at(Side side, const Pencil& p, cplx rho, const Mat& W0, const Mat& dW0, double from, double x,
                       const IntegrationSettings& s) {
    if (std::abs(x - from) <= 1e-14) return {W0, dW0};
    const std::array<double, 1> out{x};
    const auto tr = integrate_pencil_ode(side, p, rho, W0, dW0, from, x, out, s);
    return {tr.value.front(), tr.deriv.front()};
}

}  // namespace

Mat evaluate_solution(SolutionKind kind, const Pencil& p, double x, cplx rho, int nu, const IntegrationSettings& s) {
    require_nu(nu);
    if (!(x >= 0.0 && x <= kPi)) throw ValidationError("x must lie in [0, pi]");
    const Mat I = eye(p.m), O = zeros(p.m);
    const Mat r0 = kI * rho * p.h1 + p.h0, rpi = kI * rho * p.H1 + p.H0;
    auto choose = [nu](const std::pair<Mat, Mat>& v) { return nu == 0 ? v.first : v.second; };
    switch (kind) {
    case SolutionKind::C: return choose(at(Side::Right, p, rho, I, O, 0.0, x, s));
    case SolutionKind::S: return choose(at(Side::Right, p, rho, O, I, 0.0, x, s));
    case SolutionKind::phi: return choose(at(Side::Right, p, rho, I, -r0, 0.0, x, s));
    case SolutionKind::psi: return choose(at(Side::Right, p, rho, I, -rpi, kPi, x, s));
    case SolutionKind::phi_star: return choose(at(Side::Left, p, rho, I, -r0, 0.0, x, s));
    case SolutionKind::psi_star: return choose(at(Side::Left, p, rho, I, -rpi, kPi, x, s));
    case SolutionKind::M:
        if (nu != 0) throw ValidationError("M has no derivative");
        return weyl_matrix(p, rho, s).M();
    case SolutionKind::Phi:
    case SolutionKind::Phi_star: {
        const Side side = kind == SolutionKind::Phi ? Side::Right : Side::Left;
        std::vector<double> out{0.0};
        if (x > 0.0) out.push_back(x);
        const auto tr = integrate_pencil_ode(side, p, rho, I, -rpi, kPi, 0.0, out, s);
        const std::size_t ix = x > 0.0 ? 1 : 0;
        if (side == Side::Right) {
            const Mat U = boundary_form(BoundaryKind::U, p, rho, tr.value[0], tr.deriv[0]);
            return pick(tr, ix, nu) * inverse(U);
        }
        const Mat U = boundary_form(BoundaryKind::UStar, p, rho, tr.value[0], tr.deriv[0]);
        return inverse(U) * pick(tr, ix, nu);
    }
    }
    throw ValidationError("unknown solution kind");
}

int leading_order(SolutionKind kind, int nu) {
    switch (kind) {
    case SolutionKind::S:
    case SolutionKind::Phi:
    case SolutionKind::Phi_star: return nu - 1;
    case SolutionKind::M: return -1;
    default: return nu;
    }
}

double remainder_scale(SolutionKind kind, double x, cplx rho) {
    const double tau = std::abs(rho.imag());
    switch (kind) {
    case SolutionKind::psi:
    case SolutionKind::psi_star: return std::exp(tau * (kPi - x));
    case SolutionKind::Phi:
    case SolutionKind::Phi_star: return std::exp(-tau * x);
    case SolutionKind::M: return 1.0;
    default: return std::exp(tau * x);
    }
}

DecayFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("log-log fit needs at least two samples");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw ValidationError("log-log fit needs positive samples");
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    DecayFit f;
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw ValidationError("log-log fit needs distinct abscissae");
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double e = std::log(y[k]) - (f.intercept + f.slope * std::log(x[k]));
        ss += e * e;
    }
    f.residual = std::sqrt(ss / n);
    f.moduli = x;
    f.remainders = y;
    return f;
}

DecayFit decay_fit(const std::vector<double>& moduli, std::vector<double> remainders, std::vector<double> noise) {
    if (moduli.size() != remainders.size() || moduli.size() != noise.size())
        throw ValidationError("decay fit: moduli, remainders and noise differ in length");
    bool exact = true;
    for (std::size_t k = 0; k < moduli.size(); ++k) exact = exact && remainders[k] <= noise[k];
    DecayFit f;
    if (exact) {
        f.moduli = moduli;
        f.remainders = std::move(remainders);
        f.exact_to_precision = true;
        f.slope = -std::numeric_limits<double>::infinity();
    } else {
        std::vector<double> positive = remainders;
        for (double& r : positive) r = std::max(r, 1e-300);
        f = fit_log_log(moduli, positive);
    }
    f.noise = std::move(noise);
    return f;
}

DecayFit residual_decay(SolutionKind kind, const Pencil& p, double x, int nu, const SectorRay& ray,
                        const IntegrationSettings& s, const TransportFamily& tf) {
    ray.check();
    if (ray.moduli.size() < 2) throw ValidationError("decay fit needs at least two moduli");
    const Sector sector = ray.sign > 0 ? Sector::Plus : Sector::Minus;
    const auto n = ray.moduli.size();
    std::vector<double> rem(n), noise(n);
    parallel_for(n, s.jobs, [&](std::size_t k) {
        const cplx rho = ray.point(k);
        const Mat computed = evaluate_solution(kind, p, x, rho, nu, s);
        const Mat predicted = predict_leading(kind, p, x, rho, nu, sector, tf);
        const double scale = remainder_scale(kind, x, rho);
        rem[k] = norm(computed - predicted) / scale;
        noise[k] = 10.0 * s.rtol * norm(computed) / scale;
    });
    DecayFit f = decay_fit(ray.moduli, std::move(rem), std::move(noise));
    f.leading = leading_order(kind, nu);
    f.claimed_order = f.leading - 1;
    return f;
}

MuNorms mu_norms(const Pencil& p, cplx rho, const IntegrationSettings& s) {
    const auto C = integrate_pencil_ode(Side::Right, p, rho, eye(p.m), zeros(p.m), 0.0, kPi, s);
    const double tau = std::abs(rho.imag());
    MuNorms mu;
    for (std::size_t i = 0; i < C.size(); ++i) {
        const double w = std::exp(-tau * C.x[i]);
        mu.mu0 = std::max(mu.mu0, w * norm(C.value[i]));
        mu.mu1 = std::max(mu.mu1, w * norm(C.deriv[i]));
    }
    return mu;
}

double theil_sen_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("Theil-Sen needs at least two samples");
    std::vector<double> slopes;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[j] != x[i]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    if (slopes.empty()) throw ValidationError("Theil-Sen needs distinct abscissae");
    const auto mid = slopes.begin() + static_cast<std::ptrdiff_t>(slopes.size() / 2);
    std::nth_element(slopes.begin(), mid, slopes.end());
    if (slopes.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(slopes.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace qpencil
