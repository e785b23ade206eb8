#include "qpencil/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "qpencil/errors.hpp"

namespace qpencil {

namespace {

using State = AdaptiveIntegrator::State;
using Stepper = boost::numeric::odeint::runge_kutta_fehlberg78<State, double, State, double>;

constexpr double kSafety = 0.9;
constexpr double kMinShrink = 0.2;
constexpr double kMaxGrow = 5.0;
// Error exponent for the 7th-order embedded estimate.
constexpr double kExponent = 1.0 / 8.0;

double max_abs(const State& y, std::size_t lo, std::size_t hi) {
    double m = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double a = std::abs(y[i]);
        if (!std::isfinite(a)) return std::numeric_limits<double>::infinity();
        m = std::max(m, a);
    }
    return m;
}

}  // namespace

AdaptiveIntegrator::AdaptiveIntegrator(Options opt) : opt_(std::move(opt)) {
    if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0)) throw ValidationError("integrator tolerances must be positive");
    if (!(opt_.max_step > 0.0)) throw ValidationError("integrator step cap must be positive");
}

double AdaptiveIntegrator::error_norm(const State& y, const State& ynew, const State& err) const {
    double worst = 0.0;
    std::size_t lo = 0;
    auto block = [&](std::size_t hi) {
        const double sc = opt_.atol + opt_.rtol * std::max(max_abs(y, lo, hi), max_abs(ynew, lo, hi));
        const double e = max_abs(err, lo, hi) / sc;
        if (!std::isfinite(e) || !std::isfinite(sc)) worst = std::numeric_limits<double>::infinity();
        worst = std::max(worst, e);
        lo = hi;
    };
    if (opt_.blocks.empty()) {
        block(y.size());
    } else {
        for (std::size_t b : opt_.blocks) block(lo + b);
        if (lo != y.size()) throw ValidationError("integrator block sizes do not match state size");
    }
    return worst;
}

std::vector<State> AdaptiveIntegrator::integrate(const System& f, State y, double from, double to,
                                                 const std::vector<double>& outputs, StepStats* stats) const {
    // Backward problems run forward in s = -x.
    const double sign = to >= from ? 1.0 : -1.0;
    auto rhs = [&](const State& u, State& du, double s) {
        f(sign * s, u, du);
        if (sign < 0.0)
            for (auto& v : du) v = -v;
    };
    const double s_end = sign * to;

    Stepper stepper;
    State ynew(y.size()), err(y.size());
    std::vector<State> recorded;
    recorded.reserve(outputs.size());

    double s = sign * from;
    double h = opt_.max_step;
    for (double target_x : outputs) {
        const double target = sign * target_x;
        if (target < s - 1e-12 * (1.0 + std::abs(s)) || target > s_end + 1e-12 * (1.0 + std::abs(s_end)))
            throw ValidationError("integrator output point outside the integration segment or out of order");
        while (s < target) {
            const double remaining = target - s;
            const bool last = h >= remaining * (1.0 - 1e-12);
            const double step = last ? remaining : h;
            stepper.do_step(rhs, y, s, ynew, step, err);
            const double e = error_norm(y, ynew, err);
            if (e <= 1.0) {
                s = last ? target : s + step;
                y.swap(ynew);
                if (stats) ++stats->accepted;
                const double grow = e > 0.0 ? std::min(kMaxGrow, kSafety * std::pow(e, -kExponent)) : kMaxGrow;
                h = std::min(opt_.max_step, std::max(h, step * grow));
            } else {
                if (stats) ++stats->rejected;
                const double shrink = std::isfinite(e) ? std::max(kMinShrink, kSafety * std::pow(e, -kExponent))
                                                       : kMinShrink;
                h = step * shrink;
                if (h < 1e-13 * (1.0 + std::abs(s))) throw StepUnderflow(sign * s, h);
            }
        }
        recorded.push_back(y);
    }
    return recorded;
}

}  // namespace qpencil
