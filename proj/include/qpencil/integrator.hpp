#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace qpencil {

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

/**
 * Adaptive explicit Runge-Kutta integration of y' = f(x, y) for a flat complex state.
 *
 * Steps use the Fehlberg 7(8) embedded pair. The local error is measured block by block:
 * each block b contributes max_i |err_i| / (atol + rtol * max(|y_b|_inf, |y_b,new|_inf)),
 * so a block holding Y' is controlled relative to its own size rather than to |Y|.
 *
 * When `to < from` the independent variable is negated and the problem integrated forward.
 * `outputs` lists the abscissae to record, ordered from `from` towards `to`; the integrator
 * lands on each exactly. Throws StepUnderflow when the step size collapses.
 */
class AdaptiveIntegrator {
public:
    using State = std::vector<std::complex<double>>;
    using System = std::function<void(double x, const State& y, State& dy)>;

    struct Options {
        double rtol = 1e-10;
        double atol = 1e-12;
        double max_step = 0.5;
        std::vector<std::size_t> blocks;  // block sizes; empty = one block
    };

    explicit AdaptiveIntegrator(Options opt);

    std::vector<State> integrate(const System& f, State y0, double from, double to,
                                 const std::vector<double>& outputs, StepStats* stats = nullptr) const;

private:
    double error_norm(const State& y, const State& ynew, const State& err) const;

    Options opt_;
};

}  // namespace qpencil
