#include "qpencil/matode.hpp"

#include <algorithm>
#include <cmath>

#include "qpencil/errors.hpp"

namespace qpencil {

void IntegrationSettings::check() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ValidationError("integration tolerances must be positive");
    if (!(step_cap > 0.0)) throw ValidationError("step cap must be positive");
    if (output_grid.empty() && grid_points < 2) throw ValidationError("grid_points must be at least 2");
    if (transport_grid_points < 2) throw ValidationError("transport_grid_points must be at least 2");
}

std::vector<double> IntegrationSettings::grid(double from, double to) const {
    const double lo = std::min(from, to);
    const double hi = std::max(from, to);
    std::vector<double> g;
    if (output_grid.empty()) {
        const int n = std::max(grid_points, 2);
        g.reserve(n);
        for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
        g.back() = hi;
        return g;
    }
    g.push_back(lo);
    for (double v : output_grid)
        if (v > lo && v < hi) g.push_back(v);
    g.push_back(hi);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(), [](double a, double b) { return std::abs(a - b) <= 1e-14; }), g.end());
    return g;
}

// ---- Trajectory ---------------------------------------------------------------------

std::ptrdiff_t Trajectory::find(double xq) const {
    const auto it = std::lower_bound(x.begin(), x.end(), xq - 1e-12);
    if (it != x.end() && std::abs(*it - xq) <= 1e-12) return it - x.begin();
    return -1;
}

namespace {

struct Bracketing {
    std::size_t i;
    double h;
    double t;
};

Bracketing locate(const std::vector<double>& xs, double xq) {
    if (xs.size() < 2 || xq < xs.front() - 1e-12 || xq > xs.back() + 1e-12)
        throw ValidationError("interpolation point " + std::to_string(xq) + " outside trajectory grid");
    const auto it = std::upper_bound(xs.begin(), xs.end(), xq);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin() - 1, 0));
    i = std::min(i, xs.size() - 2);
    const double h = xs[i + 1] - xs[i];
    return {i, h, (xq - xs[i]) / h};
}

}  // namespace

Mat Trajectory::value_at(double xq) const {
    if (const auto k = find(xq); k >= 0) return value[k];
    const auto [i, h, t] = locate(x, xq);
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    const double h3 = 0.5 * t3 - t4 + 0.5 * t5;
    const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
    return h0 * value[i] + (h * h1) * deriv[i] + (h * h * h2) * second[i] + (h * h * h3) * second[i + 1] +
           (h * h4) * deriv[i + 1] + h5 * value[i + 1];
}

Mat Trajectory::deriv_at(double xq) const {
    if (const auto k = find(xq); k >= 0) return deriv[k];
    const auto [i, h, t] = locate(x, xq);
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double d0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double d2 = t - 4.5 * t2 + 6 * t3 - 2.5 * t4;
    const double d3 = 1.5 * t2 - 4 * t3 + 2.5 * t4;
    const double d4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double d5 = 30 * t2 - 60 * t3 + 30 * t4;
    return (d0 / h) * value[i] + d1 * deriv[i] + (h * d2) * second[i] + (h * d3) * second[i + 1] +
           d4 * deriv[i + 1] + (d5 / h) * value[i + 1];
}

Trajectory Trajectory::times_right(const Mat& b) const {
    Trajectory r = *this;
    for (std::size_t i = 0; i < size(); ++i) {
        r.value[i] = value[i] * b;
        r.deriv[i] = deriv[i] * b;
        r.second[i] = second[i] * b;
    }
    return r;
}

Trajectory Trajectory::times_left(const Mat& a) const {
    Trajectory r = *this;
    for (std::size_t i = 0; i < size(); ++i) {
        r.value[i] = a * value[i];
        r.deriv[i] = a * deriv[i];
        r.second[i] = a * second[i];
    }
    return r;
}

namespace {

Trajectory combine(const Trajectory& a, const Trajectory& b, double sb) {
    if (a.size() != b.size() || a.side != b.side || a.rho != b.rho)
        throw ValidationError("trajectory sum: grids, sides or rho differ");
    Trajectory r = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.x[i] - b.x[i]) > 1e-14) throw ValidationError("trajectory sum: grids differ");
        r.value[i] += sb * b.value[i];
        r.deriv[i] += sb * b.deriv[i];
        r.second[i] += sb * b.second[i];
    }
    return r;
}

}  // namespace

Trajectory operator+(const Trajectory& a, const Trajectory& b) { return combine(a, b, 1.0); }
Trajectory operator-(const Trajectory& a, const Trajectory& b) { return combine(a, b, -1.0); }

// ---- pencil equation ----------------------------------------------------------------

namespace {

using State = AdaptiveIntegrator::State;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;

// A(x) = rho^2 I + 2 i rho Q1(x) + Q0(x)
Mat symbol(const Pencil& p, cplx rho, double x) {
    Mat a = (2.0 * kI * rho) * p.Q1.value(x) + p.Q0.value(x);
    a.diagonal().array() += rho * rho;
    return a;
}

}  // namespace

Trajectory integrate_pencil_ode(Side side, const Pencil& p, cplx rho, const Mat& W0, const Mat& dW0,
                                double from, double to, const IntegrationSettings& s) {
    const auto g = s.grid(from, to);
    return integrate_pencil_ode(side, p, rho, W0, dW0, from, to, g, s);
}

Trajectory integrate_pencil_ode(Side side, const Pencil& p, cplx rho, const Mat& W0, const Mat& dW0,
                                double from, double to, std::span<const double> outputs,
                                const IntegrationSettings& s) {
    s.check();
    if (!std::isfinite(rho.real()) || !std::isfinite(rho.imag())) throw ValidationError("rho must be finite");
    if (from == to) throw ValidationError("integration segment is empty");
    if (from < 0.0 || from > kPi || to < 0.0 || to > kPi) throw ValidationError("integration segment outside [0, pi]");
    require_valid(p);
    const auto m = p.m;
    if (W0.rows() != m || W0.cols() != m || dW0.rows() != m || dW0.cols() != m)
        throw ValidationError("initial data dimension mismatch");

    std::vector<double> xs(outputs.begin(), outputs.end());
    std::sort(xs.begin(), xs.end());
    const bool backward = to < from;
    std::vector<double> order = xs;
    if (backward) std::reverse(order.begin(), order.end());

    const auto mm = static_cast<std::size_t>(m * m);
    State y0(2 * mm);
    MapM(y0.data(), m, m) = W0;
    MapM(y0.data() + mm, m, m) = dW0;

    auto rhs = [&](double x, const State& y, State& dy) {
        const CMapM Y(y.data(), m, m);
        const CMapM dY(y.data() + mm, m, m);
        MapM(dy.data(), m, m) = dY;
        const Mat a = symbol(p, rho, x);
        if (side == Side::Right)
            MapM(dy.data() + mm, m, m).noalias() = -a * Y;
        else
            MapM(dy.data() + mm, m, m).noalias() = -Y * a;
    };

    AdaptiveIntegrator integ({s.rtol, s.atol, s.max_step(rho), {mm, mm}});
    const auto states = integ.integrate(rhs, std::move(y0), from, to, order);

    Trajectory tr;
    tr.direction = backward ? Direction::Backward : Direction::Forward;
    tr.side = side;
    tr.rho = rho;
    tr.x = xs;
    const std::size_t n = xs.size();
    tr.value.resize(n);
    tr.deriv.resize(n);
    tr.second.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = backward ? n - 1 - k : k;
        const auto& st = states[k];
        tr.value[i] = CMapM(st.data(), m, m);
        tr.deriv[i] = CMapM(st.data() + mm, m, m);
        const Mat a = symbol(p, rho, tr.x[i]);
        tr.second[i] = side == Side::Right ? Mat(-a * tr.value[i]) : Mat(-tr.value[i] * a);
    }
    return tr;
}

// ---- transport ----------------------------------------------------------------------

const char* transport_name(Transport t) {
    switch (t) {
    case Transport::Plus: return "P+";
    case Transport::Minus: return "P-";
    case Transport::PlusStar: return "P+*";
    case Transport::MinusStar: return "P-*";
    case Transport::PlusBullet: return "P+.";
    case Transport::MinusBullet: return "P-.";
    case Transport::PlusBulletStar: return "P+.*";
    case Transport::MinusBulletStar: return "P-.*";
    }
    return "?";
}

namespace {

struct TransportLayout {
    double sign;   // P' = sign * Q1 P (or P Q1)
    bool left;     // starred family multiplies Q1 from the right
    bool at_pi;    // bullet family is anchored at pi
};

TransportLayout layout_of(Transport t) {
    switch (t) {
    case Transport::Plus: return {1.0, false, false};
    case Transport::Minus: return {-1.0, false, false};
    case Transport::PlusStar: return {1.0, true, false};
    case Transport::MinusStar: return {-1.0, true, false};
    case Transport::PlusBullet: return {-1.0, false, true};
    case Transport::MinusBullet: return {1.0, false, true};
    case Transport::PlusBulletStar: return {-1.0, true, true};
    case Transport::MinusBulletStar: return {1.0, true, true};
    }
    return {};
}

}  // namespace

TransportFamily solve_transport(const Pencil& p, const IntegrationSettings& s) {
    s.check();
    require_valid(p);
    const auto m = p.m;
    const auto mm = static_cast<std::size_t>(m * m);

    TransportFamily tf;
    tf.m_ = m;
    tf.q1_ = p.Q1;
    const int n = s.transport_grid_points;
    tf.grid_.resize(n);
    for (int i = 0; i < n; ++i) tf.grid_[i] = kPi * i / (n - 1);
    tf.grid_.back() = kPi;

    AdaptiveIntegrator integ({s.rtol, s.atol, s.step_cap, {}});
    for (Transport t : kAllTransports) {
        const auto sp = layout_of(t);
        auto rhs = [&](double x, const State& y, State& dy) {
            const CMapM P(y.data(), m, m);
            const Mat q = p.Q1.value(x);
            if (sp.left)
                MapM(dy.data(), m, m).noalias() = sp.sign * (P * q);
            else
                MapM(dy.data(), m, m).noalias() = sp.sign * (q * P);
        };
        State y0(mm);
        MapM(y0.data(), m, m) = eye(m);
        std::vector<double> order = tf.grid_;
        if (sp.at_pi) std::reverse(order.begin(), order.end());
        const auto states = sp.at_pi ? integ.integrate(rhs, std::move(y0), kPi, 0.0, order)
                                     : integ.integrate(rhs, std::move(y0), 0.0, kPi, order);
        auto& vals = tf.values_[TransportFamily::index(t)];
        vals.resize(n);
        for (int k = 0; k < n; ++k) {
            const int i = sp.at_pi ? n - 1 - k : k;
            vals[i] = CMapM(states[k].data(), m, m);
        }
    }
    return tf;
}

Mat TransportFamily::derivative(Transport t, double x) const {
    const auto sp = layout_of(t);
    const Mat P = (*this)(t, x);
    const Mat q = q1_.value(x);
    return sp.left ? Mat(sp.sign * (P * q)) : Mat(sp.sign * (q * P));
}

Mat TransportFamily::operator()(Transport t, double x) const {
    const auto& vals = values_[index(t)];
    if (vals.empty()) throw ValidationError("transport family not initialised");
    const auto [i, h, u] = locate(grid_, x);
    if (u <= 1e-14) return vals[i];
    if (u >= 1.0 - 1e-14) return vals[i + 1];
    const auto sp = layout_of(t);
    auto slope = [&](std::size_t k) {
        const Mat q = q1_.value(grid_[k]);
        return sp.left ? Mat(sp.sign * (vals[k] * q)) : Mat(sp.sign * (q * vals[k]));
    };
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * vals[i] + (h * (u3 - 2 * u2 + u)) * slope(i) + (-2 * u3 + 3 * u2) * vals[i + 1] +
           (h * (u3 - u2)) * slope(i + 1);
}

// ---- bracket ------------------------------------------------------------------------

BracketResult bracket(const Trajectory& Z, const Trajectory& Y) {
    if (Z.side != Side::Left || Y.side != Side::Right)
        throw ValidationError("bracket expects a left-side Z and a right-side Y");
    if (std::abs(Z.rho - Y.rho) > 1e-14 * (1.0 + std::abs(Y.rho)))
        throw ValidationError("bracket: trajectories computed at different rho");

    std::vector<double> xs;
    const bool same = Z.x.size() == Y.x.size() &&
                      std::equal(Z.x.begin(), Z.x.end(), Y.x.begin(),
                                 [](double a, double b) { return std::abs(a - b) <= 1e-14; });
    if (same) {
        xs = Y.x;
    } else {
        const double lo = std::max(Z.x.front(), Y.x.front());
        const double hi = std::min(Z.x.back(), Y.x.back());
        if (!(hi > lo)) throw ValidationError("bracket: trajectory grids do not overlap");
        for (const auto* g : {&Z.x, &Y.x})
            for (double v : *g)
                if (v >= lo && v <= hi) xs.push_back(v);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end(), [](double a, double b) { return std::abs(a - b) <= 1e-14; }),
                 xs.end());
    }

    BracketResult r;
    r.x = xs;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const Mat z = same ? Z.value[k] : Z.value_at(xs[k]);
        const Mat dz = same ? Z.deriv[k] : Z.deriv_at(xs[k]);
        const Mat y = same ? Y.value[k] : Y.value_at(xs[k]);
        const Mat dy = same ? Y.deriv[k] : Y.deriv_at(xs[k]);
        r.values.push_back(dz * y - z * dy);
        r.max_norm = std::max(r.max_norm, norm(r.values.back()));
        r.scale = std::max(r.scale, norm(dz) * norm(y) + norm(z) * norm(dy));
    }
    for (const auto& v : r.values) r.max_deviation = std::max(r.max_deviation, norm(v - r.values.front()));
    return r;
}

}  // namespace qpencil
