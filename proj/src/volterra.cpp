#include "qpencil/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qpencil/errors.hpp"

namespace qpencil {

namespace {

void require_rho(cplx rho) {
    if (!(std::abs(rho) >= kVolterraRhoMin))
        throw ValidationError("Volterra oracle needs |rho| >= " + std::to_string(kVolterraRhoMin));
}

Mat shifted_inverse(const Pencil& p, cplx rho, double x) {
    Mat a = -p.Q1.value(x);
    a.diagonal().array() += kI * rho;
    if (condition_number(a) > 1e12) throw NumericalError("i rho I - Q1(x) is singular");
    return inverse(a);
}

// Gauss-Legendre rule on [-1, 1] (Golub-Welsch) with the integration matrix
// W(i, j) = int_{-1}^{t_i} l_j(s) ds of the Lagrange basis.
struct GaussRule {
    Eigen::VectorXd t, w;
    Eigen::MatrixXd W;
};

double legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return p0;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

GaussRule gauss_rule(int k) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(k, k);
    for (int i = 1; i < k; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule g;
    g.t = es.eigenvalues();
    g.w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    g.W.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double s = 0.0;
            for (int n = 0; n < k; ++n) {
                const double integral = n == 0 ? g.t(i) + 1.0
                                               : (legendre(n + 1, g.t(i)) - legendre(n - 1, g.t(i))) / (2 * n + 1);
                s += (2 * n + 1) / 2.0 * legendre(n, g.t(j)) * integral;
            }
            g.W(i, j) = g.w(j) * s;
        }
    return g;
}

int panel_count(cplx rho, const PicardOptions& opt) {
    return std::max(opt.min_panels, static_cast<int>(std::ceil(opt.panels_per_rho * std::abs(rho))));
}

}  // namespace

ReferenceSolutions birkhoff_reference(const Pencil& p, cplx rho, double x, const TransportFamily& tf) {
    require_rho(rho);
    const cplx ep = std::exp(kI * rho * x), em = std::exp(-kI * rho * x);
    const Mat Pm = tf(Transport::Minus, x), Pp = tf(Transport::Plus, x);
    const Mat Pms = tf(Transport::MinusStar, x), Pps = tf(Transport::PlusStar, x);
    Mat shift = -p.Q1.value(x);
    shift.diagonal().array() += kI * rho;  // i rho I - Q1(x)
    const cplx c = 1.0 / (2.0 * kI * rho);

    ReferenceSolutions r;
    const Mat sum = ep * Pm + em * Pp, diff = ep * Pm - em * Pp;
    r.C0 = 0.5 * sum;
    r.S0 = c * diff;
    r.dC0 = 0.5 * shift * diff;
    r.dS0 = c * shift * sum;
    const Mat sum_s = ep * Pms + em * Pps, diff_s = ep * Pms - em * Pps;
    r.C0s = 0.5 * sum_s;
    r.S0s = c * diff_s;
    r.dC0s = 0.5 * diff_s * shift;
    r.dS0s = c * sum_s * shift;
    return r;
}

Mat forcing_F(const Pencil& p, cplx rho, double x, const Mat& Y, const Mat& dY) {
    const Mat q1 = p.Q1.value(x);
    return p.Q1.derivative(x) * (shifted_inverse(p, rho, x) * dY) - (q1 * q1 + p.Q0.value(x)) * Y;
}

std::vector<double> picard_grid(cplx rho, const PicardOptions& opt) {
    const int n = panel_count(rho, opt);
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = kPi * i / n;
    g.back() = kPi;
    return g;
}

PicardResult picard_solve(const Pencil& p, cplx rho, FundamentalKind which, const TransportFamily& tf,
                          const PicardOptions& opt) {
    require_rho(rho);
    require_valid(p);
    if (tf.dim() != p.m) throw ValidationError("transport family dimension mismatch");
    if (opt.nodes_per_panel < 2 || opt.max_iter < 1 || !(opt.tol > 0.0))
        throw ValidationError("invalid Picard options");

    const auto m = p.m;
    const GaussRule rule = gauss_rule(opt.nodes_per_panel);
    const int k = opt.nodes_per_panel;
    const std::vector<double> ends = picard_grid(rho, opt);
    const int panels = static_cast<int>(ends.size()) - 1;
    const double tau = std::abs(rho.imag());

    // Points: Gauss nodes of every panel, then the panel end points.
    const int nn = panels * k;
    const int np = nn + panels + 1;
    std::vector<double> xs(np);
    for (int q = 0; q < panels; ++q) {
        const double a = ends[q], b = ends[q + 1];
        for (int j = 0; j < k; ++j) xs[q * k + j] = 0.5 * (a + b) + 0.5 * (b - a) * rule.t(j);
    }
    for (int q = 0; q <= panels; ++q) xs[nn + q] = ends[q];

    // Per-point constants.
    std::vector<Mat> Y0(np), dY0(np), Lm(np), Lp(np), shift(np);
    std::vector<Mat> Rp(nn), Rm(nn), G_left(nn), G_right(nn);
    std::vector<double> weight(np);
    Mat norm0 = eye(m);
    if (which == FundamentalKind::S) {
        Mat b = eye(m) - p.Q1.value(0.0) / (kI * rho);
        norm0 = inverse(b);
    }
    for (int i = 0; i < np; ++i) {
        const double x = xs[i];
        const auto ref = birkhoff_reference(p, rho, x, tf);
        Y0[i] = which == FundamentalKind::C ? ref.C0 : Mat(ref.S0 * norm0);
        dY0[i] = which == FundamentalKind::C ? ref.dC0 : Mat(ref.dS0 * norm0);
        Lm[i] = std::exp(kI * rho * x) * tf(Transport::Minus, x);
        Lp[i] = std::exp(-kI * rho * x) * tf(Transport::Plus, x);
        shift[i] = -p.Q1.value(x);
        shift[i].diagonal().array() += kI * rho;
        weight[i] = std::exp(-tau * x);
        if (i < nn) {
            Rp[i] = std::exp(-kI * rho * x) * tf(Transport::PlusStar, x);
            Rm[i] = std::exp(kI * rho * x) * tf(Transport::MinusStar, x);
            const Mat q1 = p.Q1.value(x);
            G_left[i] = inverse(shift[i]) * p.Q1.derivative(x) * inverse(shift[i]);  // acts on Y'
            G_right[i] = inverse(shift[i]) * (q1 * q1 + p.Q0.value(x));            // acts on Y
        }
    }

    std::vector<Mat> Y = Y0, dY = dY0;
    std::vector<Mat> J1(nn), J2(nn), I1(np), I2(np);
    PicardState st;
    const double rscale = 1.0 / std::max(1.0, std::abs(rho));
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (int i = 0; i < nn; ++i) {
            const Mat G = G_left[i] * dY[i] - G_right[i] * Y[i];
            J1[i] = Rp[i] * G;
            J2[i] = Rm[i] * G;
        }
        Mat acc1 = zeros(m), acc2 = zeros(m);
        I1[nn] = acc1;
        I2[nn] = acc2;
        for (int q = 0; q < panels; ++q) {
            const double half = 0.5 * (ends[q + 1] - ends[q]);
            for (int i = 0; i < k; ++i) {
                Mat s1 = zeros(m), s2 = zeros(m);
                for (int j = 0; j < k; ++j) {
                    s1 += rule.W(i, j) * J1[q * k + j];
                    s2 += rule.W(i, j) * J2[q * k + j];
                }
                I1[q * k + i] = acc1 + half * s1;
                I2[q * k + i] = acc2 + half * s2;
            }
            for (int j = 0; j < k; ++j) {
                acc1 += (half * rule.w(j)) * J1[q * k + j];
                acc2 += (half * rule.w(j)) * J2[q * k + j];
            }
            I1[nn + q + 1] = acc1;
            I2[nn + q + 1] = acc2;
        }
        double diff = 0.0;
        for (int i = 0; i < np; ++i) {
            const Mat a = Lm[i] * I1[i], b = Lp[i] * I2[i];
            Mat y = Y0[i] + 0.5 * (a - b);
            Mat dy = dY0[i] + 0.5 * shift[i] * (a + b);
            diff = std::max(diff, weight[i] * (norm(y - Y[i]) + rscale * norm(dy - dY[i])));
            Y[i] = std::move(y);
            dY[i] = std::move(dy);
        }
        st.iterations = it;
        st.difference = diff;
        st.history.push_back(diff);
        if (diff <= opt.tol) break;
        if (it == opt.max_iter || !std::isfinite(diff)) throw NonConvergence("Picard iteration", diff);
    }

    PicardResult res;
    res.state = std::move(st);
    Trajectory& tr = res.trajectory;
    tr.side = Side::Right;
    tr.rho = rho;
    tr.direction = Direction::Forward;
    tr.x = ends;
    for (int q = 0; q <= panels; ++q) {
        const int i = nn + q;
        tr.value.push_back(Y[i]);
        tr.deriv.push_back(dY[i]);
        Mat a = (2.0 * kI * rho) * p.Q1.value(xs[i]) + p.Q0.value(xs[i]);
        a.diagonal().array() += rho * rho;
        tr.second.push_back(-a * Y[i]);
    }
    return res;
}

}  // namespace qpencil
