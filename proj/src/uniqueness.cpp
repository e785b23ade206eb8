#include "qpencil/uniqueness.hpp"

#include <algorithm>
#include <cmath>

#include "qpencil/errors.hpp"
#include "qpencil/parallel.hpp"

namespace qpencil {

PencilPair PencilPair::make(Pencil L, Pencil Lt, const IntegrationSettings& s) {
    require_valid(L);
    require_valid(Lt);
    if (L.m != Lt.m)
        throw ValidationError("pencil pair: dimensions differ (" + std::to_string(L.m) + " vs " +
                              std::to_string(Lt.m) + ")");
    PencilPair pair{std::move(L), std::move(Lt), {}, {}};
    pair.tf = solve_transport(pair.L, s);
    pair.tft = solve_transport(pair.Lt, s);
    return pair;
}

namespace {

struct PairSolutions {
    Trajectory phi, Phi;    // pencil L
    Trajectory phit, Phit;  // tilde pencil
    AdjointBundle adjt;     // tilde pencil
};

IntegrationSettings on_grid(const IntegrationSettings& s, const std::vector<double>& xs) {
    for (double x : xs)
        if (!(x >= 0.0 && x <= kPi)) throw ValidationError("x = " + std::to_string(x) + " outside [0, pi]");
    IntegrationSettings g = s;
    g.output_grid = xs;
    if (g.output_grid.empty()) g.output_grid = {0.0};
    return g;
}

PairSolutions solve_pair(const PencilPair& pair, cplx rho, const IntegrationSettings& g) {
    PairSolutions ps;
    ps.phi = solution_phi(pair.L, rho, g);
    ps.Phi = weyl_solution(pair.L, rho, g);
    ps.phit = solution_phi(pair.Lt, rho, g);
    ps.Phit = weyl_solution(pair.Lt, rho, g);
    ps.adjt = adjoint_solutions(pair.Lt, rho, g);
    return ps;
}

std::size_t node(const Trajectory& t, double x) {
    const auto i = t.find(x);
    if (i < 0) throw NumericalError("trajectory misses abscissa " + std::to_string(x));
    return static_cast<std::size_t>(i);
}

PBlocks assemble(const PairSolutions& ps, double x, cplx rho) {
    const auto i = node(ps.phi, x);
    const auto j = node(ps.Phi, x);
    const auto k = node(ps.adjt.phi, x);
    const auto l = node(ps.adjt.Phi, x);
    const Mat& f = ps.phi.value[i];
    const Mat& df = ps.phi.deriv[i];
    const Mat& F = ps.Phi.value[j];
    const Mat& dF = ps.Phi.deriv[j];
    const Mat& fs = ps.adjt.phi.value[k];
    const Mat& dfs = ps.adjt.phi.deriv[k];
    const Mat& Fs = ps.adjt.Phi.value[l];
    const Mat& dFs = ps.adjt.Phi.deriv[l];

    PBlocks b;
    b.x = x;
    b.rho = rho;
    b.P11 = f * dFs - F * dfs;
    b.P21 = df * dFs - dF * dfs;
    b.P12 = F * fs - f * Fs;
    b.P22 = dF * fs - df * Fs;
    b.scale11 = norm(f) * norm(dFs) + norm(F) * norm(dfs);
    b.scale12 = norm(F) * norm(fs) + norm(f) * norm(Fs);

    const auto m = f.rows();
    Mat P(2 * m, 2 * m), Xt(2 * m, 2 * m), X(2 * m, 2 * m);
    P << b.P11, b.P12, b.P21, b.P22;
    const auto it = node(ps.phit, x);
    const auto jt = node(ps.Phit, x);
    Xt << ps.phit.value[it], ps.Phit.value[jt], ps.phit.deriv[it], ps.Phit.deriv[jt];
    X << f, F, df, dF;
    b.defining_residual = norm(P * Xt - X) / norm(X);
    return b;
}

}  // namespace

std::vector<PBlocks> block_P(const PencilPair& pair, const std::vector<double>& xs, cplx rho,
                             const IntegrationSettings& s) {
    const auto g = on_grid(s, xs);
    const auto ps = solve_pair(pair, rho, g);
    std::vector<PBlocks> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(assemble(ps, x, rho));
    return out;
}

PBlocks block_P(const PencilPair& pair, double x, cplx rho, const IntegrationSettings& s) {
    return block_P(pair, std::vector<double>{x}, rho, s).front();
}

// ---- Omega and Lambda -----------------------------------------------------------------

double OmegaLambda::max_residual() const {
    return residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end());
}

double OmegaLambda::max_lambda() const {
    double w = 0.0;
    for (const auto& l : Lambda) w = std::max(w, norm(l));
    return w;
}

double OmegaLambda::max_omega_minus_identity() const {
    double w = 0.0;
    for (const auto& o : Omega) w = std::max(w, norm(o - eye(o.rows())));
    return w;
}

OmegaLambda omega_lambda(const PencilPair& pair, const std::vector<double>& xs) {
    OmegaLambda ol;
    const cplx half_over_i = 1.0 / (2.0 * kI);
    for (double x : xs) {
        if (!(x >= 0.0 && x <= kPi)) throw ValidationError("x = " + std::to_string(x) + " outside [0, pi]");
        const Mat Pm = pair.tf(Transport::Minus, x);
        const Mat Pp = pair.tf(Transport::Plus, x);
        const Mat Tps = pair.tft(Transport::PlusStar, x);
        const Mat Tms = pair.tft(Transport::MinusStar, x);
        const Mat a = Pm * Tps;
        const Mat b = Pp * Tms;
        const Mat Omega = 0.5 * (a + b);
        const Mat Lambda = half_over_i * (a - b);

        const Mat da = pair.tf.derivative(Transport::Minus, x) * Tps + Pm * pair.tft.derivative(Transport::PlusStar, x);
        const Mat db = pair.tf.derivative(Transport::Plus, x) * Tms + Pp * pair.tft.derivative(Transport::MinusStar, x);
        const Mat dOmega = 0.5 * (da + db);
        const Mat q1 = pair.L.Q1.value(x);
        const Mat q1t = pair.Lt.Q1.value(x);
        const Mat rhs = kI * (Lambda * q1t - q1 * Lambda);

        ol.x.push_back(x);
        ol.Omega.push_back(Omega);
        ol.Lambda.push_back(Lambda);
        ol.residual.push_back(norm(dOmega - rhs));
    }
    return ol;
}

OmegaLambda omega_lambda(const PencilPair& pair, int n) {
    if (n < 2) throw ValidationError("omega_lambda needs at least two grid points");
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = kPi * i / (n - 1);
    xs.back() = kPi;
    return omega_lambda(pair, xs);
}

// ---- identity report ------------------------------------------------------------------

std::vector<std::pair<std::string, double>> IdentityReport::checks() const {
    std::vector<std::pair<std::string, double>> c = {
        {"inverse_identity", inverse_identity},
        {"inverse_identity_tilde", inverse_identity_tilde},
        {"weyl_symmetry", weyl_symmetry},
        {"weyl_gap", weyl_gap},
        {"defining_relation", defining_relation},
        {"omega_at_zero", omega_at_zero},
        {"omega_derivative", omega_derivative},
        {"max_omega_minus_identity", max_omega_minus_identity},
        {"max_lambda", max_lambda},
        {"distinguishable", distinguishable ? 1.0 : 0.0},
    };
    for (const auto& f : fits) {
        const std::string tag = std::string(f.sign > 0 ? "plus" : "minus") + "@" + std::to_string(f.arg);
        c.emplace_back("p11_slope[" + tag + "]", f.p11.slope);
        c.emplace_back("p12_slope[" + tag + "]", f.p12.slope);
    }
    if (h1) c.emplace_back("h1_gap", h1_gap);
    return c;
}

IdentityReport check_identities(const PencilPair& pair, const IdentityOptions& opt, const IntegrationSettings& s) {
    std::vector<double> interior;
    for (double x : opt.xs) {
        if (!(x > 0.0 && x < kPi)) throw ValidationError("identity x-samples must lie in (0, pi)");
        interior.push_back(x);
    }
    if (interior.empty()) throw ValidationError("identity check needs at least one x-sample");
    const auto g = on_grid(s, interior);
    IntegrationSettings inner = g;
    inner.jobs = 1;

    IdentityReport rep;
    const auto ol = omega_lambda(pair, opt.omega_grid_points);
    rep.omega_at_zero = norm(ol.Omega.front() - eye(pair.L.m));
    rep.omega_derivative = ol.max_residual();
    rep.max_omega_minus_identity = ol.max_omega_minus_identity();
    rep.max_lambda = ol.max_lambda();
    rep.distinguishable = rep.max_lambda > kDistinguishableLambda;

    struct SampleResult {
        double inv = 0, inv_t = 0, sym = 0, gap = 0, def = 0;
    };
    std::vector<SampleResult> samples(opt.rhos.size());
    parallel_for(opt.rhos.size(), s.jobs, [&](std::size_t k) {
        const cplx rho = opt.rhos[k];
        const auto ps = solve_pair(pair, rho, inner);
        const auto adj = adjoint_solutions(pair.L, rho, inner);
        auto& r = samples[k];
        r.inv = block_inverse_residual(ps.phi, ps.Phi, adj);
        r.inv_t = block_inverse_residual(ps.phit, ps.Phit, ps.adjt);
        const Mat M = ps.Phi.front_value();
        const Mat Mt = ps.Phit.front_value();
        r.sym = std::max(norm(M - adj.M), norm(Mt - ps.adjt.M));
        r.gap = norm(M - Mt);
        for (double x : interior) r.def = std::max(r.def, assemble(ps, x, rho).defining_residual);
    });
    for (const auto& r : samples) {
        rep.inverse_identity = std::max(rep.inverse_identity, r.inv);
        rep.inverse_identity_tilde = std::max(rep.inverse_identity_tilde, r.inv_t);
        rep.weyl_symmetry = std::max(rep.weyl_symmetry, r.sym);
        rep.weyl_gap = std::max(rep.weyl_gap, r.gap);
        rep.defining_relation = std::max(rep.defining_relation, r.def);
    }

    const auto olx = omega_lambda(pair, interior);
    for (const auto& ray : opt.rays) {
        ray.check();
        if (ray.moduli.size() < 2) throw ValidationError("decay fit needs at least two moduli");
        const auto n = ray.moduli.size();
        std::vector<double> r11(n), r12(n), n11(n), n12(n);
        parallel_for(n, s.jobs, [&](std::size_t k) {
            const cplx rho = ray.point(k);
            const auto ps = solve_pair(pair, rho, inner);
            for (std::size_t i = 0; i < interior.size(); ++i) {
                const auto b = assemble(ps, interior[i], rho);
                r11[k] = std::max(r11[k], norm(b.P11 - olx.Omega[i]));
                r12[k] = std::max(r12[k], norm(rho * b.P12 - olx.Lambda[i]));
                n11[k] = std::max(n11[k], 10.0 * s.rtol * b.scale11);
                n12[k] = std::max(n12[k], 10.0 * s.rtol * std::abs(rho) * b.scale12);
            }
        });
        RayFits f;
        f.sign = ray.sign;
        f.arg = ray.arg;
        f.p11 = decay_fit(ray.moduli, std::move(r11), std::move(n11));
        f.p12 = decay_fit(ray.moduli, std::move(r12), std::move(n12));
        f.p11.leading = f.p12.leading = 0;
        f.p11.claimed_order = f.p12.claimed_order = -1;
        rep.fits.push_back(std::move(f));
    }

    if (opt.estimate_h1) {
        const SectorRay* plus = nullptr;
        const SectorRay* minus = nullptr;
        for (const auto& ray : opt.rays) {
            if (ray.sign > 0 && !plus) plus = &ray;
            if (ray.sign < 0 && !minus) minus = &ray;
        }
        if (!plus || !minus) throw ValidationError("h1 estimation needs one ray in each sector");
        rep.h1 = estimate_h1_from_M(pair.L, *plus, *minus, s);
        rep.h1_tilde = estimate_h1_from_M(pair.Lt, *plus, *minus, s);
        rep.h1_gap = norm(rep.h1->h1 - rep.h1_tilde->h1);
    }
    return rep;
}

}  // namespace qpencil
