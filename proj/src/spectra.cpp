#include "qpencil/spectra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "qpencil/errors.hpp"
#include "qpencil/parallel.hpp"

namespace qpencil {

Contour Contour::circle(cplx center, double radius, int nodes) {
    Contour c{Circle{center, radius}, nodes};
    c.check();
    return c;
}

Contour Contour::rectangle(double x0, double x1, double y0, double y1, int nodes) {
    Contour c{Rectangle{x0, x1, y0, y1}, nodes};
    c.check();
    return c;
}

void Contour::check() const {
    if (nodes < 64) throw ValidationError("contour needs at least 64 nodes");
    if (const auto* ci = std::get_if<Circle>(&shape)) {
        if (!(ci->radius > 0.0) || !std::isfinite(ci->radius)) throw ValidationError("circle radius must be positive");
    } else {
        const auto& r = std::get<Rectangle>(shape);
        if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) throw ValidationError("rectangle must be non-empty");
    }
}

std::vector<cplx> Contour::points(int level) const {
    std::vector<cplx> pts;
    if (const auto* ci = std::get_if<Circle>(&shape)) {
        const long n = static_cast<long>(nodes) << level;
        pts.reserve(n);
        for (long k = 0; k < n; ++k) pts.push_back(ci->center + std::polar(ci->radius, 2.0 * kPi * k / n));
        return pts;
    }
    const auto& r = std::get<Rectangle>(shape);
    const std::array<cplx, 5> corner{cplx(r.x0, r.y0), cplx(r.x1, r.y0), cplx(r.x1, r.y1), cplx(r.x0, r.y1),
                                     cplx(r.x0, r.y0)};
    const double perimeter = 2.0 * ((r.x1 - r.x0) + (r.y1 - r.y0));
    for (int side = 0; side < 4; ++side) {
        const cplx a = corner[side], b = corner[side + 1];
        const long base = std::max(4L, std::lround(nodes * std::abs(b - a) / perimeter));
        const long n = base << level;
        for (long j = 0; j < n; ++j) pts.push_back(a + (b - a) * (static_cast<double>(j) / n));
    }
    return pts;
}

namespace {

constexpr int kMaxContourLevel = 10;
constexpr double kZeroOnContourRatio = 1e-8;

std::vector<cplx> evaluate(const ScalarFunction& f, const std::vector<cplx>& pts, unsigned jobs) {
    std::vector<cplx> v(pts.size());
    parallel_for(pts.size(), jobs, [&](std::size_t i) { v[i] = f(pts[i]); });
    return v;
}

}  // namespace

namespace {

ZeroCount winding(const ScalarFunction& f, const Contour& c, unsigned jobs, int max_level) {
    c.check();
    std::vector<cplx> vals = evaluate(f, c.points(0), jobs);
    int previous = 0;
    for (int level = 0;; ++level) {
        ZeroCount zc;
        zc.nodes = static_cast<int>(vals.size());
        zc.min_abs = std::abs(vals[0]);
        for (const auto& v : vals) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw NumericalError("non-finite function value on contour");
            zc.min_abs = std::min(zc.min_abs, std::abs(v));
            zc.max_abs = std::max(zc.max_abs, std::abs(v));
        }
        if (!(zc.min_abs >= kZeroOnContourRatio * zc.max_abs))
            throw ZeroOnContour("function vanishes on the contour (min |f| = " + std::to_string(zc.min_abs) +
                                ", max |f| = " + std::to_string(zc.max_abs) + ")");
        // Both parts of each log increment must be small: a node pair straddling a close
        // multiple zero can wrap the phase by nearly 2 pi, but not without a large jump in |f|.
        double total = 0.0, largest = 0.0;
        for (std::size_t k = 0; k < vals.size(); ++k) {
            const cplx ratio = vals[(k + 1) % vals.size()] / vals[k];
            const double d = std::arg(ratio);
            total += d;
            largest = std::max({largest, std::abs(d), std::abs(std::log(std::abs(ratio)))});
        }
        zc.count = static_cast<int>(std::lround(total / (2.0 * kPi)));
        if (level > 0 && largest < kPi / 2 && zc.count == previous) return zc;
        if (level == max_level) throw NonConvergence("argument principle count", largest);
        previous = zc.count;

        const auto pts = c.points(level + 1);
        std::vector<cplx> odd_pts;
        for (std::size_t k = 1; k < pts.size(); k += 2) odd_pts.push_back(pts[k]);
        const auto odd = evaluate(f, odd_pts, jobs);
        std::vector<cplx> merged(pts.size());
        for (std::size_t k = 0; k < vals.size(); ++k) {
            merged[2 * k] = vals[k];
            merged[2 * k + 1] = odd[k];
        }
        vals = std::move(merged);
    }
}

}  // namespace

ZeroCount count_zeros(const ScalarFunction& f, const Contour& c, unsigned jobs) {
    return winding(f, c, jobs, kMaxContourLevel);
}

int count_zeros(const Pencil& p, const Contour& c, const IntegrationSettings& s) {
    require_valid(p);
    return count_zeros([&](cplx r) { return char_function(p, r, s); }, c, s.jobs).count;
}

namespace {

struct Locator {
    const ScalarFunction& f;
    unsigned jobs;
    const LocateOptions& opt;
    std::vector<SpectralRecord> out;

    // Cuts that pass close to a zero need many nodes; they are abandoned for another cut
    // after kCutLevels doublings.
    static constexpr int kCutLevels = 3;
    // Cells holding several zeros are tested for a single multiple zero below this relative size.
    static constexpr double kCoincidentCell = 1e-2;

    ZeroCount count(const Rectangle& r, int max_level = kMaxContourLevel) {
        return winding(f, Contour{r, opt.contour_nodes}, jobs, max_level);
    }

    static double size(const Rectangle& r) { return std::max(r.x1 - r.x0, r.y1 - r.y0); }

    static bool inside(const Rectangle& r, cplx z, double margin) {
        return z.real() >= r.x0 - margin && z.real() <= r.x1 + margin && z.imag() >= r.y0 - margin &&
               z.imag() <= r.y1 + margin;
    }

    // Newton iteration z -= k f / f' from the cell centre (k = 1: plain Newton); returns false
    // unless it converges inside the cell. Multiple zeros only resolve to about the square root
    // of the evaluation noise, so k > 1 uses a looser step tolerance.
    bool newton(const Rectangle& r, cplx& z, int k = 1) {
        const double tol = k == 1 ? opt.newton_tol : std::max(opt.newton_tol, 1e-8);
        z = cplx(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
        for (int it = 0; it < opt.newton_max_iter; ++it) {
            const double h = 1e-5 * std::max(1.0, std::abs(z));
            const cplx fz = f(z);
            const cplx d = (f(z + h) - f(z - h)) / (2.0 * h);
            if (d == 0.0 || !std::isfinite(std::abs(d))) return false;
            const cplx step = static_cast<double>(k) * fz / d;
            z -= step;
            if (!inside(r, z, 0.5 * size(r))) return false;
            if (std::abs(step) <= tol * std::max(1.0, std::abs(z))) return inside(r, z, 1e-9 * (1.0 + std::abs(z)));
        }
        return false;
    }

    bool coincident(const Rectangle& r, int k, cplx& z) {
        if (!newton(r, z, k)) return false;
        const double radius = opt.merge_radius * std::max(1.0, std::abs(z));
        const double room = std::min({z.real() - r.x0, r.x1 - z.real(), z.imag() - r.y0, r.y1 - z.imag()});
        if (radius >= room) return false;
        try {
            return count_zeros(f, Contour::circle(z, radius, opt.contour_nodes), jobs).count == k;
        } catch (const NumericalError&) {
            return false;
        }
    }

    void record(cplx z, int mult, bool cluster, double contour_max) {
        SpectralRecord rec;
        rec.rho = z;
        rec.multiplicity = mult;
        rec.cluster = cluster;
        rec.residual = std::abs(f(z));
        rec.contour_max = contour_max;
        out.push_back(std::move(rec));
    }

    void process(const Rectangle& r, const ZeroCount& zc) {
        if (zc.count <= 0) return;
        if (zc.count == 1) {
            cplx z;
            if (newton(r, z)) {
                record(z, 1, false, zc.max_abs);
                return;
            }
        }
        const cplx centre(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
        if (zc.count > 1 && size(r) <= kCoincidentCell * std::max(1.0, std::abs(centre))) {
            cplx z;
            if (coincident(r, zc.count, z)) {
                record(z, zc.count, false, zc.max_abs);
                return;
            }
        }
        if (size(r) < opt.min_cell) {
            record(cplx(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1)), zc.count, zc.count > 1, zc.max_abs);
            return;
        }
        // Off-centre cuts keep symmetric zeros (such as the origin) off the new edges.
        static constexpr std::array<double, 4> fractions{0.4871, 0.5317, 0.4423, 0.5779};
        const bool horizontal = (r.x1 - r.x0) >= (r.y1 - r.y0);
        for (std::size_t attempt = 0; attempt < fractions.size(); ++attempt) {
            const double frac = fractions[attempt];
            const int levels = attempt + 1 == fractions.size() ? kMaxContourLevel : kCutLevels;
            Rectangle a = r, b = r;
            if (horizontal) {
                a.x1 = b.x0 = r.x0 + frac * (r.x1 - r.x0);
            } else {
                a.y1 = b.y0 = r.y0 + frac * (r.y1 - r.y0);
            }
            ZeroCount ca, cb;
            try {
                ca = count(a, levels);
                cb = count(b, levels);
            } catch (const ZeroOnContour&) {
                continue;
            } catch (const NonConvergence&) {
                continue;
            }
            if (ca.count + cb.count != zc.count)
                throw NumericalError("argument principle counts are not additive (" + std::to_string(ca.count) + " + " +
                                     std::to_string(cb.count) + " != " + std::to_string(zc.count) + ")");
            process(a, ca);
            process(b, cb);
            return;
        }
        throw ZeroOnContour("could not place a cut avoiding zeros");
    }
};

}  // namespace

std::vector<SpectralRecord> locate_zeros(const ScalarFunction& f, const Rectangle& region, unsigned jobs,
                                         const LocateOptions& opt) {
    Contour{region, std::max(64, opt.contour_nodes)}.check();
    Locator loc{f, jobs, opt, {}};
    Rectangle r = region;
    ZeroCount zc;
    for (int attempt = 0;; ++attempt) {
        try {
            zc = loc.count(r);
            break;
        } catch (const ZeroOnContour&) {
            if (attempt == 3) throw;
            const double j = opt.jitter * std::max(1.0, Locator::size(r));
            r.x0 -= j;
            r.x1 += j;
            r.y0 -= j;
            r.y1 += j;
        }
    }
    loc.process(r, zc);
    std::sort(loc.out.begin(), loc.out.end(), [](const SpectralRecord& a, const SpectralRecord& b) {
        return a.rho.real() != b.rho.real() ? a.rho.real() < b.rho.real() : a.rho.imag() < b.rho.imag();
    });
    return loc.out;
}

std::vector<SpectralRecord> locate_eigenvalues(const Pencil& p, const Rectangle& region, const IntegrationSettings& s,
                                               const LocateOptions& opt) {
    require_valid(p);
    return locate_zeros([&](cplx r) { return char_function(p, r, s); }, region, s.jobs, opt);
}

std::vector<Mat> residue_matrices(const Pencil& p, cplx rho_n, int multiplicity, double radius,
                                  const IntegrationSettings& s) {
    require_valid(p);
    if (multiplicity < 1) throw ValidationError("multiplicity must be positive");
    if (multiplicity > 3) throw ValidationError("residues of poles with multiplicity above 3 are not supported");
    const Contour c = Contour::circle(rho_n, radius, 64);
    const int inside = count_zeros(p, c, s);
    if (inside != multiplicity)
        throw ValidationError("circle of radius " + std::to_string(radius) + " around the pole encloses " +
                              std::to_string(inside) + " zeros, expected " + std::to_string(multiplicity));

    std::vector<Mat> values;
    std::vector<cplx> offsets;
    std::vector<Mat> previous;
    for (int level = 0; level <= 6; ++level) {
        const auto pts = c.points(level);
        std::vector<cplx> fresh;
        for (std::size_t k = level == 0 ? 0 : 1; k < pts.size(); k += level == 0 ? 1 : 2) fresh.push_back(pts[k]);
        std::vector<Mat> fresh_vals(fresh.size());
        parallel_for(fresh.size(), s.jobs, [&](std::size_t i) { fresh_vals[i] = weyl_matrix(p, fresh[i], s).M(); });
        if (level == 0) {
            values = std::move(fresh_vals);
        } else {
            std::vector<Mat> merged(pts.size());
            for (std::size_t k = 0; k < values.size(); ++k) {
                merged[2 * k] = std::move(values[k]);
                merged[2 * k + 1] = std::move(fresh_vals[k]);
            }
            values = std::move(merged);
        }
        std::vector<Mat> current(multiplicity, zeros(p.m));
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const cplx d = pts[k] - rho_n;
            cplx w = d;
            for (int nu = 0; nu < multiplicity; ++nu, w *= d) current[nu] += w * values[k];
        }
        for (auto& a : current) a /= static_cast<double>(pts.size());
        if (level > 0) {
            double change = 0.0;
            for (int nu = 0; nu < multiplicity; ++nu)
                change = std::max(change, norm(current[nu] - previous[nu]) / std::max(1.0, norm(current[nu])));
            if (change <= 1e-8) return current;
            if (level == 6) throw NonConvergence("residue quadrature", change);
        }
        previous = std::move(current);
    }
    return previous;
}

namespace {

struct Extrapolation {
    Mat limit;
    std::vector<double> remainder;
};

Extrapolation extrapolate(const std::vector<double>& r, const std::vector<Mat>& A) {
    const auto n = static_cast<Eigen::Index>(r.size());
    const Eigen::Index q = std::min<Eigen::Index>(3, n);
    Eigen::MatrixXcd X(n, q);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index j = 0; j < q; ++j) X(k, j) = std::pow(r[k], -static_cast<double>(j));
    const auto qr = X.colPivHouseholderQr();
    const auto m = A.front().rows();
    Extrapolation e;
    e.limit.resize(m, m);
    Eigen::VectorXcd b(n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) b(k) = A[k](i, j);
            e.limit(i, j) = qr.solve(b)(0);
        }
    for (const auto& a : A) e.remainder.push_back(norm(a - e.limit));
    return e;
}

Extrapolation ray_limit(const Pencil& p, const SectorRay& ray, const IntegrationSettings& s) {
    ray.check();
    const auto pts = ray.points();
    std::vector<Mat> A(pts.size());
    const cplx factor = ray.sign > 0 ? kI : -kI;
    parallel_for(pts.size(), s.jobs, [&](std::size_t k) { A[k] = factor * pts[k] * weyl_matrix(p, pts[k], s).M(); });
    auto e = extrapolate(ray.moduli, A);
    const auto& rem = e.remainder;
    const double floor = 1e-9 * (1.0 + norm(e.limit));
    if (rem.size() >= 2 && rem.front() > floor && rem.back() > rem.front())
        throw NonConvergence("limit of +-i rho M(rho) along the ray", rem.back());
    return e;
}

}  // namespace

H1Estimate estimate_h1_from_M(const Pencil& p, const SectorRay& ray_plus, const SectorRay& ray_minus,
                              const IntegrationSettings& s) {
    require_valid(p);
    if (ray_plus.sign != 1 || ray_minus.sign != -1) throw ValidationError("need one Theta+ and one Theta- ray");
    const auto plus = ray_limit(p, ray_plus, s);
    const auto minus = ray_limit(p, ray_minus, s);
    const Mat I = eye(p.m);
    H1Estimate h;
    h.limit_plus = plus.limit;
    h.limit_minus = minus.limit;
    h.remainder_plus = plus.remainder;
    h.remainder_minus = minus.remainder;
    h.h1_plus = inverse(plus.limit) - I;
    h.h1_minus = I - inverse(minus.limit);
    h.gap = norm(h.h1_plus - h.h1_minus);
    h.h1 = 0.5 * (h.h1_plus + h.h1_minus);
    return h;
}

}  // namespace qpencil
