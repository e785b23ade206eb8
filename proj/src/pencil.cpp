#include "qpencil/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qpencil/errors.hpp"

namespace qpencil {

namespace {

constexpr double kDomainSlack = 1e-12;

void check_square(const Mat& a, Eigen::Index m, const char* what) {
    if (a.rows() != m || a.cols() != m) {
        std::ostringstream os;
        os << what << " must be " << m << "x" << m << ", got " << a.rows() << "x" << a.cols();
        throw ValidationError(os.str());
    }
}

void check_payload(const std::vector<Mat>& mats, const char* what) {
    if (mats.empty()) throw ValidationError(std::string(what) + ": empty payload");
    const auto m = mats.front().rows();
    for (const auto& a : mats) check_square(a, m, what);
}

}  // namespace

CoefficientFunction CoefficientFunction::zero(Eigen::Index m) { return constant(zeros(m)); }

CoefficientFunction CoefficientFunction::constant(const Mat& value) {
    return polynomial({value}, true);
}

CoefficientFunction CoefficientFunction::polynomial(std::vector<Mat> coeffs, bool derivative) {
    check_payload(coeffs, "polynomial coefficients");
    CoefficientFunction f;
    f.kind_ = CoefficientKind::Polynomial;
    f.m_ = coeffs.front().rows();
    f.derivative_ = derivative;
    f.payload_ = std::move(coeffs);
    if (f.payload_.size() == 1) {
        f.dpayload_ = {zeros(f.m_)};
    } else {
        for (std::size_t k = 1; k < f.payload_.size(); ++k)
            f.dpayload_.push_back(static_cast<double>(k) * f.payload_[k]);
    }
    return f;
}

CoefficientFunction CoefficientFunction::chebyshev(std::vector<Mat> coeffs, bool derivative) {
    check_payload(coeffs, "Chebyshev coefficients");
    CoefficientFunction f;
    f.kind_ = CoefficientKind::Chebyshev;
    f.m_ = coeffs.front().rows();
    f.derivative_ = derivative;
    f.payload_ = std::move(coeffs);

    // d/dt of sum c_k T_k: c'_{k-1} = c'_{k+1} + 2k c_k, then halve c'_0; chain rule dt/dx = 2/pi.
    const std::size_t n = f.payload_.size();
    std::vector<Mat> d(n + 1, zeros(f.m_));
    for (std::size_t k = n - 1; k >= 1; --k) d[k - 1] = d[k + 1] + 2.0 * static_cast<double>(k) * f.payload_[k];
    d[0] *= 0.5;
    d.resize(std::max<std::size_t>(n - 1, 1));
    for (auto& c : d) c *= 2.0 / kPi;
    f.dpayload_ = std::move(d);
    return f;
}

CoefficientFunction CoefficientFunction::grid(std::vector<double> nodes, std::vector<Mat> values,
                                              bool derivative) {
    check_payload(values, "grid values");
    if (nodes.size() != values.size()) throw ValidationError("grid: node and value counts differ");
    if (nodes.size() < 2) throw ValidationError("grid: at least two nodes required");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1])) throw ValidationError("grid: nodes must be strictly increasing");
    if (nodes.front() > kDomainSlack || nodes.back() < kPi - kDomainSlack)
        throw ValidationError("grid: nodes must cover [0, pi]");

    CoefficientFunction f;
    f.kind_ = CoefficientKind::Grid;
    f.m_ = values.front().rows();
    f.derivative_ = derivative;
    f.nodes_ = std::move(nodes);
    f.payload_ = std::move(values);

    // Natural spline: tridiagonal system for the interior second derivatives (Thomas algorithm).
    const std::size_t n = f.nodes_.size();
    f.second_.assign(n, zeros(f.m_));
    if (n > 2) {
        std::vector<double> diag(n), upper(n);
        std::vector<Mat> rhs(n, zeros(f.m_));
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = f.nodes_[i] - f.nodes_[i - 1];
            const double hr = f.nodes_[i + 1] - f.nodes_[i];
            diag[i] = 2.0 * (hl + hr);
            upper[i] = hr;
            rhs[i] = 6.0 * ((f.payload_[i + 1] - f.payload_[i]) / hr - (f.payload_[i] - f.payload_[i - 1]) / hl);
        }
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double lower = f.nodes_[i] - f.nodes_[i - 1];
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            f.second_[i] = (rhs[i] - upper[i] * f.second_[i + 1]) / diag[i];
        }
    }
    return f;
}

CoefficientFunction CoefficientFunction::chebyshev_fit(const std::function<Mat(double)>& fn,
                                                       Eigen::Index m, int degree) {
    if (degree < 0) throw ValidationError("chebyshev_fit: negative degree");
    const int n = degree + 1;
    std::vector<Mat> samples;
    samples.reserve(n);
    for (int j = 0; j < n; ++j) {
        const double t = std::cos(kPi * (j + 0.5) / n);
        Mat v = fn(0.5 * kPi * (1.0 + t));
        check_square(v, m, "chebyshev_fit sample");
        samples.push_back(std::move(v));
    }
    std::vector<Mat> coeffs(n, zeros(m));
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) coeffs[k] += std::cos(kPi * k * (j + 0.5) / n) * samples[j];
        coeffs[k] *= (k == 0 ? 1.0 : 2.0) / n;
    }
    double scale = 0.0;
    for (const auto& c : coeffs) scale = std::max(scale, norm(c));
    while (coeffs.size() > 1 && norm(coeffs.back()) <= 1e-16 * scale) coeffs.pop_back();
    return chebyshev(std::move(coeffs), true);
}

namespace {

Mat horner(const std::vector<Mat>& c, double x) {
    Mat acc = c.back();
    for (std::size_t k = c.size() - 1; k-- > 0;) {
        acc *= x;
        acc += c[k];
    }
    return acc;
}

Mat clenshaw(const std::vector<Mat>& c, double x) {
    const double t = 2.0 * x / kPi - 1.0;
    const auto m = c.front().rows();
    Mat b1 = zeros(m), b2 = zeros(m);
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
        b2 = c[k] + 2.0 * t * b1 - b2;
        b1.swap(b2);
    }
    return c[0] + t * b1 - b2;
}

}  // namespace

Mat CoefficientFunction::value(double x) const {
    switch (kind_) {
    case CoefficientKind::Polynomial: return horner(payload_, x);
    case CoefficientKind::Chebyshev: return clenshaw(payload_, x);
    case CoefficientKind::Grid: {
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - nodes_.begin() - 1, 0));
        i = std::min(i, nodes_.size() - 2);
        const double h = nodes_[i + 1] - nodes_[i];
        const double a = (nodes_[i + 1] - x) / h;
        const double b = (x - nodes_[i]) / h;
        return a * payload_[i] + b * payload_[i + 1] +
               ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * (h * h / 6.0);
    }
    }
    return {};
}

Mat CoefficientFunction::derivative(double x) const {
    if (!derivative_) throw ValidationError("coefficient derivative requested but not available");
    switch (kind_) {
    case CoefficientKind::Polynomial: return horner(dpayload_, x);
    case CoefficientKind::Chebyshev: return clenshaw(dpayload_, x);
    case CoefficientKind::Grid: {
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - nodes_.begin() - 1, 0));
        i = std::min(i, nodes_.size() - 2);
        const double h = nodes_[i + 1] - nodes_[i];
        const double a = (nodes_[i + 1] - x) / h;
        const double b = (x - nodes_[i]) / h;
        return (payload_[i + 1] - payload_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * second_[i] +
               (3.0 * b * b - 1.0) / 6.0 * h * second_[i + 1];
    }
    }
    return {};
}

Pencil Pencil::zero(Eigen::Index m) {
    Pencil p;
    p.m = m;
    p.Q1 = CoefficientFunction::zero(m);
    p.Q0 = CoefficientFunction::zero(m);
    p.h0 = p.h1 = p.H0 = p.H1 = zeros(m);
    return p;
}

ValidationReport validate_pencil(const Pencil& p) {
    ValidationReport r;
    if (p.m < 1) {
        r.violations.push_back("dimension m must be positive");
        return r;
    }
    auto square = [&](const Mat& a, const char* name) {
        if (a.rows() != p.m || a.cols() != p.m) {
            r.violations.push_back(std::string(name) + " is not " + std::to_string(p.m) + "x" +
                                   std::to_string(p.m));
            return false;
        }
        if (!a.allFinite()) {
            r.violations.push_back(std::string(name) + " has non-finite entries");
            return false;
        }
        return true;
    };
    const bool dims = square(p.h0, "h0") & square(p.h1, "h1") & square(p.H0, "H0") & square(p.H1, "H1");

    auto coefficient = [&](const CoefficientFunction& q, const char* name) {
        if (q.dim() != p.m) {
            r.violations.push_back(std::string(name) + " has dimension " + std::to_string(q.dim()));
            return;
        }
        for (int k = 0; k <= 16; ++k) {
            const double x = kPi * k / 16.0;
            if (!q.value(x).allFinite() || (q.has_derivative() && !q.derivative(x).allFinite())) {
                r.violations.push_back(std::string(name) + " is not finite at x = " + std::to_string(x));
                return;
            }
        }
    };
    coefficient(p.Q1, "Q1");
    coefficient(p.Q0, "Q0");

    if (dims) {
        const Mat I = eye(p.m);
        auto det_check = [&](const Mat& a, const char* label) {
            if (std::abs(a.determinant()) <= kDetEpsilon) r.violations.push_back(label);
        };
        det_check(I + p.h1, "det(I+h1)=0");
        det_check(I - p.h1, "det(I-h1)=0");
        det_check(I + p.H1, "det(I+H1)=0");
        det_check(I - p.H1, "det(I-H1)=0");
    }
    return r;
}

void require_valid(const Pencil& p) {
    const auto r = validate_pencil(p);
    if (r.ok()) return;
    std::string msg = "inadmissible pencil:";
    for (const auto& v : r.violations) msg += " " + v + ";";
    throw ValidationError(msg);
}

CoefficientValues eval_coefficients(const Pencil& p, double x) {
    if (!(x >= -kDomainSlack && x <= kPi + kDomainSlack))
        throw ValidationError("eval_coefficients: x = " + std::to_string(x) + " outside [0, pi]");
    CoefficientValues v{p.Q1.value(x), p.Q0.value(x), std::nullopt};
    if (p.Q1.has_derivative()) v.dQ1 = p.Q1.derivative(x);
    return v;
}

Mat boundary_form(BoundaryKind kind, const Pencil& p, cplx rho, const Mat& W, const Mat& dW) {
    if (W.rows() != p.m || W.cols() != p.m || dW.rows() != p.m || dW.cols() != p.m)
        throw ValidationError("boundary_form: dimension mismatch");
    const bool left = kind == BoundaryKind::U || kind == BoundaryKind::UStar;
    const Mat coeff = left ? Mat(kI * rho * p.h1 + p.h0) : Mat(kI * rho * p.H1 + p.H0);
    if (kind == BoundaryKind::U || kind == BoundaryKind::V) return dW + coeff * W;
    return dW + W * coeff;
}

// ---- random pencils -----------------------------------------------------------------

namespace {

// Portable uniform double in [0, 1) from the top 53 bits; std distributions are
// implementation-defined and would break cross-toolchain reproducibility.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Mat random_matrix(std::mt19937_64& rng, Eigen::Index m) {
    Mat a(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < m; ++k)
            a(j, k) = cplx(2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0);
    return a;
}

Mat scaled(Mat a, double bound, double fraction) {
    const double n = norm(a);
    if (n > 0.0) a *= bound * fraction / n;
    return a;
}

CoefficientFunction random_trig(std::mt19937_64& rng, Eigen::Index m, int degree, double bound) {
    std::vector<Mat> cosine, sine;
    for (int k = 0; k <= degree; ++k) {
        // Geometric damping keeps the higher harmonics modest.
        const double damp = std::pow(0.6, k);
        cosine.push_back(damp * random_matrix(rng, m));
        sine.push_back(damp * random_matrix(rng, m));
    }
    auto raw = [&](double x) {
        Mat q = cosine[0];
        for (int k = 1; k <= degree; ++k) q += std::cos(k * x) * cosine[k] + std::sin(k * x) * sine[k];
        return q;
    };
    double sup = 0.0;
    for (int i = 0; i <= 512; ++i) sup = std::max(sup, norm(raw(kPi * i / 512.0)));
    const double factor = sup > 0.0 ? bound * (0.5 + 0.5 * uniform01(rng)) / sup : 0.0;
    return CoefficientFunction::chebyshev_fit([&](double x) { Mat q = raw(x) * factor; return q; }, m,
                                              std::max(24, 8 * degree + 16));
}

}  // namespace

Pencil random_pencil(std::uint64_t seed, const RandomPencilOptions& opt) {
    if (opt.m < 1) throw ValidationError("random_pencil: m must be positive");
    std::mt19937_64 rng(seed);
    Pencil p;
    p.m = opt.m;
    p.Q1 = random_trig(rng, opt.m, opt.trig_degree, opt.q1_bound);
    p.Q0 = random_trig(rng, opt.m, opt.trig_degree, opt.q0_bound);
    p.h1 = scaled(random_matrix(rng, opt.m), opt.h1_bound, 0.2 + 0.8 * uniform01(rng));
    p.H1 = scaled(random_matrix(rng, opt.m), opt.h1_bound, 0.2 + 0.8 * uniform01(rng));
    p.h0 = scaled(random_matrix(rng, opt.m), opt.h0_bound, uniform01(rng));
    p.H0 = scaled(random_matrix(rng, opt.m), opt.h0_bound, uniform01(rng));
    return p;
}

}  // namespace qpencil
