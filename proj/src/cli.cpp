#include "qpencil/cli.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qpencil/asympt.hpp"
#include "qpencil/errors.hpp"
#include "qpencil/parallel.hpp"
#include "qpencil/spectra.hpp"
#include "qpencil/uniqueness.hpp"

namespace qpencil {

using ojson = nlohmann::ordered_json;

// ---- parsing helpers ------------------------------------------------------------------

namespace {

double parse_real(std::string_view text, std::string_view what) {
    const std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size())
        throw ValidationError(std::string(what) + ": cannot parse \"" + s + "\" as a number");
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep))
        if (!cur.empty()) parts.push_back(cur);
    return parts;
}

std::string strip(std::string_view text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    return s;
}

}  // namespace

cplx parse_complex(std::string_view text) {
    const std::string s = strip(text);
    if (s.empty()) throw ValidationError("empty complex number");
    const char last = s.back();
    if (last != 'i' && last != 'j') return {parse_real(s, "complex"), 0.0};
    const std::string body = s.substr(0, s.size() - 1);
    std::size_t split_at = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split_at = k;
            break;
        }
    }
    const std::string re = split_at == std::string::npos ? "" : body.substr(0, split_at);
    std::string im = split_at == std::string::npos ? body : body.substr(split_at);
    if (im.empty() || im == "+") im = "1";
    if (im == "-") im = "-1";
    return {re.empty() ? 0.0 : parse_real(re, "complex"), parse_real(im, "complex")};
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::vector<cplx> parse_rho_list(const std::vector<std::string>& items) {
    std::vector<cplx> out;
    for (const auto& item : items)
        for (const auto& tok : split(item, ',')) out.push_back(parse_complex(tok));
    return out;
}

std::vector<double> parse_real_list(const std::vector<std::string>& items, std::string_view what) {
    std::vector<double> out;
    for (const auto& item : items)
        for (const auto& tok : split(item, ',')) out.push_back(parse_real(tok, what));
    return out;
}

Rectangle parse_region(const std::string& text) {
    const auto v = parse_real_list({text}, "--region");
    if (v.size() != 4) throw ValidationError("--region expects x0,x1,y0,y1");
    return Rectangle{v[0], v[1], v[2], v[3]};
}

Contour parse_contour(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 3) throw ValidationError("--contour expects c,r,N");
    const double n = parse_real(parts[2], "--contour");
    if (n != std::floor(n)) throw ValidationError("--contour node count must be an integer");
    Contour c = Contour::circle(parse_complex(parts[0]), parse_real(parts[1], "--contour"), static_cast<int>(n));
    c.check();
    return c;
}

SectorRay parse_ray(const std::string& text) {
    const auto v = parse_real_list({text}, "--ray");
    if (v.size() < 5) throw ValidationError("--ray expects sign,delta,arg followed by at least two moduli");
    SectorRay r{static_cast<int>(v[0]), v[1], v[2], std::vector<double>(v.begin() + 3, v.end())};
    if (v[0] != 1.0 && v[0] != -1.0) throw ValidationError("--ray sign must be 1 or -1");
    r.check();
    return r;
}

// ---- tables ---------------------------------------------------------------------------

enum class ColType { Real, Complex, Int, Text };
using Cell = std::variant<double, cplx, long long, std::string>;

struct Table {
    std::string name;
    std::vector<std::pair<std::string, ColType>> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw std::logic_error("table " + name + ": row width mismatch");
        rows.push_back(std::move(row));
    }
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
    }
    return q + "\"";
}

struct Document {
    std::string command;
    std::string config_hash;
    std::vector<Table> tables;
};

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_csv(const Document& doc, std::ostream& os) {
    os << "# generated " << timestamp() << "\n";
    os << "# command " << doc.command << "\n";
    os << "# config_hash " << doc.config_hash << "\n";
    for (std::size_t t = 0; t < doc.tables.size(); ++t) {
        const auto& tab = doc.tables[t];
        if (t > 0) os << "\n";
        os << "# table " << tab.name << "\n";
        for (std::size_t c = 0; c < tab.columns.size(); ++c) {
            if (c > 0) os << ",";
            const auto& [name, type] = tab.columns[c];
            if (type == ColType::Complex)
                os << name << "_re," << name << "_im";
            else
                os << name;
        }
        os << "\n";
        for (const auto& row : tab.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c > 0) os << ",";
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>)
                            os << fmt_double(v);
                        else if constexpr (std::is_same_v<T, cplx>)
                            os << fmt_double(v.real()) << "," << fmt_double(v.imag());
                        else if constexpr (std::is_same_v<T, long long>)
                            os << v;
                        else
                            os << csv_text(v);
                    },
                    row[c]);
            }
            os << "\n";
        }
    }
}

ojson cell_json(const Cell& cell) {
    return std::visit(
        [](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                if (std::isfinite(v)) return v;
                return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
            } else if constexpr (std::is_same_v<T, cplx>) {
                return ojson::array({v.real(), v.imag()});
            } else {
                return v;
            }
        },
        cell);
}

void write_json(const Document& doc, std::ostream& os) {
    ojson j;
    j["generated"] = timestamp();
    j["command"] = doc.command;
    j["config_hash"] = doc.config_hash;
    ojson tables = ojson::object();
    for (const auto& tab : doc.tables) {
        ojson rows = ojson::array();
        for (const auto& row : tab.rows) {
            ojson r = ojson::object();
            for (std::size_t c = 0; c < row.size(); ++c) r[tab.columns[c].first] = cell_json(row[c]);
            rows.push_back(std::move(r));
        }
        tables[tab.name] = std::move(rows);
    }
    j["tables"] = std::move(tables);
    os << j.dump(2) << "\n";
}

// Adds one row per matrix entry: prefix cells, then i, j, value cells.
void add_matrix_rows(Table& t, const std::vector<Cell>& prefix, const std::vector<const Mat*>& mats,
                     const std::vector<Cell>& suffix = {}) {
    const Mat& first = *mats.front();
    for (Eigen::Index i = 0; i < first.rows(); ++i)
        for (Eigen::Index j = 0; j < first.cols(); ++j) {
            std::vector<Cell> row = prefix;
            row.emplace_back(static_cast<long long>(i));
            row.emplace_back(static_cast<long long>(j));
            for (const Mat* m : mats) row.emplace_back((*m)(i, j));
            row.insert(row.end(), suffix.begin(), suffix.end());
            t.add(std::move(row));
        }
}

// ---- configuration --------------------------------------------------------------------

struct Options {
    std::string pencil_path, pencil2_path, out_path, format = "csv";
    std::uint64_t seed = 0, seed2 = 0;
    int dim = 2;
    double rtol = IntegrationSettings{}.rtol;
    double atol = IntegrationSettings{}.atol;
    unsigned jobs = 1;
    int grid_points = IntegrationSettings{}.grid_points;
    std::vector<std::string> rho_list, x_list, rays, kinds, nus;
    std::string contour, region;
    double radius = 0.0;
    double x = kPi / 3;
};

struct Resolved {
    Pencil pencil;
    std::optional<Pencil> pencil2;
    IntegrationSettings settings;
};

Document cmd_validate(const Resolved& r, bool& ok) {
    const auto rep = validate_pencil(r.pencil);
    ok = rep.ok();
    Table t{"violations", {{"message", ColType::Text}}, {}};
    for (const auto& v : rep.violations) t.add({v});
    Table summary{"summary", {{"m", ColType::Int}, {"admissible", ColType::Int}}, {}};
    summary.add({static_cast<long long>(r.pencil.m), static_cast<long long>(ok ? 1 : 0)});
    return {"validate", "", {summary, t}};
}

Document cmd_solve(const Resolved& r, const Options& o) {
    const auto rhos = parse_rho_list(o.rho_list);
    if (rhos.empty()) throw ValidationError("solve needs --rho-list");
    std::vector<std::string> kinds = o.kinds.empty() ? std::vector<std::string>{"C", "S", "phi", "psi", "Phi"} : o.kinds;
    for (const auto& k : kinds)
        if (k != "C" && k != "S" && k != "phi" && k != "psi" && k != "Phi")
            throw ValidationError("solve: unknown kind \"" + k + "\" (C, S, phi, psi, Phi)");
    Table t{"trajectory",
            {{"kind", ColType::Text}, {"rho", ColType::Complex}, {"x", ColType::Real}, {"i", ColType::Int},
             {"j", ColType::Int}, {"value", ColType::Complex}, {"deriv", ColType::Complex}},
            {}};
    std::vector<std::vector<std::pair<std::string, Trajectory>>> results(rhos.size());
    IntegrationSettings inner = r.settings;
    inner.jobs = 1;
    parallel_for(rhos.size(), r.settings.jobs, [&](std::size_t k) {
        const cplx rho = rhos[k];
        std::optional<FundamentalSystem> cs;
        for (const auto& kind : kinds) {
            if ((kind == "C" || kind == "S") && !cs) cs = fundamental_CS(r.pencil, rho, inner);
            Trajectory tr = kind == "C"     ? cs->C
                            : kind == "S"   ? cs->S
                            : kind == "phi" ? solution_phi(r.pencil, rho, inner)
                            : kind == "psi" ? solution_psi(r.pencil, rho, inner)
                                            : weyl_solution(r.pencil, rho, inner);
            results[k].emplace_back(kind, std::move(tr));
        }
    });
    for (std::size_t k = 0; k < rhos.size(); ++k)
        for (const auto& [kind, tr] : results[k])
            for (std::size_t n = 0; n < tr.size(); ++n)
                add_matrix_rows(t, {kind, rhos[k], tr.x[n]}, {&tr.value[n], &tr.deriv[n]});
    return {"solve", "", {t}};
}

Document cmd_weyl(const Resolved& r, const Options& o) {
    const auto rhos = parse_rho_list(o.rho_list);
    if (rhos.empty()) throw ValidationError("weyl needs --rho-list");
    std::vector<WeylEvaluation> ev(rhos.size());
    IntegrationSettings inner = r.settings;
    inner.jobs = 1;
    parallel_for(rhos.size(), r.settings.jobs, [&](std::size_t k) { ev[k] = weyl_matrix(r.pencil, rhos[k], inner); });
    Table t{"weyl",
            {{"rho", ColType::Complex}, {"i", ColType::Int}, {"j", ColType::Int}, {"M", ColType::Complex},
             {"M_phi", ColType::Complex}, {"discrepancy", ColType::Real}, {"cond_U_psi", ColType::Real},
             {"cond_V_phi", ColType::Real}},
            {}};
    for (std::size_t k = 0; k < rhos.size(); ++k)
        add_matrix_rows(t, {rhos[k]}, {&ev[k].M_via_psi, &ev[k].M_via_phi},
                        {ev[k].discrepancy, ev[k].cond_U_psi, ev[k].cond_V_phi});
    return {"weyl", "", {t}};
}

std::vector<SpectralRecord> eigenvalues_in(const Resolved& r, const Options& o) {
    if (o.region.empty() == o.contour.empty()) throw ValidationError("give exactly one of --region and --contour");
    if (!o.region.empty()) return locate_eigenvalues(r.pencil, parse_region(o.region), r.settings);
    const Contour c = parse_contour(o.contour);
    const auto& circ = std::get<Circle>(c.shape);
    const Rectangle box{circ.center.real() - circ.radius, circ.center.real() + circ.radius,
                        circ.center.imag() - circ.radius, circ.center.imag() + circ.radius};
    const int expected = count_zeros(r.pencil, c, r.settings);
    std::vector<SpectralRecord> inside;
    int found = 0;
    for (auto& rec : locate_eigenvalues(r.pencil, box, r.settings))
        if (std::abs(rec.rho - circ.center) < circ.radius) {
            found += rec.multiplicity;
            inside.push_back(std::move(rec));
        }
    if (found != expected)
        throw NumericalError("contour count " + std::to_string(expected) + " disagrees with " + std::to_string(found) +
                             " located eigenvalues");
    return inside;
}

Document cmd_spectrum(const Resolved& r, const Options& o) {
    const auto recs = eigenvalues_in(r, o);
    Table t{"eigenvalues",
            {{"rho", ColType::Complex}, {"multiplicity", ColType::Int}, {"residual", ColType::Real},
             {"contour_max", ColType::Real}, {"cluster", ColType::Int}},
            {}};
    for (const auto& rec : recs)
        t.add({rec.rho, static_cast<long long>(rec.multiplicity), rec.residual, rec.contour_max,
               static_cast<long long>(rec.cluster ? 1 : 0)});
    return {"spectrum", "", {t}};
}

Document cmd_residues(const Resolved& r, const Options& o) {
    const auto recs = eigenvalues_in(r, o);
    Table t{"residues",
            {{"rho", ColType::Complex}, {"multiplicity", ColType::Int}, {"radius", ColType::Real}, {"nu", ColType::Int},
             {"i", ColType::Int}, {"j", ColType::Int}, {"value", ColType::Complex}},
            {}};
    for (std::size_t k = 0; k < recs.size(); ++k) {
        const auto& rec = recs[k];
        if (rec.cluster) throw NumericalError("eigenvalue cluster near " + fmt_double(rec.rho.real()) + " is unresolved");
        double radius = o.radius;
        if (radius <= 0.0) {
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < recs.size(); ++l)
                if (l != k) gap = std::min(gap, std::abs(recs[l].rho - rec.rho));
            radius = std::min(0.3, 0.45 * gap);
        }
        const auto res = residue_matrices(r.pencil, rec.rho, rec.multiplicity, radius, r.settings);
        for (std::size_t nu = 0; nu < res.size(); ++nu)
            add_matrix_rows(t, {rec.rho, static_cast<long long>(rec.multiplicity), radius, static_cast<long long>(nu + 1)},
                            {&res[nu]});
    }
    return {"residues", "", {t}};
}

Document cmd_asympt(const Resolved& r, const Options& o) {
    if (o.rays.empty()) throw ValidationError("asympt needs at least one --ray");
    std::vector<SectorRay> rays;
    for (const auto& s : o.rays) rays.push_back(parse_ray(s));
    std::vector<SolutionKind> kinds;
    if (o.kinds.empty())
        kinds = {SolutionKind::C,        SolutionKind::S,        SolutionKind::phi,
                 SolutionKind::psi,      SolutionKind::Phi,      SolutionKind::M,
                 SolutionKind::phi_star, SolutionKind::psi_star, SolutionKind::Phi_star};
    else
        for (const auto& k : o.kinds) kinds.push_back(kind_from_name(k));
    std::vector<int> nus;
    for (double v : parse_real_list(o.nus.empty() ? std::vector<std::string>{"0,1"} : o.nus, "--nu")) {
        if (v != 0.0 && v != 1.0) throw ValidationError("--nu values must be 0 or 1");
        nus.push_back(static_cast<int>(v));
    }
    if (!(o.x > 0.0 && o.x < kPi)) throw ValidationError("--x must lie in (0, pi)");
    const auto tf = solve_transport(r.pencil, r.settings);

    Table samples{"samples",
                  {{"kind", ColType::Text}, {"nu", ColType::Int}, {"ray", ColType::Int}, {"rho", ColType::Complex},
                   {"remainder", ColType::Real}, {"noise", ColType::Real}},
                  {}};
    Table fits{"fits",
               {{"kind", ColType::Text}, {"nu", ColType::Int}, {"ray", ColType::Int}, {"sign", ColType::Int},
                {"arg", ColType::Real}, {"x", ColType::Real}, {"slope", ColType::Real}, {"intercept", ColType::Real},
                {"fit_residual", ColType::Real}, {"claimed_order", ColType::Int}, {"exact", ColType::Int}},
               {}};
    for (std::size_t ri = 0; ri < rays.size(); ++ri)
        for (auto kind : kinds)
            for (int nu : nus) {
                if (kind == SolutionKind::M && nu != 0) continue;
                const double x = kind == SolutionKind::M ? 0.0 : o.x;
                const auto f = residual_decay(kind, r.pencil, x, nu, rays[ri], r.settings, tf);
                for (std::size_t k = 0; k < f.moduli.size(); ++k)
                    samples.add({kind_name(kind), static_cast<long long>(nu), static_cast<long long>(ri),
                                 rays[ri].point(k), f.remainders[k], f.noise[k]});
                fits.add({kind_name(kind), static_cast<long long>(nu), static_cast<long long>(ri),
                          static_cast<long long>(rays[ri].sign), rays[ri].arg, x, f.slope, f.intercept, f.residual,
                          static_cast<long long>(f.claimed_order), static_cast<long long>(f.exact_to_precision)});
            }
    return {"asympt", "", {fits, samples}};
}

Document cmd_uniq(const Resolved& r, const Options& o) {
    const auto pair = PencilPair::make(r.pencil, *r.pencil2, r.settings);
    IdentityOptions io;
    io.rhos = parse_rho_list(o.rho_list);
    if (io.rhos.empty()) throw ValidationError("uniq needs --rho-list");
    io.xs = o.x_list.empty() ? std::vector<double>{kPi / 6, kPi / 3, kPi / 2, 2 * kPi / 3} : parse_real_list(o.x_list, "--x-list");
    for (const auto& s : o.rays) io.rays.push_back(parse_ray(s));
    bool plus = false, minus = false;
    for (const auto& ray : io.rays) (ray.sign > 0 ? plus : minus) = true;
    io.estimate_h1 = plus && minus;
    io.omega_grid_points = r.settings.grid_points;
    const auto rep = check_identities(pair, io, r.settings);

    Table checks{"checks", {{"name", ColType::Text}, {"value", ColType::Real}}, {}};
    for (const auto& [name, value] : rep.checks()) checks.add({name, value});
    Table fits{"fits",
               {{"sign", ColType::Int}, {"arg", ColType::Real}, {"quantity", ColType::Text}, {"slope", ColType::Real},
                {"claimed_order", ColType::Int}, {"exact", ColType::Int}},
               {}};
    for (const auto& f : rep.fits) {
        fits.add({static_cast<long long>(f.sign), f.arg, std::string("P11-Omega"), f.p11.slope,
                  static_cast<long long>(f.p11.claimed_order), static_cast<long long>(f.p11.exact_to_precision)});
        fits.add({static_cast<long long>(f.sign), f.arg, std::string("rho*P12-Lambda"), f.p12.slope,
                  static_cast<long long>(f.p12.claimed_order), static_cast<long long>(f.p12.exact_to_precision)});
    }
    const auto ol = omega_lambda(pair, r.settings.grid_points);
    Table omega{"omega",
                {{"x", ColType::Real}, {"i", ColType::Int}, {"j", ColType::Int}, {"Omega", ColType::Complex},
                 {"Lambda", ColType::Complex}, {"derivative_residual", ColType::Real}},
                {}};
    for (std::size_t k = 0; k < ol.x.size(); ++k)
        add_matrix_rows(omega, {ol.x[k]}, {&ol.Omega[k], &ol.Lambda[k]}, {ol.residual[k]});
    return {"uniq", "", {checks, fits, omega}};
}

Pencil acquire(const std::string& path, bool has_seed, std::uint64_t seed, int dim, const char* flag,
               const char* seed_flag) {
    if (!path.empty() && has_seed)
        throw ValidationError(std::string("give only one of ") + flag + " and " + seed_flag);
    if (!path.empty()) return load_pencil(path);
    if (has_seed) {
        if (dim < 1) throw ValidationError("--dim must be positive");
        return random_pencil(seed, {.m = dim});
    }
    throw ValidationError(std::string("missing ") + flag + " (or " + seed_flag + ")");
}

void error_record(std::ostream& err, const std::string& command, const char* kind, const std::string& message) {
    ojson j;
    j["error"] = kind;
    j["command"] = command;
    j["message"] = message;
    err << j.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral analysis of matrix quadratic pencils on [0, pi]", "qpencil"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    Options o;

    app.add_option("--pencil", o.pencil_path, "Pencil config (JSON)");
    auto* pencil2_opt = app.add_option("--pencil2", o.pencil2_path, "Second pencil config for uniq");
    app.add_option("--out", o.out_path, "Output file (default: stdout)");
    app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--rtol", o.rtol, "Integrator relative tolerance");
    app.add_option("--atol", o.atol, "Integrator absolute tolerance");
    app.add_option("--jobs", o.jobs, "Worker threads");
    auto* seed_opt = app.add_option("--seed", o.seed, "Use a random pencil with this seed instead of --pencil");
    auto* seed2_opt = app.add_option("--seed2", o.seed2, "Random second pencil for uniq");
    app.add_option("--dim", o.dim, "Dimension of random pencils");
    app.add_option("--grid-points", o.grid_points, "Output grid size on [0, pi]");

    auto* validate = app.add_subcommand("validate", "Admissibility report");
    auto* solve = app.add_subcommand("solve", "C, S, phi, psi, Phi trajectories");
    solve->add_option("--rho-list", o.rho_list, "Comma-separated rho values")->required();
    solve->add_option("--kinds", o.kinds, "Subset of C,S,phi,psi,Phi")->delimiter(',');
    auto* weyl = app.add_subcommand("weyl", "Weyl matrix by both routes");
    weyl->add_option("--rho-list", o.rho_list, "Comma-separated rho values")->required();
    auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues with multiplicities");
    auto* residues = app.add_subcommand("residues", "Laurent coefficients of M at the eigenvalues");
    for (auto* sub : {spectrum, residues}) {
        sub->add_option("--region", o.region, "Rectangle x0,x1,y0,y1");
        sub->add_option("--contour", o.contour, "Circle c,r,N");
    }
    residues->add_option("--radius", o.radius, "Residue contour radius (default: automatic)");
    auto* asympt = app.add_subcommand("asympt", "Asymptotic remainders and decay fits");
    asympt->add_option("--ray", o.rays, "sign,delta,arg,modulus,modulus,... (repeatable)")->required();
    asympt->add_option("--kinds", o.kinds, "Subset of C,S,phi,psi,Phi,M,phi*,psi*,Phi*")->delimiter(',');
    asympt->add_option("--nu", o.nus, "Derivative orders (0,1)");
    asympt->add_option("--x", o.x, "Abscissa in (0, pi)");
    auto* uniq = app.add_subcommand("uniq", "Identity report for a pencil pair");
    uniq->add_option("--rho-list", o.rho_list, "Comma-separated rho samples")->required();
    uniq->add_option("--x-list", o.x_list, "Interior abscissae");
    uniq->add_option("--ray", o.rays, "sign,delta,arg,modulus,... (repeatable)");

    std::string command = "qpencil";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        error_record(err, subs.empty() ? command : subs.front()->get_name(), "usage", e.what());
        return kExitValidation;
    }
    const auto* sub = app.get_subcommands().front();
    command = sub->get_name();

    try {
        Resolved r;
        r.settings.rtol = o.rtol;
        r.settings.atol = o.atol;
        r.settings.jobs = o.jobs;
        r.settings.grid_points = o.grid_points;
        r.settings.check();
        r.pencil = acquire(o.pencil_path, seed_opt->count() > 0, o.seed, o.dim, "--pencil", "--seed");
        if (sub == uniq)
            r.pencil2 = acquire(o.pencil2_path, seed2_opt->count() > 0, o.seed2, o.dim, "--pencil2", "--seed2");
        else if (pencil2_opt->count() > 0 || seed2_opt->count() > 0)
            throw ValidationError("--pencil2 / --seed2 apply to uniq only");
        if (sub != validate) require_valid(r.pencil);

        // Everything that determines the output except the destination and thread count.
        ojson cfg;
        cfg["command"] = command;
        ojson opts = ojson::object();
        for (const CLI::App* a : {static_cast<const CLI::App*>(&app), sub})
            for (const CLI::Option* opt : a->get_options()) {
                const auto name = opt->get_name();
                if (opt->count() == 0 || name == "--out" || name == "--jobs" || name == "--help" || name == "--pencil" ||
                    name == "--pencil2")
                    continue;
                opts[name] = opt->results();
            }
        cfg["options"] = opts;
        cfg["pencil"] = pencil_to_json(r.pencil);
        if (r.pencil2) cfg["pencil2"] = pencil_to_json(*r.pencil2);
        char hash[32];
        std::snprintf(hash, sizeof hash, "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a64(cfg.dump())));

        bool admissible = true;
        Document doc;
        if (sub == validate) doc = cmd_validate(r, admissible);
        else if (sub == solve) doc = cmd_solve(r, o);
        else if (sub == weyl) doc = cmd_weyl(r, o);
        else if (sub == spectrum) doc = cmd_spectrum(r, o);
        else if (sub == residues) doc = cmd_residues(r, o);
        else if (sub == asympt) doc = cmd_asympt(r, o);
        else doc = cmd_uniq(r, o);
        doc.config_hash = hash;

        std::ofstream file;
        if (!o.out_path.empty()) {
            file.open(o.out_path);
            if (!file) throw ValidationError("cannot write " + o.out_path);
        }
        std::ostream& os = o.out_path.empty() ? out : file;
        if (o.format == "json")
            write_json(doc, os);
        else
            write_csv(doc, os);
        if (!os) throw ValidationError("write failed");

        if (!admissible) {
            error_record(err, command, "validation", "pencil is not admissible");
            return kExitValidation;
        }
        return kExitOk;
    } catch (const ValidationError& e) {
        error_record(err, command, e.kind(), e.what());
        return kExitValidation;
    } catch (const Error& e) {
        error_record(err, command, e.kind(), e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        error_record(err, command, "internal", e.what());
        return kExitNumerical;
    }
}

}  // namespace qpencil
