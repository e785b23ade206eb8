#include <fstream>
#include <sstream>

#include "qpencil/errors.hpp"
#include "qpencil/pencil.hpp"

namespace qpencil {

using nlohmann::json;

json matrix_to_json(const Mat& a) {
    json rows = json::array();
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        json row = json::array();
        for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back({a(j, k).real(), a(j, k).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

cplx complex_from_json(const json& v) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw ValidationError("complex entry must be a number or [re, im], got " + v.dump());
}

}  // namespace

Mat matrix_from_json(const json& j, Eigen::Index m) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m)
        throw ValidationError("expected " + std::to_string(m) + " matrix rows");
    Mat a(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m)
            throw ValidationError("expected " + std::to_string(m) + " entries in matrix row");
        for (Eigen::Index c = 0; c < m; ++c) a(r, c) = complex_from_json(row[c]);
    }
    return a;
}

namespace {

std::vector<Mat> matrices_from_json(const json& j, Eigen::Index m, const char* what) {
    if (!j.is_array() || j.empty()) throw ValidationError(std::string(what) + ": non-empty list required");
    std::vector<Mat> out;
    for (const auto& item : j) out.push_back(matrix_from_json(item, m));
    return out;
}

CoefficientFunction coefficient_from_json(const json& j, Eigen::Index m, const char* name) {
    if (j.is_null()) return CoefficientFunction::zero(m);
    if (!j.is_object() || !j.contains("type"))
        throw ValidationError(std::string(name) + ": object with a \"type\" field required");
    const auto type = j.at("type").get<std::string>();
    const bool deriv = j.value("derivative", true);
    if (type == "poly") return CoefficientFunction::polynomial(matrices_from_json(j.at("coeffs"), m, name), deriv);
    if (type == "cheb") return CoefficientFunction::chebyshev(matrices_from_json(j.at("coeffs"), m, name), deriv);
    if (type == "grid") {
        auto x = j.at("x").get<std::vector<double>>();
        return CoefficientFunction::grid(std::move(x), matrices_from_json(j.at("values"), m, name), deriv);
    }
    throw ValidationError(std::string(name) + ": unknown coefficient type \"" + type + "\"");
}

json coefficient_to_json(const CoefficientFunction& f) {
    json j;
    json mats = json::array();
    for (const auto& a : f.payload()) mats.push_back(matrix_to_json(a));
    switch (f.kind()) {
    case CoefficientKind::Polynomial:
        j["type"] = "poly";
        j["coeffs"] = std::move(mats);
        break;
    case CoefficientKind::Chebyshev:
        j["type"] = "cheb";
        j["coeffs"] = std::move(mats);
        break;
    case CoefficientKind::Grid:
        j["type"] = "grid";
        j["x"] = f.nodes();
        j["values"] = std::move(mats);
        break;
    }
    j["derivative"] = f.has_derivative();
    return j;
}

}  // namespace

Pencil pencil_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw ValidationError("pencil config must be a JSON object");
        const auto m = doc.at("m").get<Eigen::Index>();
        if (m < 1) throw ValidationError("m must be positive");
        Pencil p;
        p.m = m;
        p.Q1 = coefficient_from_json(doc.value("Q1", json()), m, "Q1");
        p.Q0 = coefficient_from_json(doc.value("Q0", json()), m, "Q0");
        auto mat = [&](const char* key) { return doc.contains(key) ? matrix_from_json(doc.at(key), m) : zeros(m); };
        p.h0 = mat("h0");
        p.h1 = mat("h1");
        p.H0 = mat("H0");
        p.H1 = mat("H1");
        return p;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("pencil config: ") + e.what());
    }
}

json pencil_to_json(const Pencil& p) {
    json doc;
    doc["m"] = p.m;
    doc["Q1"] = coefficient_to_json(p.Q1);
    doc["Q0"] = coefficient_to_json(p.Q0);
    doc["h0"] = matrix_to_json(p.h0);
    doc["h1"] = matrix_to_json(p.h1);
    doc["H0"] = matrix_to_json(p.H0);
    doc["H1"] = matrix_to_json(p.H1);
    return doc;
}

Pencil load_pencil(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pencil config " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError("pencil config " + path + ": " + e.what());
    }
    return pencil_from_json(doc);
}

void save_pencil(const Pencil& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << pencil_to_json(p).dump(2) << "\n";
}

}  // namespace qpencil
