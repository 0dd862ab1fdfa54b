// model_io.cpp — Model file parsing and serialization

#include "qdsf/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qdsf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw ParseError(path + ": " + what);
}

double number_at(const json& j, const std::string& path)
{
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

} // namespace

json matrix_to_json(const Matrix& m)
{
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json re_row = json::array();
        json im_row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            re_row.push_back(m(i, k).real());
            im_row.push_back(m(i, k).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    return json{{"dim", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Matrix matrix_from_json(const json& j, const std::string& path)
{
    if (!j.is_object()) fail(path, "expected a matrix object");
    if (!j.contains("dim") || !j["dim"].is_number_integer()) {
        fail(path + ".dim", "expected a positive integer");
    }
    const Eigen::Index d = j["dim"].get<Eigen::Index>();
    if (d < 1) fail(path + ".dim", "expected a positive integer");
    if (!j.contains("re")) fail(path + ".re", "missing");

    auto read_part = [&](const json& part, const std::string& name) {
        if (!part.is_array() || Eigen::Index(part.size()) != d) {
            fail(path + "." + name, "expected " + std::to_string(d) + " rows");
        }
        Eigen::MatrixXd out(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const json& row = part[std::size_t(i)];
            if (!row.is_array() || Eigen::Index(row.size()) != d) {
                fail(path + "." + name + "[" + std::to_string(i) + "]",
                     "expected " + std::to_string(d) + " entries");
            }
            for (Eigen::Index k = 0; k < d; ++k) {
                out(i, k) = number_at(row[std::size_t(k)],
                                      path + "." + name + "[" + std::to_string(i) + "][" +
                                          std::to_string(k) + "]");
            }
        }
        return out;
    };

    const Eigen::MatrixXd re = read_part(j["re"], "re");
    Eigen::MatrixXd im = Eigen::MatrixXd::Zero(d, d);
    if (j.contains("im")) im = read_part(j["im"], "im");
    return re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
}

namespace {

SpectralTable table_from_json(const json& j, const std::string& path, Eigen::Index n,
                              bool positive_only)
{
    SpectralTable out;
    if (!j.is_object()) fail(path, "expected an object");
    if (j.contains("form")) {
        if (j["form"] != "flat") fail(path + ".form", "unknown named form");
        if (!j.contains("gamma")) fail(path + ".gamma", "missing");
        const double gamma = number_at(j["gamma"], path + ".gamma");
        if (gamma < 0.0) fail(path + ".gamma", "must be non-negative");
        return SpectralTable::flat_form(gamma);
    }
    if (!j.contains("omega_values") || !j["omega_values"].is_array()) {
        fail(path + ".omega_values", "expected an array");
    }
    if (!j.contains("matrices") || !j["matrices"].is_array()) {
        fail(path + ".matrices", "expected an array");
    }
    if (j["omega_values"].size() != j["matrices"].size()) {
        fail(path, "omega_values and matrices must have equal length");
    }
    out.form = SpectralTable::Form::table;
    for (std::size_t i = 0; i < j["omega_values"].size(); ++i) {
        const double omega = number_at(j["omega_values"][i],
                                       path + ".omega_values[" + std::to_string(i) + "]");
        if (positive_only && omega < 0.0) {
            fail(path + ".omega_values[" + std::to_string(i) + "]",
                 "h is specified on omega >= 0 only");
        }
        Matrix m = matrix_from_json(j["matrices"][i],
                                    path + ".matrices[" + std::to_string(i) + "]");
        if (m.rows() != n) {
            fail(path + ".matrices[" + std::to_string(i) + "]",
                 "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
        }
        out.omegas.push_back(omega);
        out.matrices.push_back(std::move(m));
    }
    return out;
}

void validate_h_entries(const SpectralTable& h, const std::string& path)
{
    if (h.form != SpectralTable::Form::table) return;
    for (std::size_t i = 0; i < h.omegas.size(); ++i) {
        const Matrix& m = h.matrices[i];
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
            std::ostringstream os;
            os << "h matrix at omega = " << h.omegas[i] << " is not Hermitian";
            fail(path, os.str());
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
        if (es.eigenvalues().minCoeff() < -1e-10) {
            std::ostringstream os;
            os << "h matrix at omega = " << h.omegas[i] << " is not PSD";
            fail(path, os.str());
        }
    }
}

} // namespace

ModelFile parse_model(const json& j)
{
    ModelFile out;
    if (!j.is_object()) fail("$", "expected a model object");
    if (!j.contains("system") || !j["system"].is_object()) {
        fail("system", "missing or not an object");
    }
    if (!j["system"].contains("H_S")) fail("system.H_S", "missing");
    out.h_sys = matrix_from_json(j["system"]["H_S"], "system.H_S");
    if ((out.h_sys - out.h_sys.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
        fail("system.H_S", "must be Hermitian");
    }

    if (!j.contains("reservoirs") || !j["reservoirs"].is_array() ||
        j["reservoirs"].empty()) {
        fail("reservoirs", "expected a non-empty array");
    }
    for (std::size_t r = 0; r < j["reservoirs"].size(); ++r) {
        const std::string base = "reservoirs[" + std::to_string(r) + "]";
        const json& jr = j["reservoirs"][r];
        if (!jr.is_object()) fail(base, "expected an object");

        ReservoirSpec res;
        if (!jr.contains("beta")) fail(base + ".beta", "missing");
        res.beta = number_at(jr["beta"], base + ".beta");
        if (res.beta <= 0.0) fail(base + ".beta", "must be positive");

        if (!jr.contains("couplings") || !jr["couplings"].is_array() ||
            jr["couplings"].empty()) {
            fail(base + ".couplings", "expected a non-empty array");
        }
        for (std::size_t k = 0; k < jr["couplings"].size(); ++k) {
            const std::string cpath = base + ".couplings[" + std::to_string(k) + "]";
            Matrix q = matrix_from_json(jr["couplings"][k], cpath);
            if (q.rows() != out.h_sys.rows()) {
                fail(cpath, "coupling dimension does not match H_S");
            }
            if ((q - q.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
                fail(cpath, "must be Hermitian");
            }
            res.couplings.push_back(std::move(q));
        }

        if (!jr.contains("h")) fail(base + ".h", "missing");
        res.h = table_from_json(jr["h"], base + ".h", res.coupling_count(),
                                /*positive_only=*/true);
        validate_h_entries(res.h, base + ".h");

        if (jr.contains("s")) {
            res.s = table_from_json(jr["s"], base + ".s", res.coupling_count(),
                                    /*positive_only=*/false);
        }
        out.reservoirs.push_back(std::move(res));
    }
    return out;
}

ModelFile load_model_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open model file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_model(j);
}

json model_to_json(const ModelFile& m)
{
    json out;
    out["system"]["H_S"] = matrix_to_json(m.h_sys);
    out["reservoirs"] = json::array();
    for (const ReservoirSpec& res : m.reservoirs) {
        json jr;
        jr["beta"] = res.beta;
        jr["couplings"] = json::array();
        for (const Matrix& q : res.couplings) jr["couplings"].push_back(matrix_to_json(q));
        if (res.h.form == SpectralTable::Form::flat) {
            jr["h"] = json{{"form", "flat"}, {"gamma", res.h.gamma}};
        } else {
            json t;
            t["omega_values"] = res.h.omegas;
            t["matrices"] = json::array();
            for (const Matrix& hm : res.h.matrices) t["matrices"].push_back(matrix_to_json(hm));
            jr["h"] = std::move(t);
        }
        if (res.s) {
            json t;
            t["omega_values"] = res.s->omegas;
            t["matrices"] = json::array();
            for (const Matrix& sm : res.s->matrices) t["matrices"].push_back(matrix_to_json(sm));
            jr["s"] = std::move(t);
        }
        out["reservoirs"].push_back(std::move(jr));
    }
    return out;
}

WeakCouplingModel assemble_model_file(const ModelFile& file, const Tolerances& tol)
{
    return assemble(make_system(file.h_sys, tol), file.reservoirs, tol);
}

json report_to_json(const PropertyReport& rep)
{
    return json{{"name", rep.name},
                {"passed", rep.passed},
                {"residual", rep.residual},
                {"details", rep.details}};
}

} // namespace qdsf
