// qdsfluct.cpp — Command-line front end: model validation, CGF scans,
// rate functions, symmetry and linear-response checks, trajectory sampling
// and the trajectory-vs-exact comparison.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdsf/fcs.hpp"
#include "qdsf/model_io.hpp"
#include "qdsf/unravel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qdsf;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 I/O
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct RunConfig {
    std::string model_path;
    std::string command;
    std::string alpha_box_spec;
    int resolution = 21;
    std::vector<double> t_values;
    int samples = 100000;
    std::uint64_t seed = 1;
    std::string out_dir = "qdsfluct_out";
    bool force = false;
    bool dump_trajectories = false;
    std::vector<std::string> tol_overrides;
};

std::string g17(double x)
{
    if (x == 0.0) x = 0.0; // canonicalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::pair<double, double>> parse_alpha_box(const std::string& spec, int dims)
{
    std::vector<std::pair<double, double>> box;
    if (spec.empty()) {
        box.assign(std::size_t(dims), {-1.0, 2.0});
        return box;
    }
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos) {
            throw ParseError("--alpha-box: expected a:b[,a:b...], got '" + spec + "'");
        }
        const double lo = std::stod(part.substr(0, colon));
        const double hi = std::stod(part.substr(colon + 1));
        if (hi <= lo) throw ParseError("--alpha-box: empty range in '" + part + "'");
        box.emplace_back(lo, hi);
    }
    if (box.size() == 1 && dims > 1) {
        box.assign(std::size_t(dims), box.front());
    }
    if (int(box.size()) != dims) {
        throw ParseError("--alpha-box: expected " + std::to_string(dims) + " ranges");
    }
    return box;
}

Tolerances parse_tolerances(const std::vector<std::string>& overrides)
{
    Tolerances tol;
    std::map<std::string, double*> fields = {
        {"herm", &tol.herm},   {"trace", &tol.trace},       {"psd", &tol.psd},
        {"eig", &tol.eig},     {"exp", &tol.exp},           {"faithful", &tol.faithful},
        {"bohr", &tol.bohr},   {"check", &tol.check}};
    for (const std::string& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            throw ParseError("--tol: expected name=value, got '" + ov + "'");
        }
        const std::string name = ov.substr(0, eq);
        const auto it = fields.find(name);
        if (it == fields.end()) {
            throw ParseError("--tol: unknown tolerance '" + name + "'");
        }
        *it->second = std::stod(ov.substr(eq + 1));
    }
    return tol;
}

json tolerances_to_json(const Tolerances& tol)
{
    return json{{"herm", tol.herm},         {"trace", tol.trace}, {"psd", tol.psd},
                {"eig", tol.eig},           {"exp", tol.exp},
                {"faithful", tol.faithful}, {"bohr", tol.bohr},   {"check", tol.check}};
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json config_to_json(const RunConfig& cfg)
{
    return json{{"model", cfg.model_path},
                {"command", cfg.command},
                {"alpha_box", cfg.alpha_box_spec},
                {"resolution", cfg.resolution},
                {"t", cfg.t_values},
                {"samples", cfg.samples},
                {"seed", cfg.seed},
                {"out", cfg.out_dir},
                {"tol", cfg.tol_overrides}};
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    out << text;
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

void write_manifest(const RunConfig& cfg, const Tolerances& tol,
                    const std::vector<std::string>& outputs)
{
    json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = cfg.command;
    manifest["config"] = config_to_json(cfg);
    manifest["tolerances"] = tolerances_to_json(tol);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  (unsigned long long)fnv1a(manifest.dump()));
    manifest["config_hash"] = hash;
    manifest["outputs"] = outputs;
    write_text(fs::path(cfg.out_dir) / (cfg.command + "_manifest.json"),
               manifest.dump(2) + "\n");
}

std::string alpha_header(int m)
{
    std::string h;
    for (int j = 0; j < m; ++j) h += "alpha" + std::to_string(j + 1) + ",";
    return h;
}

json real_matrix_to_json(const RealMatrix& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- commands -------------------------------------------------------------

int cmd_validate(const RunConfig& cfg, const Tolerances& tol)
{
    const ModelFile file = load_model_file(cfg.model_path);
    const SystemSpec sys = make_system(file.h_sys, tol);

    std::vector<PropertyReport> reports;
    bool db_ok = true;
    WeakCouplingModel model;
    try {
        model = assemble(sys, file.reservoirs, tol);
    } catch (const std::exception& e) {
        PropertyReport rep;
        rep.name = "assembly";
        rep.passed = false;
        rep.details = e.what();
        reports.push_back(rep);
        db_ok = false;
    }

    if (db_ok) {
        const TimeReversal theta = TimeReversal::conjugation(model.dim());
        for (int j = 0; j < model.reservoir_count(); ++j) {
            PropertyReport db =
                detailed_balance_check(model.subs[j].rho_ref, model.subs[j].lind, tol);
            db.name = "detailed_balance[" + std::to_string(j) + "]";
            db_ok = db_ok && db.passed;
            reports.push_back(db);

            PropertyReport tr =
                time_reversal_check(theta, model.subs[j].rho_ref, model.subs[j].lind, tol);
            tr.name = "time_reversal[" + std::to_string(j) + "]";
            reports.push_back(tr);
        }

        std::vector<Matrix> all_q;
        for (const ReservoirSpec& res : file.reservoirs) {
            for (const Matrix& q : res.couplings) all_q.push_back(q);
        }
        reports.push_back(spohn_condition(all_q, file.h_sys, tol));
        reports.push_back(irreducible(model.total.phi, model.dim(), tol));
        reports.push_back(positivity_improving_check(model.total, tol));
    }

    json out;
    out["reports"] = json::array();
    for (const PropertyReport& rep : reports) out["reports"].push_back(report_to_json(rep));
    const bool er_ok = db_ok && model.flags.er;
    out["hypotheses"] = json{{"DB", db_ok},
                             {"ER", er_ok},
                             {"TR", db_ok && model.flags.tri},
                             {"KMS", db_ok}};
    out["passed"] = db_ok && er_ok;

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "validation.json", out.dump(2) + "\n");
    write_manifest(cfg, tol, {"validation.json"});

    for (const PropertyReport& rep : reports) {
        std::printf("%-28s %-6s residual %-12s %s\n", rep.name.c_str(),
                    rep.passed ? "pass" : "FAIL", g17(rep.residual).c_str(),
                    rep.details.c_str());
    }
    std::printf("hypotheses: DB=%s ER=%s TR=%s KMS=%s\n", db_ok ? "yes" : "no",
                er_ok ? "yes" : "no", (db_ok && model.flags.tri) ? "yes" : "no",
                db_ok ? "yes" : "no");
    return out["passed"].get<bool>() ? kExitOk : kExitValidation;
}

WeakCouplingModel load_checked(const RunConfig& cfg, const Tolerances& tol)
{
    const ModelFile file = load_model_file(cfg.model_path);
    WeakCouplingModel model = assemble_model_file(file, tol);
    if (!model.flags.er && !cfg.force) {
        throw std::invalid_argument(
            "model fails the ergodicity hypothesis; rerun with --force to proceed");
    }
    return model;
}

int cmd_cgf_scan(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const int m = model.reservoir_count();
    const auto box = parse_alpha_box(cfg.alpha_box_spec, m);
    const CGFScan scan = scan_cgf(model, box, cfg.resolution, tol);

    std::ostringstream csv;
    csv << alpha_header(m) << "e,gap\n";
    for (std::size_t i = 0; i < scan.grid.size(); ++i) {
        for (int j = 0; j < m; ++j) csv << g17(scan.grid[i](j)) << ",";
        csv << g17(scan.values[i]) << "," << g17(scan.gaps[i]) << "\n";
    }

    // derivative data at alpha = 0
    const RealVector grad = cgf_gradient0(model, tol);
    const RealMatrix hess = cgf_hessian0(model, tol);
    json summary;
    summary["gradient0"] = std::vector<double>(grad.data(), grad.data() + m);
    summary["hessian0"] = real_matrix_to_json(hess);
    summary["asymptotic_mean"] = [&] {
        const RealVector sb = -grad;
        return std::vector<double>(sb.data(), sb.data() + m);
    }();

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "cgf_scan.csv", csv.str());
    write_text(fs::path(cfg.out_dir) / "cgf_scan_summary.json", summary.dump(2) + "\n");
    write_manifest(cfg, tol, {"cgf_scan.csv", "cgf_scan_summary.json"});
    std::printf("cgf-scan: %zu points written\n", scan.grid.size());
    return kExitOk;
}

int cmd_rate_function(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const int m = model.reservoir_count();
    const auto box = parse_alpha_box(cfg.alpha_box_spec, m);
    const RealVector sigma_bar = -cgf_gradient0(model, tol);

    // Scan along the admissible direction inside the conservation hyperplane
    // beta^{-1}·sigma = 0; at equilibrium (sigma_bar = 0) pick a hyperplane
    // basis direction instead.
    RealVector direction = sigma_bar;
    if (direction.cwiseAbs().maxCoeff() < 1e-12 && m > 1) {
        const RealVector beta_inv = model.betas().cwiseInverse();
        direction = RealVector::Unit(m, 0) -
                    (beta_inv(0) / beta_inv.squaredNorm()) * beta_inv;
        direction *= 0.1 / direction.norm();
    }

    std::ostringstream csv;
    for (int j = 0; j < m; ++j) csv << "sigma" << j + 1 << ",";
    csv << "I\n";
    const int n = std::max(2, cfg.resolution);
    for (int i = 0; i < n; ++i) {
        const double s = -1.5 + 3.0 * double(i) / double(n - 1);
        const RealVector sigma = s * direction;
        const RateFunctionResult r = rate_function(model, box, sigma, tol);
        for (int j = 0; j < m; ++j) csv << g17(sigma(j)) << ",";
        csv << (r.infinite ? "inf" : g17(r.value)) << "\n";
    }
    if (m > 1) {
        // one off-hyperplane probe: under the KMS hypothesis the rate
        // function is infinite there
        const RealVector off = sigma_bar + 0.3 * model.betas();
        const RateFunctionResult r = rate_function(model, box, off, tol);
        for (int j = 0; j < m; ++j) csv << g17(off(j)) << ",";
        csv << (r.infinite ? "inf" : g17(r.value)) << "\n";
    }

    const RateFunctionResult at_mean = rate_function(model, box, sigma_bar, tol);
    const RateFunctionResult at_mirror =
        rate_function(model, box, RealVector(-sigma_bar), tol);
    json summary;
    summary["sigma_bar"] = std::vector<double>(sigma_bar.data(), sigma_bar.data() + m);
    summary["I_at_mean"] = at_mean.value;
    summary["I_at_minus_mean"] = at_mirror.value;
    summary["fluctuation_residual"] =
        std::abs(at_mirror.value - at_mean.value - sigma_bar.sum());

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "rate_function.csv", csv.str());
    write_text(fs::path(cfg.out_dir) / "rate_function.json", summary.dump(2) + "\n");
    write_manifest(cfg, tol, {"rate_function.csv", "rate_function.json"});
    std::printf("rate-function: I(mean) = %s, fluctuation residual = %s\n",
                g17(at_mean.value).c_str(),
                g17(summary["fluctuation_residual"].get<double>()).c_str());
    return kExitOk;
}

int cmd_symmetry_check(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const int m = model.reservoir_count();
    const auto box = parse_alpha_box(cfg.alpha_box_spec, m);
    const std::vector<RealVector> grid = make_grid(box, cfg.resolution);
    const std::vector<double> lambdas = {-1.0, 0.5, 2.0};

    std::ostringstream csv;
    csv << alpha_header(m) << "e,e_mirrored,es_residual\n";
    double es_resid = 0.0;
    for (const RealVector& a : grid) {
        const double e_a = cgf(model, a, tol);
        const double e_m = cgf(model, RealVector(RealVector::Ones(m) - a), tol);
        es_resid = std::max(es_resid, std::abs(e_m - e_a));
        for (int j = 0; j < m; ++j) csv << g17(a(j)) << ",";
        csv << g17(e_a) << "," << g17(e_m) << "," << g17(std::abs(e_m - e_a)) << "\n";
    }

    const TranslationCheck tc = translation_symmetry_check(model, grid, lambdas, tol);
    const EnergeticSymmetryCheck ec = energetic_symmetry_check(model, grid, lambdas, tol);

    json summary;
    summary["tri"] = model.flags.tri;
    summary["es_residual"] = es_resid;
    summary["es_asserted"] = model.flags.tri;
    summary["translation"] = json{{"value_residual", tc.value_residual},
                                  {"spectrum_residual", tc.spectrum_residual},
                                  {"similarity_residual", tc.similarity_residual}};
    summary["energetic"] = json{{"translation_residual", ec.translation_residual},
                                {"es_residual", ec.es_residual}};
    const bool ok = (!model.flags.tri || es_resid <= 1e-8) &&
                    tc.value_residual <= 1e-8 && tc.spectrum_residual <= 1e-8 &&
                    ec.translation_residual <= 1e-8 &&
                    (!model.flags.tri || ec.es_residual <= 1e-8);
    summary["passed"] = ok;

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "symmetry.csv", csv.str());
    write_text(fs::path(cfg.out_dir) / "symmetry.json", summary.dump(2) + "\n");
    write_manifest(cfg, tol, {"symmetry.csv", "symmetry.json"});
    std::printf("symmetry-check: ES %s translation %s energetic %s -> %s\n",
                g17(es_resid).c_str(), g17(tc.value_residual).c_str(),
                g17(std::max(ec.translation_residual, ec.es_residual)).c_str(),
                ok ? "pass" : "FAIL");
    return ok ? kExitOk : kExitNumerical;
}

int cmd_steady_state(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const Matrix rho = steady_state(model, tol);
    json out;
    out["rho_plus"] = matrix_to_json(rho);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    out["eigenvalues"] = std::vector<double>(es.eigenvalues().data(),
                                             es.eigenvalues().data() + model.dim());
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "steady_state.json", out.dump(2) + "\n");
    write_manifest(cfg, tol, {"steady_state.json"});
    std::printf("steady-state: min eigenvalue %s\n",
                g17(es.eigenvalues().minCoeff()).c_str());
    return kExitOk;
}

int cmd_fluxes(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const FluxSet fs_set = fluxes(model, tol);
    const Matrix rho_plus = steady_state(model, tol);
    const double sigma = entropy_production(model, rho_plus, tol);
    const int m = model.reservoir_count();

    json out;
    out["energy_flux"] =
        std::vector<double>(fs_set.mean_energy_flux.data(),
                            fs_set.mean_energy_flux.data() + m);
    out["entropy_flux"] =
        std::vector<double>(fs_set.mean_entropy_flux.data(),
                            fs_set.mean_entropy_flux.data() + m);
    out["entropy_production"] = sigma;
    out["first_law_residual"] = std::abs(fs_set.mean_energy_flux.sum());
    out["balance_residual"] = std::abs(sigma + fs_set.mean_entropy_flux.sum());

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "fluxes.json", out.dump(2) + "\n");
    write_manifest(cfg, tol, {"fluxes.json"});
    std::printf("fluxes: sigma = %s, first-law residual = %s\n", g17(sigma).c_str(),
                g17(out["first_law_residual"].get<double>()).c_str());
    return kExitOk;
}

int cmd_linear_response(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const LinearResponseReport rep = linear_response(model, 1e-4, tol);

    json out;
    out["kinetic"] = real_matrix_to_json(rep.kinetic);
    out["green_kubo"] = real_matrix_to_json(rep.green_kubo);
    out["hessian_route"] = real_matrix_to_json(rep.hessian_route);
    out["lebowitz_spohn"] = real_matrix_to_json(rep.lebowitz_spohn);
    out["fdt_covariance"] = real_matrix_to_json(rep.fdt_covariance);
    out["onsager_residual"] = rep.onsager_residual;
    out["column_residual"] = rep.column_residual;
    out["fdt_residual"] = rep.fdt_residual;
    out["pairwise_residual"] = rep.pairwise_residual;
    const bool ok = rep.pairwise_residual <= 1e-5 && rep.onsager_residual <= 1e-7 &&
                    rep.column_residual <= 1e-7 && rep.fdt_residual <= 1e-5;
    out["passed"] = ok;

    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "linear_response.json", out.dump(2) + "\n");
    write_manifest(cfg, tol, {"linear_response.json"});
    std::printf("linear-response: pairwise %s onsager %s columns %s fdt %s -> %s\n",
                g17(rep.pairwise_residual).c_str(), g17(rep.onsager_residual).c_str(),
                g17(rep.column_residual).c_str(), g17(rep.fdt_residual).c_str(),
                ok ? "pass" : "FAIL");
    return ok ? kExitOk : kExitNumerical;
}

int cmd_unravel(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const double t = cfg.t_values.empty() ? 5.0 : cfg.t_values.front();
    const Matrix rho = steady_state(model, tol);
    const EnsembleStats stats =
        sample_ensemble(model, rho, t, cfg.samples, cfg.seed, 0, tol);
    const int m = model.reservoir_count();

    json out;
    out["samples"] = stats.samples;
    out["t"] = t;
    out["seed"] = cfg.seed;
    const RealVector mean = mean_rates(stats);
    json mean_json = json::array();
    for (int j = 0; j < m; ++j) {
        const BootstrapEstimate est = bootstrap_mean(stats.rates.col(j), 200, cfg.seed);
        mean_json.push_back(json{{"mean", est.value},
                                 {"se", est.se},
                                 {"ci", {est.lo, est.hi}}});
    }
    out["rates"] = mean_json;
    out["asymptotic_mean"] = [&] {
        const RealVector sb = -cgf_gradient0(model, tol);
        return std::vector<double>(sb.data(), sb.data() + m);
    }();
    out["covariance"] = real_matrix_to_json(stats.horizon * rate_covariance(stats));

    fs::create_directories(cfg.out_dir);
    std::vector<std::string> outputs = {"ensemble_summary.json"};
    write_text(fs::path(cfg.out_dir) / "ensemble_summary.json", out.dump(2) + "\n");

    if (cfg.dump_trajectories) {
        const JumpSampler sampler(build_channels(model, tol), tol);
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho));
        std::ostringstream csv;
        csv << "trajectory_id,event_index,reservoir,quantum,time\n";
        const int dump_count = std::min(cfg.samples, 1000);
        for (int i = 0; i < dump_count; ++i) {
            CounterRng rng(cfg.seed, std::uint64_t(i));
            const double pick = rng.uniform();
            double acc = 0.0;
            Eigen::Index ket = 0;
            for (Eigen::Index w = 0; w < es.eigenvalues().size(); ++w) {
                acc += std::max(0.0, es.eigenvalues()(w));
                ket = w;
                if (pick <= acc) break;
            }
            const Trajectory traj = sampler.sample(es.eigenvectors().col(ket), t, rng);
            for (std::size_t e = 0; e < traj.events.size(); ++e) {
                csv << i << "," << e << "," << traj.events[e].reservoir << ","
                    << g17(traj.events[e].quantum) << "," << g17(traj.events[e].time)
                    << "\n";
            }
        }
        write_text(fs::path(cfg.out_dir) / "trajectories.csv", csv.str());
        outputs.push_back("trajectories.csv");
    }
    write_manifest(cfg, tol, outputs);
    std::printf("unravel: %d trajectories at t = %s\n", stats.samples, g17(t).c_str());
    return kExitOk;
}

int cmd_compare(const RunConfig& cfg, const Tolerances& tol)
{
    const WeakCouplingModel model = load_checked(cfg, tol);
    const int m = model.reservoir_count();
    const double t = cfg.t_values.empty() ? 5.0 : cfg.t_values.front();

    fs::create_directories(cfg.out_dir);
    const fs::path csv_path = fs::path(cfg.out_dir) / "compare.csv";
    const fs::path json_path = fs::path(cfg.out_dir) / "compare.json";
    if (!cfg.force && (fs::exists(csv_path) || fs::exists(json_path))) {
        throw std::ios_base::failure("compare outputs exist; pass --force to overwrite");
    }

    const Matrix rho = steady_state(model, tol);
    const EnsembleStats stats =
        sample_ensemble(model, rho, t, cfg.samples, cfg.seed, 0, tol);

    std::vector<std::pair<double, double>> box(std::size_t(m), {-0.2, 0.2});
    if (!cfg.alpha_box_spec.empty()) box = parse_alpha_box(cfg.alpha_box_spec, m);
    const int res = cfg.alpha_box_spec.empty() ? 3 : cfg.resolution;
    const std::vector<RealVector> grid = make_grid(box, res);

    std::ostringstream csv;
    csv << alpha_header(m) << "exact,empirical,se,z,pass\n";
    bool all_ok = true;
    int idx = 0;
    for (const RealVector& alpha : grid) {
        const double exact = std::exp(finite_time_cgf(model, rho, t, alpha, tol));
        const BootstrapEstimate est =
            bootstrap_laplace(stats, alpha, 200, cfg.seed + std::uint64_t(idx++));
        const double z = est.se > 0.0 ? (est.value - exact) / est.se : 0.0;
        const bool ok = std::abs(z) <= 3.0;
        all_ok = all_ok && ok;
        for (int j = 0; j < m; ++j) csv << g17(alpha(j)) << ",";
        csv << g17(exact) << "," << g17(est.value) << "," << g17(est.se) << ","
            << g17(z) << "," << (ok ? "1" : "0") << "\n";
    }

    json summary;
    summary["t"] = t;
    summary["samples"] = cfg.samples;
    summary["seed"] = cfg.seed;
    summary["grid_points"] = grid.size();
    summary["passed"] = all_ok;

    write_text(csv_path, csv.str());
    write_text(json_path, summary.dump(2) + "\n");
    write_manifest(cfg, tol, {"compare.csv", "compare.json"});
    std::printf("compare: %zu grid points, %s\n", grid.size(),
                all_ok ? "all within 3 bootstrap SEs" : "FAIL");
    return all_ok ? kExitOk : kExitNumerical;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qdsfluct — entropic fluctuation analysis of quantum dynamical semigroups"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto add_common = [&cfg](CLI::App* sub) {
        sub->add_option("--model", cfg.model_path, "model JSON file")->required();
        sub->add_option("--alpha-box", cfg.alpha_box_spec,
                        "per-axis ranges a:b[,a:b...] for alpha grids");
        sub->add_option("--resolution", cfg.resolution, "grid points per axis")
            ->check(CLI::Range(2, 10000));
        sub->add_option("--t", cfg.t_values, "time horizon(s)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--samples", cfg.samples, "number of trajectories")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--tol", cfg.tol_overrides, "tolerance override name=value");
        sub->add_flag("--force", cfg.force, "skip hypothesis gate / allow overwrite");
    };

    std::map<std::string, int (*)(const RunConfig&, const Tolerances&)> handlers = {
        {"validate", cmd_validate},       {"cgf-scan", cmd_cgf_scan},
        {"rate-function", cmd_rate_function}, {"symmetry-check", cmd_symmetry_check},
        {"steady-state", cmd_steady_state},   {"fluxes", cmd_fluxes},
        {"linear-response", cmd_linear_response}, {"unravel", cmd_unravel},
        {"compare", cmd_compare}};

    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, fn] : handlers) {
        CLI::App* sub = app.add_subcommand(name);
        add_common(sub);
        if (name == "unravel") {
            sub->add_flag("--dump-trajectories", cfg.dump_trajectories,
                          "write per-event trajectory CSV");
        }
        subs[name] = sub;
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        cfg.command = name;
        try {
            const Tolerances tol = parse_tolerances(cfg.tol_overrides);
            return handlers[name](cfg, tol);
        } catch (const ParseError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitValidation;
        } catch (const std::invalid_argument& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitValidation;
        } catch (const std::ios_base::failure& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitIo;
        } catch (const fs::filesystem_error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitIo;
        } catch (const NumericalError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitNumerical;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitNumerical;
        }
    }
    return kExitOk;
}
