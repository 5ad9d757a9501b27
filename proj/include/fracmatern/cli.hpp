#pragma once

// Batch command-line front end: coefficient dumps, covariance curves,
// benchmark tables, simulation, fitting and prediction, wired through JSON
// model-specification files and CSV data files.
//
// Exit codes: 0 success, 1 runtime/file failure, 2 usage or schema error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inference.hpp"
#include "io.hpp"
#include "latent.hpp"
#include "markov.hpp"
#include "matern.hpp"

namespace fracmatern {

/// Schema/usage problem: maps to exit code 2 in the CLI.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cli_detail {

using nlohmann::json;

inline json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError(path + ": invalid JSON: " + e.what());
    }
    return j;
}

inline double auto_lb(int m) { return std::pow(10.0, -0.5 * (5.0 + m)); }

/// The validated contents of a model-specification JSON file.
struct ParsedSpec {
    std::string scheme; // fem-cov | fem-op | markov | generic
    int d = 1;
    std::optional<double> sigma, tau, range, kappa, nu;
    int m = 2;
    RationalMethod method = RationalMethod::chebfunLB;
    bool method_given = false;
    double lb = 0.0; // 0 = auto

    std::vector<double> mesh_nodes;          // FEM schemes
    Eigen::SparseMatrix<double> C_mat, L_mat; // generic scheme
    double scale_factor = 0.0;
    std::vector<double> kappa_nodes, tau_nodes; // nonstationary (optional)
    bool nonstationary = false;

    bool is_fem() const { return scheme == "fem-cov" || scheme == "fem-op"; }

    /// Stationary Matern parameters; requires nu and exactly one of each pair.
    MaternParams stationary_params() const
    {
        if (!nu) throw SchemaError("spec: missing field 'params.nu'");
        if (sigma.has_value() == tau.has_value())
            throw SchemaError("spec: exactly one of 'params.sigma'/'params.tau' required");
        if (range.has_value() == kappa.has_value())
            throw SchemaError("spec: exactly one of 'params.range'/'params.kappa' required");
        const double kap = kappa ? *kappa : std::sqrt(8.0 * *nu) / *range;
        try {
            return sigma ? MaternParams(*sigma, *nu, kap, d)
                         : MaternParams::from_tau(*tau, *nu, kap, d);
        } catch (const std::invalid_argument& e) {
            throw SchemaError(std::string("spec: params: ") + e.what());
        }
    }

    RationalMethod effective_method() const
    {
        // the Markov scheme defaults to the near-best approximant; the FEM
        // schemes default to the lower-bounded Chebyshev-Pade construction
        if (!method_given && scheme == "markov") return RationalMethod::brasil;
        return method;
    }
};

inline std::vector<double> read_node_column(const std::string& path,
                                            const std::string& col)
{
    return read_csv_file(path).column(col);
}

inline ParsedSpec parse_spec(const json& j)
{
    ParsedSpec s;
    if (!j.is_object()) throw SchemaError("spec: top level must be a JSON object");
    if (!j.contains("scheme")) throw SchemaError("spec: missing field 'scheme'");
    s.scheme = j.at("scheme").get<std::string>();
    if (s.scheme != "fem-cov" && s.scheme != "fem-op" && s.scheme != "markov" &&
        s.scheme != "generic")
        throw SchemaError("spec: field 'scheme' must be one of "
                          "fem-cov, fem-op, markov, generic (got '" + s.scheme + "')");

    if (j.contains("params")) {
        const json& p = j.at("params");
        auto get = [&](const char* name) -> std::optional<double> {
            if (!p.contains(name)) return std::nullopt;
            if (!p.at(name).is_number())
                throw SchemaError(std::string("spec: field 'params.") + name +
                                  "' must be a number");
            return p.at(name).get<double>();
        };
        s.sigma = get("sigma");
        s.tau = get("tau");
        s.range = get("range");
        s.kappa = get("kappa");
        s.nu = get("nu");
        if (p.contains("d")) s.d = p.at("d").get<int>();
        if (s.d < 1) throw SchemaError("spec: field 'params.d' must be >= 1");
    }

    if (j.contains("m")) {
        if (!j.at("m").is_number_integer())
            throw SchemaError("spec: field 'm' must be an integer");
        s.m = j.at("m").get<int>();
    }
    if (s.m < 1) throw SchemaError("spec: field 'm' must be >= 1");

    if (j.contains("rational")) {
        const json& r = j.at("rational");
        if (r.contains("method")) {
            try {
                s.method = rational_method_from_string(r.at("method").get<std::string>());
            } catch (const std::exception&) {
                throw SchemaError("spec: field 'rational.method' must be one of "
                                  "chebfunLB, chebfun, brasil");
            }
            s.method_given = true;
        }
        if (r.contains("lb")) {
            const json& lb = r.at("lb");
            if (lb.is_string()) {
                if (lb.get<std::string>() != "auto")
                    throw SchemaError("spec: field 'rational.lb' must be \"auto\" or a number");
            } else if (lb.is_number()) {
                s.lb = lb.get<double>();
                if (!(s.lb > 0.0 && s.lb < 1.0))
                    throw SchemaError("spec: field 'rational.lb' must be in (0, 1)");
            } else {
                throw SchemaError("spec: field 'rational.lb' must be \"auto\" or a number");
            }
        }
    }

    if (s.scheme == "generic") {
        if (!j.contains("mesh")) throw SchemaError("spec: missing field 'mesh'");
        const json& me = j.at("mesh");
        for (const char* f : {"C_mtx", "L_mtx", "scale_factor"})
            if (!me.contains(f))
                throw SchemaError(std::string("spec: missing field 'mesh.") + f +
                                  "' (required for scheme generic)");
        s.C_mat = read_matrix_market_file(me.at("C_mtx").get<std::string>());
        s.L_mat = read_matrix_market_file(me.at("L_mtx").get<std::string>());
        s.scale_factor = me.at("scale_factor").get<double>();
        if (!(s.scale_factor > 0.0))
            throw SchemaError("spec: field 'mesh.scale_factor' must be > 0");
    } else if (s.is_fem()) {
        if (!j.contains("mesh")) throw SchemaError("spec: missing field 'mesh'");
        const json& me = j.at("mesh");
        if (me.contains("nodes_csv")) {
            s.mesh_nodes = read_node_column(me.at("nodes_csv").get<std::string>(), "node");
        } else {
            for (const char* f : {"a", "b", "n"})
                if (!me.contains(f))
                    throw SchemaError(std::string("spec: missing field 'mesh.") + f + "'");
            const int n = me.at("n").get<int>();
            if (n < 3) throw SchemaError("spec: field 'mesh.n' must be >= 3");
            s.mesh_nodes =
                build_mesh(me.at("a").get<double>(), me.at("b").get<double>(), n).nodes;
        }
    } else if (j.contains("mesh")) {
        throw SchemaError("spec: field 'mesh' is not allowed for scheme markov");
    }

    if (j.contains("nonstationary")) {
        if (!s.is_fem())
            throw SchemaError("spec: field 'nonstationary' requires a FEM scheme");
        const json& ns = j.at("nonstationary");
        for (const char* f : {"kappa_nodes_csv", "tau_nodes_csv"})
            if (!ns.contains(f))
                throw SchemaError(std::string("spec: missing field 'nonstationary.") + f + "'");
        s.kappa_nodes =
            read_node_column(ns.at("kappa_nodes_csv").get<std::string>(), "kappa");
        s.tau_nodes = read_node_column(ns.at("tau_nodes_csv").get<std::string>(), "tau");
        if (s.kappa_nodes.size() != s.mesh_nodes.size() ||
            s.tau_nodes.size() != s.mesh_nodes.size())
            throw SchemaError("spec: nonstationary kappa/tau node counts must match the mesh");
        s.nonstationary = true;
    }
    return s;
}

struct GridSpec {
    double a = 0.0, b = 1.0;
    int n = 101;
    std::vector<double> points() const
    {
        std::vector<double> out(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            out[static_cast<size_t>(i)] = a + (b - a) * i / (n - 1);
        out.back() = b; // endpoints exact
        out.front() = a;
        return out;
    }
};

inline GridSpec parse_grid(const std::string& text)
{
    GridSpec g;
    std::istringstream in(text);
    char c1 = 0, c2 = 0;
    if (!(in >> g.a >> c1 >> g.b >> c2 >> g.n) || c1 != ':' || c2 != ':' ||
        !in.eof())
        throw SchemaError("--grid must have the form a:b:n (got '" + text + "')");
    if (!(g.a < g.b) || g.n < 2)
        throw SchemaError("--grid needs a < b and n >= 2");
    return g;
}

inline std::ostream& open_out(std::ofstream& file, const std::string& path,
                              std::ostream& fallback)
{
    if (path.empty()) return fallback;
    file.open(path, std::ios::binary);
    if (!file) throw IoError("cannot open file for writing: " + path);
    return file;
}

// covariance curve of the spec'd model against an anchor, over grid points
inline std::vector<double> covariance_curve_for(const ParsedSpec& s, double anchor,
                                                const std::vector<double>& grid)
{
    if (s.scheme == "markov") {
        const auto model = build_markov_rational(s.stationary_params(), s.m,
                                                 s.effective_method(), s.lb);
        std::vector<double> out(grid.size());
        for (size_t i = 0; i < grid.size(); ++i)
            out[i] = model.markov_cov(std::abs(grid[i] - anchor));
        return out;
    }
    const Mesh1D mesh(s.mesh_nodes);
    const FemMatrices fem = assemble_fem(mesh);
    const MaternParams p = s.stationary_params();
    Eigen::VectorXd at_nodes;
    if (s.scheme == "fem-cov")
        at_nodes = build_cov_model(mesh, fem, p, s.m, s.effective_method(), s.lb)
                       .cov_at(anchor);
    else
        at_nodes = build_op_model(mesh, fem, p, s.m, s.effective_method(), s.lb)
                       .cov_at(anchor);
    const Eigen::VectorXd on_grid = observation_matrix(mesh, grid) * at_nodes;
    return std::vector<double>(on_grid.data(), on_grid.data() + on_grid.size());
}

inline void cmd_coeffs(double phi, int m, const std::string& method_s, double lb,
                       std::ostream& out)
{
    if (m < 1) throw SchemaError("--m must be >= 1");
    if (!(phi > 0.0 && phi < 1.0))
        throw SchemaError("the exponent must have a fractional part in (0, 1)");
    RationalMethod method;
    try {
        method = rational_method_from_string(method_s);
    } catch (const std::exception&) {
        throw SchemaError("--method must be one of chebfunLB, chebfun, brasil");
    }
    if (lb == 0.0) lb = auto_lb(m);
    if (!(lb > 0.0 && lb < 1.0)) throw SchemaError("--lb must be in (0, 1)");
    const RationalApprox ra = rational_coeffs(phi, m, lb, method);
    out << to_json(ra).dump(2) << '\n';
}

inline void cmd_covariance(const std::string& spec_path, double anchor,
                           const std::string& grid_s, const std::string& out_path,
                           std::ostream& stdout_stream)
{
    const ParsedSpec s = parse_spec(load_json(spec_path));
    if (s.scheme == "generic")
        throw SchemaError("covariance: scheme 'generic' has no exact reference curve");
    if (s.nonstationary)
        throw SchemaError("covariance: nonstationary specs have no exact reference curve");
    const GridSpec grid = parse_grid(grid_s);
    const MaternParams p = s.stationary_params();
    if (s.is_fem()) {
        const double a = s.mesh_nodes.front(), b = s.mesh_nodes.back();
        if (anchor < a || anchor > b)
            throw SchemaError("--anchor is outside the mesh interval");
        if (grid.a < a || grid.b > b)
            throw SchemaError("--grid is outside the mesh interval");
    }
    const auto pts = grid.points();
    const auto approx = covariance_curve_for(s, anchor, pts);

    CsvTable t;
    t.header = {"location", "approx", "exact", "abs_error"};
    for (size_t i = 0; i < pts.size(); ++i) {
        double exact;
        if (s.scheme == "markov") {
            exact = matern_cov(std::abs(pts[i] - anchor), p);
        } else {
            const double a = s.mesh_nodes.front();
            const double len = s.mesh_nodes.back() - a;
            exact = folded_matern_cov(pts[i] - a, anchor - a, p, len);
        }
        t.rows.push_back({pts[i], approx[i], exact, std::abs(approx[i] - exact)});
    }
    std::ofstream file;
    write_csv(open_out(file, out_path, stdout_stream), t);
}

inline void cmd_benchmark(const std::string& out_path, std::ostream& stdout_stream)
{
    // reference setting: sigma = 2, nu = 0.8, range = 0.15 on [0, 1],
    // 501-node mesh, 101-point evaluation grid, L1 error against the exact
    // (folded) Matern covariance
    const MaternParams p = MaternParams::from_range(2.0, 0.8, 0.15, 1);
    const Mesh1D mesh = build_mesh(0.0, 1.0, 501);
    const FemMatrices fem = assemble_fem(mesh);
    const double anchor = 0.5;
    std::vector<double> grid(101);
    for (int i = 0; i < 101; ++i) grid[static_cast<size_t>(i)] = i / 100.0;
    const Eigen::SparseMatrix<double> A = observation_matrix(mesh, grid);

    auto fem_l1 = [&](const Eigen::VectorXd& at_nodes) {
        const Eigen::VectorXd approx = A * at_nodes;
        double e = 0.0;
        for (int i = 0; i < approx.size(); ++i)
            e += std::abs(approx[i] -
                          folded_matern_cov(grid[static_cast<size_t>(i)], anchor, p, 1.0));
        return e;
    };

    std::vector<double> row_op, row_cov, row_markov;
    for (int m = 1; m <= 4; ++m) {
        row_op.push_back(fem_l1(build_op_model(mesh, fem, p, m).cov_at(anchor)));
        row_cov.push_back(fem_l1(build_cov_model(mesh, fem, p, m).cov_at(anchor)));
        const auto mk = build_markov_rational(p, m);
        double e = 0.0;
        for (double s : grid) e += std::abs(mk.markov_cov(s) - matern_cov(s, p));
        row_markov.push_back(e);
    }
    std::ofstream file;
    std::ostream& out = open_out(file, out_path, stdout_stream);
    out << "scheme,m1,m2,m3,m4\n";
    auto emit = [&](const std::string& name, const std::vector<double>& r) {
        out << name;
        for (double v : r) out << ',' << format_double(v);
        out << '\n';
    };
    emit("fem-op-stable", row_op);
    emit("fem-cov", row_cov);
    emit("markov", row_markov);
}

inline void cmd_simulate(const std::string& spec_path, int nsim, std::uint64_t seed,
                         const std::string& out_path, std::ostream& stdout_stream)
{
    if (nsim < 1) throw SchemaError("--nsim must be >= 1");
    const ParsedSpec s = parse_spec(load_json(spec_path));
    if (s.scheme == "markov")
        throw SchemaError("simulate: scheme 'markov' is not supported "
                          "(use a FEM or generic scheme)");

    Eigen::MatrixXd sims;
    std::vector<double> first_col;
    if (s.scheme == "generic") {
        if (!s.nu) throw SchemaError("spec: missing field 'params.nu'");
        if (!s.tau) throw SchemaError("spec: missing field 'params.tau' "
                                      "(scheme generic takes tau directly)");
        const double alpha = *s.nu + 0.5 * s.d;
        const auto model = build_generic_cov(
            s.C_mat, s.L_mat, alpha,
            Eigen::VectorXd::Constant(s.C_mat.rows(), *s.tau), s.scale_factor, s.m,
            s.effective_method(), s.lb);
        sims = model.simulate(nsim, seed);
        for (int i = 0; i < s.C_mat.rows(); ++i) first_col.push_back(i);
    } else {
        const Mesh1D mesh(s.mesh_nodes);
        const FemMatrices fem = assemble_fem(mesh);
        if (s.nonstationary) {
            if (!s.nu) throw SchemaError("spec: missing field 'params.nu'");
            const double alpha = *s.nu + 0.5;
            if (s.scheme == "fem-cov")
                sims = build_cov_model(mesh, fem, s.kappa_nodes, s.tau_nodes, alpha,
                                       s.m, s.effective_method(), s.lb)
                           .simulate(nsim, seed);
            else
                sims = build_op_model(mesh, fem, s.kappa_nodes, s.tau_nodes, alpha,
                                      s.m, s.effective_method(), s.lb)
                           .simulate(nsim, seed);
        } else {
            const MaternParams p = s.stationary_params();
            if (s.scheme == "fem-cov")
                sims = build_cov_model(mesh, fem, p, s.m, s.effective_method(), s.lb)
                           .simulate(nsim, seed);
            else
                sims = build_op_model(mesh, fem, p, s.m, s.effective_method(), s.lb)
                           .simulate(nsim, seed);
        }
        first_col = s.mesh_nodes;
    }

    CsvTable t;
    t.header = {"node"};
    for (int j = 1; j <= nsim; ++j) t.header.push_back("sim" + std::to_string(j));
    for (size_t i = 0; i < first_col.size(); ++i) {
        std::vector<double> row{first_col[i]};
        for (int j = 0; j < nsim; ++j) row.push_back(sims(static_cast<int>(i), j));
        t.rows.push_back(std::move(row));
    }
    std::ofstream file;
    write_csv(open_out(file, out_path, stdout_stream), t);
}

struct LoadedData {
    Dataset data;
    std::vector<std::string> covariates; // column names that formed X
};

inline LoadedData load_dataset(const std::string& path)
{
    const CsvTable t = read_csv_file(path);
    if (t.find("y") < 0) throw SchemaError(path + ": missing required column 'y'");
    if (t.find("loc") < 0) throw SchemaError(path + ": missing required column 'loc'");
    LoadedData out;
    const auto y = t.column("y");
    out.data.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<int>(y.size()));
    out.data.locs = t.column("loc");
    if (t.find("repl") >= 0) {
        for (double v : t.column("repl"))
            out.data.repl.push_back(static_cast<int>(std::llround(v)));
    }
    for (const auto& name : t.header)
        if (name != "y" && name != "loc" && name != "repl") out.covariates.push_back(name);
    if (!out.covariates.empty()) {
        out.data.X.resize(out.data.n(), static_cast<int>(out.covariates.size()));
        for (size_t j = 0; j < out.covariates.size(); ++j) {
            const auto col = t.column(out.covariates[j]);
            for (int i = 0; i < out.data.n(); ++i)
                out.data.X(i, static_cast<int>(j)) = col[static_cast<size_t>(i)];
        }
    }
    try {
        out.data.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return out;
}

inline ModelTemplate template_from_spec(const ParsedSpec& s)
{
    if (s.scheme == "generic")
        throw SchemaError("fit/predict: scheme 'generic' is not supported");
    if (s.nonstationary)
        throw SchemaError("fit/predict: nonstationary specs are not supported");
    ModelTemplate t;
    t.scheme = s.scheme == "fem-cov" ? Scheme::fem_cov
               : s.scheme == "fem-op" ? Scheme::fem_op
                                      : Scheme::markov;
    t.m = s.m;
    t.method = s.effective_method();
    t.mesh_nodes = s.mesh_nodes;
    return t;
}

inline void cmd_fit(const std::string& spec_path, const std::string& data_path,
                    const std::string& out_path, std::ostream& stdout_stream)
{
    const json spec_json = load_json(spec_path);
    const ParsedSpec s = parse_spec(spec_json);
    const ModelTemplate t = template_from_spec(s);
    const LoadedData ld = load_dataset(data_path);

    FitOptions opt;
    opt.parallel = true; // results are deterministic regardless of concurrency
    if (s.nu) { // nu present in the spec: held fixed (free otherwise)
        opt.nu_free = false;
        opt.nu_fixed = *s.nu;
    }
    if (s.sigma && (s.range || s.kappa)) {
        Params start;
        start.sigma = *s.sigma;
        start.range = s.range ? *s.range : std::sqrt(8.0 * (s.nu ? *s.nu : 1.0)) / *s.kappa;
        start.nu = s.nu ? *s.nu : opt.nu_upper / 2.0;
        start.sigma_eps = 0.1 * start.sigma;
        opt.start = start;
    }
    const FitResult fr = fit_lme(t, ld.data, opt);

    json out;
    out["spec"] = spec_json;
    out["covariates"] = ld.covariates;
    out["estimates"] = {{"sigma", fr.estimates.sigma},
                        {"range", fr.estimates.range},
                        {"nu", fr.estimates.nu},
                        {"sigma_eps", fr.estimates.sigma_eps}};
    out["se"] = {{"sigma", fr.se.sigma},
                 {"range", fr.se.range},
                 {"nu", fr.se.nu},
                 {"sigma_eps", fr.se.sigma_eps}};
    out["nu_fixed"] = !opt.nu_free;
    std::vector<double> beta(fr.beta.data(), fr.beta.data() + fr.beta.size());
    std::vector<double> beta_se(fr.beta_se.data(), fr.beta_se.data() + fr.beta_se.size());
    out["beta"] = beta;
    out["beta_se"] = beta_se;
    out["loglik"] = fr.loglik;
    out["converged"] = fr.converged;
    out["se_clamped"] = fr.se_clamped;
    out["iterations"] = fr.iterations;
    out["n_eval"] = fr.n_eval;

    std::ofstream file;
    open_out(file, out_path, stdout_stream) << out.dump(2) << '\n';
}

inline void cmd_predict(const std::string& fit_path, const std::string& data_path,
                        const std::string& locs_path, const std::string& out_path,
                        std::ostream& stdout_stream)
{
    const json fit = load_json(fit_path);
    for (const char* f : {"spec", "estimates", "covariates", "beta"})
        if (!fit.contains(f))
            throw SchemaError(fit_path + ": missing field '" + std::string(f) + "'");
    const ParsedSpec s = parse_spec(fit.at("spec"));
    const ModelTemplate t = template_from_spec(s);
    const LoadedData ld = load_dataset(data_path);

    Params p;
    const json& est = fit.at("estimates");
    for (const char* f : {"sigma", "range", "nu", "sigma_eps"})
        if (!est.contains(f))
            throw SchemaError(fit_path + ": missing field 'estimates." + std::string(f) + "'");
    p.sigma = est.at("sigma").get<double>();
    p.range = est.at("range").get<double>();
    p.nu = est.at("nu").get<double>();
    p.sigma_eps = est.at("sigma_eps").get<double>();

    const CsvTable lt = read_csv_file(locs_path);
    if (lt.find("loc") < 0)
        throw SchemaError(locs_path + ": missing required column 'loc'");
    const std::vector<double> new_locs = lt.column("loc");
    const auto cov_names = fit.at("covariates").get<std::vector<std::string>>();
    if (cov_names != ld.covariates)
        throw SchemaError(data_path + ": covariate columns do not match the fit");
    Eigen::MatrixXd X_new;
    if (!cov_names.empty()) {
        X_new.resize(static_cast<int>(new_locs.size()), static_cast<int>(cov_names.size()));
        for (size_t j = 0; j < cov_names.size(); ++j) {
            if (lt.find(cov_names[j]) < 0)
                throw SchemaError(locs_path + ": missing covariate column '" +
                                  cov_names[j] + "'");
            const auto col = lt.column(cov_names[j]);
            for (size_t i = 0; i < new_locs.size(); ++i)
                X_new(static_cast<int>(i), static_cast<int>(j)) = col[i];
        }
    }

    const Prediction pred = predict_kriging(t, ld.data, p, new_locs, X_new);

    CsvTable outt;
    outt.header = {"loc", "mean", "sd"};
    for (size_t i = 0; i < new_locs.size(); ++i)
        outt.rows.push_back({new_locs[i], pred.mean[i], pred.sd[i]});
    std::ofstream file;
    write_csv(open_out(file, out_path, stdout_stream), outt);
}

} // namespace cli_detail

/// Dispatches a full command line (without the program name).  Writes results
/// to `out` and diagnostics to `err`; returns the process exit code.
inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err)
{
    CLI::App app{"rational approximations of fractional Gaussian fields"};
    app.require_subcommand(1);

    // coeffs
    auto* coeffs = app.add_subcommand("coeffs", "dump rational coefficients as JSON");
    double opt_alpha = 0.0, opt_phi = 0.0, opt_lb = 0.0;
    int opt_m = 0;
    std::string opt_method = "chebfunLB";
    auto* alpha_opt = coeffs->add_option("--alpha", opt_alpha, "full exponent");
    auto* phi_opt = coeffs->add_option("--phi", opt_phi, "fractional exponent in (0,1)");
    coeffs->add_option("--m", opt_m, "rational order")->required();
    coeffs->add_option("--method", opt_method, "chebfunLB | chebfun | brasil");
    coeffs->add_option("--lb", opt_lb, "interval left end (default: auto)");
    coeffs->callback([&] {
        if (alpha_opt->count() == phi_opt->count())
            throw SchemaError("coeffs: exactly one of --alpha/--phi is required");
        const double phi =
            alpha_opt->count() ? opt_alpha - std::floor(opt_alpha) : opt_phi;
        cli_detail::cmd_coeffs(phi, opt_m, opt_method, opt_lb, out);
    });

    // covariance
    auto* cov = app.add_subcommand("covariance", "covariance curve against an anchor");
    std::string cov_spec, cov_grid = "0:1:101", cov_out;
    double cov_anchor = 0.5;
    cov->add_option("spec", cov_spec, "model spec JSON file")->required();
    cov->add_option("--anchor", cov_anchor, "anchor location");
    cov->add_option("--grid", cov_grid, "evaluation grid a:b:n");
    cov->add_option("--out", cov_out, "output CSV path (default: stdout)");
    cov->callback(
        [&] { cli_detail::cmd_covariance(cov_spec, cov_anchor, cov_grid, cov_out, out); });

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "L1 error table, m = 1..4 per scheme");
    std::string bench_out;
    bench->add_option("--out", bench_out, "output CSV path (default: stdout)");
    bench->callback([&] { cli_detail::cmd_benchmark(bench_out, out); });

    // simulate
    auto* sim = app.add_subcommand("simulate", "draw latent-field samples at the nodes");
    std::string sim_spec, sim_out;
    int sim_n = 1;
    std::uint64_t sim_seed = 0;
    sim->add_option("spec", sim_spec, "model spec JSON file")->required();
    sim->add_option("--nsim", sim_n, "number of draws");
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--out", sim_out, "output CSV path (default: stdout)");
    sim->callback(
        [&] { cli_detail::cmd_simulate(sim_spec, sim_n, sim_seed, sim_out, out); });

    // fit
    auto* fit = app.add_subcommand("fit", "maximum-likelihood fit to a dataset");
    std::string fit_spec, fit_data, fit_out;
    fit->add_option("spec", fit_spec, "model template JSON file")->required();
    fit->add_option("--data", fit_data, "dataset CSV (columns y, loc[, repl, ...])")
        ->required();
    fit->add_option("--out", fit_out, "output JSON path (default: stdout)");
    fit->callback([&] { cli_detail::cmd_fit(fit_spec, fit_data, fit_out, out); });

    // predict
    auto* pred = app.add_subcommand("predict", "kriging prediction from a fit");
    std::string pred_fit, pred_data, pred_locs, pred_out;
    pred->add_option("--fit", pred_fit, "fit JSON produced by the fit command")->required();
    pred->add_option("--data", pred_data, "dataset CSV")->required();
    pred->add_option("--locs", pred_locs, "prediction locations CSV (column loc)")
        ->required();
    pred->add_option("--out", pred_out, "output CSV path (default: stdout)");
    pred->callback([&] {
        cli_detail::cmd_predict(pred_fit, pred_data, pred_locs, pred_out, out);
    });

    std::vector<const char*> argv;
    argv.push_back("fracmatern");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace fracmatern
