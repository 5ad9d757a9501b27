#include <catch2/catch_amalgamated.hpp>

#include <fracmatern/cli.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace fracmatern;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    RunResult r;
    r.code = run_command(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch_dir()
{
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "fracmatern_cli_test";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_file(const std::string& name, const std::string& content)
{
    const fs::path p = scratch_dir() / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string markov_spec_text()
{
    return R"({"scheme":"markov","params":{"sigma":2.0,"range":0.15,"nu":0.8,"d":1},"m":2})";
}

std::string fem_cov_spec_text(int n = 101)
{
    return R"({"scheme":"fem-cov","params":{"sigma":2.0,"range":0.15,"nu":0.8,"d":1},"m":2,)"
           R"("rational":{"method":"chebfunLB","lb":"auto"},"mesh":{"a":0.0,"b":1.0,"n":)" +
           std::to_string(n) + "}}";
}

} // namespace

TEST_CASE("coeffs emits a parseable bundle that round-trips")
{
    const auto r = run({"coeffs", "--alpha", "1.3", "--m", "2", "--method", "chebfunLB"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("k").get<double>() > 0.0);
    CHECK(j.at("residues").size() == 2);
    CHECK(j.at("poles").size() == 2);
    CHECK(j.at("phi").get<double>() == Catch::Approx(0.3));

    // re-ingesting the JSON reproduces identical evaluations
    const RationalApprox again = rational_from_json(j);
    const RationalApprox direct = rational_coeffs(
        j.at("phi").get<double>(), 2, j.at("lb").get<double>(), RationalMethod::chebfunLB);
    for (int i = 0; i < 64; ++i) {
        const double x = j.at("lb").get<double>() +
                         (1.0 - j.at("lb").get<double>()) * i / 63.0;
        CHECK(eval_rational(again, x) == eval_rational(direct, x));
    }
}

TEST_CASE("coeffs argument errors exit with code 2")
{
    CHECK(run({"coeffs", "--alpha", "1.3", "--m", "0"}).code == 2);
    CHECK(run({"coeffs", "--m", "2"}).code == 2);                      // no exponent
    CHECK(run({"coeffs", "--alpha", "1.3", "--phi", "0.3", "--m", "2"}).code == 2);
    CHECK(run({"coeffs", "--alpha", "2.0", "--m", "2"}).code == 2);    // integer exponent
    CHECK(run({"coeffs", "--alpha", "1.3", "--m", "2", "--method", "bogus"}).code == 2);
    CHECK(run({"nonsense"}).code == 2);
}

TEST_CASE("covariance curves carry exact reference columns")
{
    SECTION("markov scheme compares against the Matern covariance")
    {
        const auto spec = write_file("markov.json", markov_spec_text());
        const auto r = run({"covariance", spec.string(), "--anchor", "0.5", "--grid",
                            "0:1:21"});
        REQUIRE(r.code == 0);
        std::istringstream in(r.out);
        const CsvTable t = read_csv(in);
        REQUIRE(t.header == std::vector<std::string>({"location", "approx", "exact",
                                                      "abs_error"}));
        REQUIRE(t.nrow() == 21);
        CHECK(t.rows.front()[0] == 0.0); // endpoints exact
        CHECK(t.rows.back()[0] == 1.0);
        const MaternParams p = MaternParams::from_range(2.0, 0.8, 0.15, 1);
        for (const auto& row : t.rows) {
            CHECK(row[2] == Catch::Approx(matern_cov(std::abs(row[0] - 0.5), p))
                                .epsilon(1e-12));
            CHECK(row[3] == Catch::Approx(std::abs(row[1] - row[2])).margin(1e-15));
        }
    }
    SECTION("FEM scheme compares against the folded Matern covariance")
    {
        const auto spec = write_file("femcov.json", fem_cov_spec_text());
        const auto out_path = scratch_dir() / "curve.csv";
        const auto r = run({"covariance", spec.string(), "--anchor", "0.5", "--grid",
                            "0:1:11", "--out", out_path.string()});
        REQUIRE(r.code == 0);
        const std::string raw = slurp(out_path);
        CHECK(raw.find('\r') == std::string::npos); // LF endings
        CHECK(raw.find(';') == std::string::npos);  // comma separated, '.' decimal
        std::istringstream in(raw);
        const CsvTable t = read_csv(in);
        const MaternParams p = MaternParams::from_range(2.0, 0.8, 0.15, 1);
        for (const auto& row : t.rows)
            CHECK(row[2] ==
                  Catch::Approx(folded_matern_cov(row[0], 0.5, p, 1.0)).epsilon(1e-10));
    }
    SECTION("anchor outside the mesh is a usage error")
    {
        const auto spec = write_file("femcov.json", fem_cov_spec_text());
        CHECK(run({"covariance", spec.string(), "--anchor", "1.5", "--grid", "0:1:11"})
                  .code == 2);
        CHECK(run({"covariance", spec.string(), "--grid", "junk"}).code == 2);
    }
}

TEST_CASE("benchmark table reproduces the reference error rows")
{
    const auto r = run({"benchmark"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "scheme,m1,m2,m3,m4");
    std::map<std::string, std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string name, field;
        std::getline(ls, name, ',');
        std::vector<double> vals;
        while (std::getline(ls, field, ',')) vals.push_back(std::stod(field));
        rows[name] = vals;
    }
    REQUIRE(rows.count("fem-op-stable") == 1);
    REQUIRE(rows.count("fem-cov") == 1);
    REQUIRE(rows.count("markov") == 1);
    const std::vector<double> want_cov{1.1729, 0.0996, 0.01805, 0.00786};
    const std::vector<double> want_op{1.1857, 0.1174, 0.0234, 0.0189};
    const std::vector<double> want_mk{1.6229, 0.3450, 0.0938, 0.0306};
    for (int i = 0; i < 4; ++i) {
        INFO("m=" << i + 1);
        CHECK(std::abs(rows["fem-cov"][static_cast<size_t>(i)] - want_cov[static_cast<size_t>(i)]) <
              0.5 * want_cov[static_cast<size_t>(i)]);
        CHECK(std::abs(rows["fem-op-stable"][static_cast<size_t>(i)] - want_op[static_cast<size_t>(i)]) <
              0.5 * want_op[static_cast<size_t>(i)]);
        CHECK(std::abs(rows["markov"][static_cast<size_t>(i)] - want_mk[static_cast<size_t>(i)]) <
              0.25 * want_mk[static_cast<size_t>(i)]);
    }
    for (const auto& [name, vals] : rows)
        for (size_t i = 1; i < vals.size(); ++i) {
            INFO(name << " m=" << i + 1);
            CHECK(vals[i] < vals[i - 1]); // strictly decreasing in m
        }
}

TEST_CASE("simulate is deterministic given the seed")
{
    const auto spec = write_file("sim.json", fem_cov_spec_text(31));
    const auto f1 = scratch_dir() / "sim1.csv";
    const auto f2 = scratch_dir() / "sim2.csv";
    const auto f3 = scratch_dir() / "sim3.csv";
    REQUIRE(run({"simulate", spec.string(), "--nsim", "3", "--seed", "42", "--out",
                 f1.string()}).code == 0);
    REQUIRE(run({"simulate", spec.string(), "--nsim", "3", "--seed", "42", "--out",
                 f2.string()}).code == 0);
    REQUIRE(run({"simulate", spec.string(), "--nsim", "3", "--seed", "43", "--out",
                 f3.string()}).code == 0);
    CHECK(slurp(f1) == slurp(f2)); // byte-for-byte
    CHECK(slurp(f1) != slurp(f3));
    std::istringstream in(slurp(f1));
    const CsvTable t = read_csv(in);
    CHECK(t.header == std::vector<std::string>({"node", "sim1", "sim2", "sim3"}));
    CHECK(t.nrow() == 31);

    const auto mspec = write_file("simmk.json", markov_spec_text());
    CHECK(run({"simulate", mspec.string(), "--nsim", "1", "--seed", "1"}).code == 2);
}

TEST_CASE("simulate accepts generic matrices in Matrix Market form")
{
    // export the FEM matrices of a small stationary model and rebuild it
    // through the generic scheme: same seed must give the same field
    const Mesh1D mesh = build_mesh(0.0, 1.0, 25);
    const FemMatrices fem = assemble_fem(mesh);
    const MaternParams p = MaternParams::from_range(2.0, 0.8, 0.15, 1);
    const auto L = assemble_L(fem, p.kappa);
    std::ostringstream cbuf, lbuf;
    write_matrix_market(cbuf, fem.C, true);
    write_matrix_market(lbuf, L, true);
    const auto cpath = write_file("C.mtx", cbuf.str());
    const auto lpath = write_file("L.mtx", lbuf.str());
    json spec;
    spec["scheme"] = "generic";
    spec["params"] = {{"tau", p.tau()}, {"nu", 0.8}, {"d", 1}};
    spec["m"] = 2;
    spec["mesh"] = {{"C_mtx", cpath.string()},
                    {"L_mtx", lpath.string()},
                    {"scale_factor", p.kappa * p.kappa}};
    const auto spath = write_file("generic.json", spec.dump());
    const auto r = run({"simulate", spath.string(), "--nsim", "2", "--seed", "7"});
    REQUIRE(r.code == 0);

    const auto model = build_cov_model(mesh, fem, p, 2);
    const Eigen::MatrixXd want = model.simulate(2, 7);
    std::istringstream in(r.out);
    const CsvTable t = read_csv(in);
    REQUIRE(t.nrow() == 25);
    for (int i = 0; i < 25; ++i) {
        CHECK(t.rows[static_cast<size_t>(i)][1] == Catch::Approx(want(i, 0)).epsilon(1e-12));
        CHECK(t.rows[static_cast<size_t>(i)][2] == Catch::Approx(want(i, 1)).epsilon(1e-12));
    }
}

TEST_CASE("fit and predict round a simulate-fit-predict pipeline")
{
    // simulate two replicates from the exact dense Markov covariance
    const MaternParams p = MaternParams::from_range(2.0, 0.8, 0.2, 1);
    const auto model = build_markov_rational(p, 2);
    const int nobs = 40, nrep = 3;
    std::vector<double> locs(nobs);
    for (int i = 0; i < nobs; ++i) locs[static_cast<size_t>(i)] = (i + 0.5) / nobs;
    Eigen::MatrixXd K(nobs, nobs);
    for (int i = 0; i < nobs; ++i)
        for (int j = 0; j < nobs; ++j)
            K(i, j) = model.markov_cov(std::abs(locs[static_cast<size_t>(i)] -
                                                locs[static_cast<size_t>(j)]));
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    NormalSampler rng(2024);
    std::ostringstream data;
    data << "y,loc,repl\n";
    for (int r = 0; r < nrep; ++r) {
        Eigen::VectorXd z(nobs);
        for (int i = 0; i < nobs; ++i) z[i] = rng();
        const Eigen::VectorXd u = llt.matrixL() * z;
        for (int i = 0; i < nobs; ++i)
            data << format_double(u[i] + 0.1 * rng()) << ','
                 << format_double(locs[static_cast<size_t>(i)]) << ',' << r << '\n';
    }
    const auto data_path = write_file("data.csv", data.str());
    // nu present in the template: held fixed during the fit
    const auto spec = write_file("fitspec.json", markov_spec_text());
    const auto fit_path = scratch_dir() / "fit.json";
    const auto rf =
        run({"fit", spec.string(), "--data", data_path.string(), "--out", fit_path.string()});
    REQUIRE(rf.code == 0);
    const json fit = json::parse(slurp(fit_path));
    CHECK(fit.at("converged").get<bool>());
    CHECK(fit.at("nu_fixed").get<bool>());
    CHECK(fit.at("estimates").at("nu").get<double>() == 0.8);
    CHECK(fit.at("estimates").at("sigma").get<double>() > 0.5);
    CHECK(fit.at("estimates").at("sigma").get<double>() < 8.0);

    const auto locs_path = write_file("newlocs.csv", "loc\n0.05\n0.5\n0.95\n");
    const auto pred_path = scratch_dir() / "pred.csv";
    const auto rp = run({"predict", "--fit", fit_path.string(), "--data",
                         data_path.string(), "--locs", locs_path.string(), "--out",
                         pred_path.string()});
    REQUIRE(rp.code == 0);
    std::istringstream in(slurp(pred_path));
    const CsvTable t = read_csv(in);
    CHECK(t.header == std::vector<std::string>({"loc", "mean", "sd"}));
    REQUIRE(t.nrow() == 3);
    for (const auto& row : t.rows) {
        CHECK(std::abs(row[1]) < 10.0);
        CHECK(row[2] > 0.0);
        CHECK(row[2] < 2.0 * p.sigma);
    }
}

TEST_CASE("schema violations name the offending field and exit 2")
{
    const auto no_scheme = write_file("bad1.json", R"({"m":2})");
    auto r = run({"covariance", no_scheme.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("scheme") != std::string::npos);

    const auto bad_method = write_file(
        "bad2.json",
        R"({"scheme":"markov","params":{"sigma":1,"range":0.2,"nu":0.8},"rational":{"method":"nope"}})");
    r = run({"covariance", bad_method.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("rational.method") != std::string::npos);

    const auto both = write_file(
        "bad3.json",
        R"({"scheme":"markov","params":{"sigma":1,"tau":1,"range":0.2,"nu":0.8}})");
    r = run({"covariance", both.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("sigma") != std::string::npos);

    const auto no_mesh = write_file(
        "bad4.json", R"({"scheme":"fem-cov","params":{"sigma":1,"range":0.2,"nu":0.8}})");
    r = run({"covariance", no_mesh.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("mesh") != std::string::npos);

    const auto not_json = write_file("bad5.json", "scheme: markov");
    CHECK(run({"covariance", not_json.string()}).code == 2);

    // missing files are runtime failures, not schema errors
    CHECK(run({"covariance", (scratch_dir() / "does_not_exist.json").string()}).code == 1);
    const auto ok_spec = write_file("ok.json", markov_spec_text());
    CHECK(run({"fit", ok_spec.string(), "--data",
               (scratch_dir() / "missing.csv").string()}).code == 1);
}
