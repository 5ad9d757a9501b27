// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.  All tolerances are fixed here; nothing is calibrated at
// run time.

#include <fracmatern/cli.hpp>
#include <fracmatern/inference.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace fracmatern;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "")
{
    if (!ok) ++failures;
    std::printf("%s  %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_row(const std::vector<double>& v)
{
    std::string s;
    char buf[32];
    for (double x : v) {
        std::snprintf(buf, sizeof(buf), "%.5g ", x);
        s += buf;
    }
    return s;
}

// benchmark setting shared by criteria 1-3
const MaternParams bench_params = MaternParams::from_range(2.0, 0.8, 0.15, 1);

std::vector<double> bench_grid()
{
    std::vector<double> g(101);
    for (int i = 0; i < 101; ++i) g[static_cast<size_t>(i)] = i / 100.0;
    return g;
}

template <class Builder>
std::vector<double> fem_l1_errors(const Builder& build)
{
    const Mesh1D mesh = build_mesh(0.0, 1.0, 501);
    const FemMatrices fem = assemble_fem(mesh);
    const auto grid = bench_grid();
    const Eigen::SparseMatrix<double> A = observation_matrix(mesh, grid);
    std::vector<double> errs;
    for (int m = 1; m <= 4; ++m) {
        const Eigen::VectorXd curve = A * build(mesh, fem, m);
        double e = 0.0;
        for (int i = 0; i < 101; ++i)
            e += std::abs(curve[i] -
                          folded_matern_cov(grid[static_cast<size_t>(i)], 0.5,
                                            bench_params, 1.0));
        errs.push_back(e);
    }
    return errs;
}

bool within(const std::vector<double>& got, const std::vector<double>& want,
            double rel_tol)
{
    for (size_t i = 0; i < want.size(); ++i)
        if (std::abs(got[i] - want[i]) > rel_tol * want[i]) return false;
    return true;
}

bool strictly_decreasing(const std::vector<double>& v, size_t upto)
{
    for (size_t i = 1; i < upto; ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

void criterion_1()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto errs = fem_l1_errors([](const Mesh1D& mesh, const FemMatrices& fem, int m) {
        return build_cov_model(mesh, fem, bench_params, m).cov_at(0.5);
    });
    const double dt = seconds_since(t0);
    const std::vector<double> want{1.1729, 0.0996, 0.01805, 0.00786};
    report("1. covariance-based FEM benchmark within 50% of reference, decreasing",
           within(errs, want, 0.5) && strictly_decreasing(errs, 4) && dt < 10.0,
           "errors " + fmt_row(errs) + "(" + std::to_string(dt) + " s)");
}

void criterion_2()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto errs = fem_l1_errors([](const Mesh1D& mesh, const FemMatrices& fem, int m) {
        return build_op_model(mesh, fem, bench_params, m).cov_at(0.5);
    });
    const double dt = seconds_since(t0);
    const std::vector<double> want{1.1857, 0.1174, 0.0234, 0.0189};
    report("2. stable operator-based FEM benchmark within 50%, decreasing m=1..3",
           within(errs, want, 0.5) && strictly_decreasing(errs, 3) && dt < 10.0,
           "errors " + fmt_row(errs) + "(" + std::to_string(dt) + " s)");
}

void criterion_3()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = bench_grid();
    std::vector<double> errs;
    for (int m = 1; m <= 4; ++m) {
        const auto model = build_markov_rational(bench_params, m);
        double e = 0.0;
        for (double s : grid)
            e += std::abs(model.markov_cov(s) - matern_cov(s, bench_params));
        errs.push_back(e);
    }
    const double dt = seconds_since(t0);
    const std::vector<double> want{1.6229, 0.3450, 0.0938, 0.0306};
    report("3. Markov-without-FEM benchmark within 25% of reference, decreasing",
           within(errs, want, 0.25) && strictly_decreasing(errs, 4) && dt < 2.0,
           "errors " + fmt_row(errs) + "(" + std::to_string(dt) + " s)");
}

void criterion_4()
{
    bool ok = true;
    std::string first_fail;
    const double lb = 0.01;
    for (double phi : {0.3, 0.5, 0.8})
        for (int m = 1; m <= 4; ++m)
            for (RationalMethod method : {RationalMethod::chebfunLB, RationalMethod::brasil}) {
                const RationalApprox ra = rational_coeffs(phi, m, lb, method);
                bool signs = ra.k > 0.0;
                for (double r : ra.residues) signs = signs && r > 0.0;
                for (double p : ra.poles) signs = signs && p < 0.0;
                double worst = 0.0;
                for (int i = 0; i < 64; ++i) {
                    const double x = lb + (1.0 - lb) * i / 63.0;
                    worst = std::max(worst, std::abs(eval_rational(ra, x) -
                                                     eval_partial_fractions(ra, x)));
                }
                if (!(signs && worst < 1e-10) && ok) {
                    ok = false;
                    first_fail = "phi=" + std::to_string(phi) + " m=" + std::to_string(m) +
                                 " method=" + to_string(method) +
                                 " err=" + std::to_string(worst);
                }
            }
    report("4. partial-fraction identity < 1e-10 and sign structure k,r>0, p<0",
           ok, first_fail);
}

// direct dense partial-fraction formula for the covariance-based Sigma_u:
//   D^{-1} [ sum_i r_i (L^{-1} C)^n (L - p_i C)^{-1} + k K ] D^{-1}
Eigen::MatrixXd direct_sigma(const CovLatentModel& mod)
{
    const int n = mod.dim();
    const Eigen::MatrixXd L(mod.L);
    const Eigen::MatrixXd Cl = mod.cl.asDiagonal();
    const Eigen::MatrixXd Linv = L.inverse();
    const Eigen::MatrixXd LiC = Linv * Cl;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < mod.floor_alpha; ++i) power = power * LiC;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (size_t i = 0; i < mod.r_lam.size(); ++i)
        S += mod.r_lam[i] * power * (L - mod.p_lam[i] * Cl).inverse();
    Eigen::MatrixXd K;
    if (mod.floor_alpha == 0)
        K = Eigen::MatrixXd(mod.cl.cwiseInverse().asDiagonal());
    else {
        K = Linv;
        for (int i = 1; i < mod.floor_alpha; ++i) K = LiC * K;
    }
    S += mod.k_lam * K;
    const Eigen::MatrixXd Dinv = mod.tau.cwiseInverse().asDiagonal();
    return Dinv * S * Dinv;
}

double dense_loglik_oracle(const Eigen::MatrixXd& Sigma_y, const Eigen::VectorXd& y)
{
    const Eigen::LLT<Eigen::MatrixXd> llt(Sigma_y);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (y.size() * std::log(2.0 * 3.14159265358979323846) + logdet +
                   y.dot(llt.solve(y)));
}

void criterion_5()
{
    const auto t0 = std::chrono::steady_clock::now();
    const int nh = 50;
    const Mesh1D mesh = build_mesh(0.0, 1.0, nh);
    const FemMatrices fem = assemble_fem(mesh);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nh, nh);
    bool ok = true;
    std::string detail;

    // block precision vs the direct partial-fraction formula
    for (double alpha : {0.9, 1.3, 1.7, 2.5})
        for (int m : {1, 2, 3}) {
            const MaternParams p(1.5, alpha - 0.5, 10.0, 1);
            const auto model = build_cov_model(mesh, fem, p, m);
            const Eigen::MatrixXd blocks = model.sigma_mult(I);
            const Eigen::MatrixXd direct = direct_sigma(model);
            const double rel = (blocks - direct).cwiseAbs().maxCoeff() /
                               direct.cwiseAbs().maxCoeff();
            if (rel >= 1e-8 && ok) {
                ok = false;
                detail = "Sigma_u mismatch alpha=" + std::to_string(alpha) +
                         " m=" + std::to_string(m) + " rel=" + std::to_string(rel);
            }
        }

    // integer alpha: exact non-fractional FEM covariance
    {
        const MaternParams p(1.0, 1.5, 8.0, 1); // alpha = 2
        const auto model = build_cov_model(mesh, fem, p, 2);
        const Eigen::MatrixXd L(model.L);
        const Eigen::MatrixXd Linv = L.inverse();
        const Eigen::MatrixXd exact =
            Linv * Eigen::MatrixXd(model.cl.asDiagonal()) * Linv / p.tau_squared();
        const Eigen::MatrixXd got = model.sigma_mult(I);
        const double rel =
            (got - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
        if (rel >= 1e-8 && ok) {
            ok = false;
            detail = "integer-alpha covariance rel=" + std::to_string(rel);
        }
    }

    // sparse likelihood and kriging against dense conditional-Gaussian oracles
    Params p;
    p.sigma = 2.0;
    p.range = 0.3;
    p.nu = 0.8; // alpha = 1.3
    p.sigma_eps = 0.1;
    const MaternParams mp = MaternParams::from_range(p.sigma, p.nu, p.range, 1);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> unif(0.02, 0.98);
    std::vector<double> locs(40);
    for (double& s : locs) s = unif(gen);
    std::sort(locs.begin(), locs.end());
    const std::vector<double> new_locs{0.05, 0.33, 0.62, 0.91};
    for (Scheme scheme : {Scheme::fem_cov, Scheme::fem_op, Scheme::markov}) {
        ModelTemplate t;
        t.scheme = scheme;
        t.m = 2;
        t.mesh_nodes = mesh.nodes;
        if (scheme == Scheme::markov) t.method = RationalMethod::brasil;

        Eigen::MatrixXd Su, Soo, Sno, Snn;
        if (scheme == Scheme::markov) {
            const auto model = build_markov_rational(mp, t.m, t.method);
            auto gram = [&](const std::vector<double>& a, const std::vector<double>& b) {
                Eigen::MatrixXd M(a.size(), b.size());
                for (size_t i = 0; i < a.size(); ++i)
                    for (size_t j = 0; j < b.size(); ++j)
                        M(static_cast<int>(i), static_cast<int>(j)) =
                            model.markov_cov(std::abs(a[i] - b[j]));
                return M;
            };
            Soo = gram(locs, locs);
            Sno = gram(new_locs, locs);
            Snn = gram(new_locs, new_locs);
        } else {
            if (scheme == Scheme::fem_cov)
                Su = build_cov_model(mesh, fem, mp, t.m).sigma_mult(I);
            else
                Su = build_op_model(mesh, fem, mp, t.m).sigma_mult(I);
            const Eigen::MatrixXd Ao = observation_matrix(mesh, locs);
            const Eigen::MatrixXd An = observation_matrix(mesh, new_locs);
            Soo = Ao * Su * Ao.transpose();
            Sno = An * Su * Ao.transpose();
            Snn = An * Su * An.transpose();
        }
        Eigen::MatrixXd Sy = Soo;
        Sy.diagonal().array() += p.sigma_eps * p.sigma_eps;

        Dataset d;
        d.locs = locs;
        const Eigen::LLT<Eigen::MatrixXd> llt(Sy);
        NormalSampler rng(7);
        Eigen::VectorXd z(40);
        for (int i = 0; i < 40; ++i) z[i] = rng();
        d.y = llt.matrixL() * z;

        const auto lik = log_likelihood(t, d, p);
        const double want = dense_loglik_oracle(Sy, d.y);
        if ((!lik.ok || std::abs(lik.loglik - want) >= 1e-6) && ok) {
            ok = false;
            detail = "loglik mismatch scheme=" + std::to_string(static_cast<int>(scheme));
        }

        const auto pred = predict_kriging(t, d, p, new_locs);
        const Eigen::VectorXd mean = Sno * llt.solve(d.y);
        const Eigen::MatrixXd cond = Snn - Sno * llt.solve(Sno.transpose());
        for (size_t j = 0; j < new_locs.size(); ++j) {
            const int jj = static_cast<int>(j);
            const bool m_ok = std::abs(pred.mean[j] - mean[jj]) < 1e-8;
            const bool s_ok = std::abs(pred.sd[j] - std::sqrt(cond(jj, jj))) < 1e-8;
            if (!(m_ok && s_ok) && ok) {
                ok = false;
                detail = "kriging mismatch scheme=" +
                         std::to_string(static_cast<int>(scheme));
            }
        }
    }
    const double dt = seconds_since(t0);
    report("5. dense-oracle equivalence (Sigma_u, loglik 1e-6, kriging 1e-8)",
           ok && dt < 30.0, detail + "(" + std::to_string(dt) + " s)");
}

void criterion_6()
{
    const Mesh1D mesh = build_mesh(0.0, 1.0, 101);
    const FemMatrices fem = assemble_fem(mesh);
    std::vector<double> kap(101), tau(101);
    for (int i = 0; i < 101; ++i) {
        const double s = mesh.nodes[static_cast<size_t>(i)];
        kap[static_cast<size_t>(i)] = 10.0 * (1.0 + 2.0 * s * s);
        tau[static_cast<size_t>(i)] = 0.1 * (1.0 - 0.7 * s * s);
    }
    const double alpha = 0.8 + 0.5;
    const auto spec = build_cov_model(mesh, fem, kap, tau, alpha, 1);

    // generic path through Matrix Market serialization of C and L
    std::stringstream cbuf, lbuf;
    write_matrix_market(cbuf, fem.C, true);
    write_matrix_market(lbuf, assemble_L(fem, kap), true);
    const auto C2 = read_matrix_market(cbuf);
    const auto L2 = read_matrix_market(lbuf);
    const Eigen::VectorXd tauv = Eigen::Map<const Eigen::VectorXd>(tau.data(), 101);
    const auto gen = build_generic_cov(C2, L2, alpha, tauv, 100.0, 1);

    double worst = 0.0;
    for (double s0 : {0.1, 0.5, 0.9}) {
        const Eigen::SparseMatrix<double> a = observation_matrix(mesh, {s0});
        const Eigen::VectorXd av = a.transpose() * Eigen::VectorXd::Ones(1);
        worst = std::max(worst,
                         (spec.cov_at(s0) - gen.sigma_mult(av)).cwiseAbs().maxCoeff());
    }
    report("6. non-stationary specialized vs generic construction < 1e-12",
           worst < 1e-12, "max abs diff " + std::to_string(worst));
}

void criterion_7()
{
    const Mesh1D mesh = build_mesh(0.0, 1.0, 31);
    const FemMatrices fem = assemble_fem(mesh);
    const MaternParams p(2.0, 0.8, 12.0, 1);
    const auto model = build_cov_model(mesh, fem, p, 2);
    const bool det = model.simulate(4, 2026) == model.simulate(4, 2026);

    const int nsim = 10000;
    const Eigen::MatrixXd draws = model.simulate(nsim, 314159);
    const Eigen::MatrixXd S =
        model.sigma_mult(Eigen::MatrixXd::Identity(model.dim(), model.dim()));
    const int idx[5] = {0, 8, 15, 23, 30};
    bool ok = det;
    std::string detail = det ? "" : "nondeterministic under fixed seed";
    for (int a = 0; a < 5; ++a)
        for (int b = a; b < 5; ++b) {
            const int i = idx[a], j = idx[b];
            const double emp = (draws.row(i).array() * draws.row(j).array()).mean();
            const double se =
                std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / nsim);
            if (std::abs(emp - S(i, j)) >= 4.0 * se && ok) {
                ok = false;
                detail = "cov(" + std::to_string(i) + "," + std::to_string(j) +
                         ") off by " + std::to_string((emp - S(i, j)) / se) + " SE";
            }
        }
    report("7. Monte Carlo covariances within 4 SE, deterministic seed", ok, detail);
}

struct RecoveryOutcome {
    bool free_ok = false, fixed_ok = false;
    Params est_free, est_fixed;
};

RecoveryOutcome run_recovery(std::uint64_t seed)
{
    const Params truth{2.0, 0.15, 0.8, 0.1};
    const MaternParams mp = MaternParams::from_range(truth.sigma, truth.nu, truth.range, 1);
    const int nobs = 200, nrep = 50;

    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    std::vector<double> locs(nobs);
    for (double& s : locs) s = unif(gen);
    std::sort(locs.begin(), locs.end());

    // exact Matern field at the observation locations
    Eigen::MatrixXd K(nobs, nobs);
    for (int i = 0; i < nobs; ++i)
        for (int j = 0; j < nobs; ++j)
            K(i, j) = matern_cov(std::abs(locs[static_cast<size_t>(i)] -
                                          locs[static_cast<size_t>(j)]), mp);
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    NormalSampler rng(seed * 7 + 1);
    Dataset d;
    d.y.resize(nrep * nobs);
    for (int r = 0; r < nrep; ++r) {
        Eigen::VectorXd z(nobs);
        for (int i = 0; i < nobs; ++i) z[i] = rng();
        Eigen::VectorXd yr = llt.matrixL() * z;
        for (int i = 0; i < nobs; ++i) yr[i] += truth.sigma_eps * rng();
        d.y.segment(r * nobs, nobs) = yr;
        d.locs.insert(d.locs.end(), locs.begin(), locs.end());
        d.repl.insert(d.repl.end(), static_cast<size_t>(nobs), r);
    }

    ModelTemplate t;
    t.scheme = Scheme::markov;
    t.m = 3;

    auto rel_ok = [](double est, double tru, double tol) {
        return std::abs(est - tru) <= tol * tru;
    };

    RecoveryOutcome out;
    FitOptions of;
    of.nu_free = true;
    of.parallel = true;
    const FitResult fr = fit_lme(t, d, of);
    out.est_free = fr.estimates;
    out.free_ok = rel_ok(fr.estimates.sigma, truth.sigma, 0.3) &&
                  rel_ok(fr.estimates.range, truth.range, 0.3) &&
                  rel_ok(fr.estimates.nu, truth.nu, 0.3) &&
                  rel_ok(fr.estimates.sigma_eps, truth.sigma_eps, 0.3);

    FitOptions ofix;
    ofix.nu_free = false;
    ofix.nu_fixed = truth.nu;
    ofix.parallel = true;
    const FitResult ff = fit_lme(t, d, ofix);
    out.est_fixed = ff.estimates;
    out.fixed_ok = rel_ok(ff.estimates.sigma, truth.sigma, 0.2) &&
                   rel_ok(ff.estimates.range, truth.range, 0.2) &&
                   rel_ok(ff.estimates.sigma_eps, truth.sigma_eps, 0.2);
    return out;
}

void criterion_8()
{
    const auto t0 = std::chrono::steady_clock::now();
    RecoveryOutcome out = run_recovery(1001);
    bool retried = false;
    if (!(out.free_ok && out.fixed_ok)) { // statistical: one reseeded retry allowed
        retried = true;
        out = run_recovery(2002);
    }
    const double dt = seconds_since(t0);
    const bool ok = out.free_ok && out.fixed_ok && dt < 300.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "free (s=%.3f r=%.3f nu=%.3f se=%.3f) fixed (s=%.3f r=%.3f se=%.3f)%s (%.0f s)",
                  out.est_free.sigma, out.est_free.range, out.est_free.nu,
                  out.est_free.sigma_eps, out.est_fixed.sigma, out.est_fixed.range,
                  out.est_fixed.sigma_eps, retried ? " [reseeded]" : "", dt);
    report("8. parameter recovery: 30% with nu free, 20% with nu fixed", ok, buf);
}

void criterion_9()
{
    bool ok = true;
    std::string detail;
    const double pi = 3.14159265358979323846;

    // half-integer closed forms
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
    for (double x : {0.05, 0.4, 1.0, 2.3, 7.0}) {
        const double k12 = std::sqrt(pi / (2.0 * x)) * std::exp(-x);
        const double k32 = k12 * (1.0 + 1.0 / x);
        const double k52 = k12 * (1.0 + 3.0 / x + 3.0 / (x * x));
        if (rel(bessel_k(0.5, x), k12) >= 1e-12 || rel(bessel_k(1.5, x), k32) >= 1e-12 ||
            rel(bessel_k(2.5, x), k52) >= 1e-12) {
            ok = false;
            detail = "bessel_k half-integer at x=" + std::to_string(x);
        }
    }
    for (double h : {0.01, 0.1, 0.5, 1.5}) {
        const MaternParams p12(1.3, 0.5, 2.0, 1), p32(0.7, 1.5, 3.0, 1),
            p52(2.0, 2.5, 1.5, 1);
        const double e12 = p12.sigma * p12.sigma * std::exp(-p12.kappa * h);
        const double z32 = p32.kappa * h;
        const double e32 = p32.sigma * p32.sigma * (1.0 + z32) * std::exp(-z32);
        const double z52 = p52.kappa * h;
        const double e52 =
            p52.sigma * p52.sigma * (1.0 + z52 + z52 * z52 / 3.0) * std::exp(-z52);
        if (rel(matern_cov(h, p12), e12) >= 1e-12 || rel(matern_cov(h, p32), e32) >= 1e-12 ||
            rel(matern_cov(h, p52), e52) >= 1e-12) {
            ok = false;
            detail = "matern closed form at h=" + std::to_string(h);
        }
    }

    // spectral density integrates to the variance (tangent substitution
    // removes the algebraic tail)
    {
        const MaternParams p = bench_params;
        auto g = [&](long double th) -> long double {
            const long double c = std::cos(th);
            if (c < 1e-18L) return 0.0L;
            const long double w = p.kappa * std::tan(th);
            return static_cast<long double>(
                       matern_spectral_density(static_cast<double>(w), p)) *
                   p.kappa / (c * c);
        };
        const double integral = static_cast<double>(
            2.0L * oracles::integrate(g, 0.0L, 1.57079632679489661923L, 400, 20));
        if (std::abs(integral - p.sigma * p.sigma) >= 1e-6 * p.sigma * p.sigma) {
            ok = false;
            detail = "spectral integral " + std::to_string(integral);
        }
    }

    // markov_cov vs the inverse-Fourier quadrature of f_m at 20 random lags
    {
        const auto model = build_markov_rational(bench_params, 2);
        std::mt19937_64 gen(99);
        std::uniform_real_distribution<double> unif(1e-3, 0.5);
        for (int r = 0; r < 20; ++r) {
            const double h = unif(gen);
            const double W = 2e5;
            const double plen = std::min(W / 64.0, pi / std::max(h, 1e-3) / 4.0);
            const int npanel = static_cast<int>(std::ceil(W / plen));
            auto g = [&](long double w) -> long double {
                return static_cast<long double>(
                           model.spectral_density_m(static_cast<double>(w))) *
                       std::cos(w * static_cast<long double>(h));
            };
            const double quad =
                static_cast<double>(2.0L * oracles::integrate(g, 0.0L, W, npanel, 20));
            if (std::abs(model.markov_cov(h) - quad) >= 1e-7) {
                ok = false;
                detail = "markov_cov vs Fourier oracle at h=" + std::to_string(h);
            }
        }
    }
    report("9. special functions: closed forms 1e-12, integrals 1e-6/1e-7", ok, detail);
}

} // namespace

int main()
{
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("SKIP  10. large-scale competition comparison: excluded by design, "
                "covered by criteria 1-9\n");
    if (failures > 0) {
        std::printf("%d criterion(s) FAILED\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
