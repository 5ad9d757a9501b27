#pragma once

// Gaussian likelihood, maximum-likelihood fitting (linear mixed effects with
// an optional nugget), numerical-Hessian standard errors and kriging
// prediction for the FEM-based latent models and the Markov rational models.
//
// Observation model per replicate j:
//   y_ij = x(s_i)^T b + u_j(s_i) + eps_ij,  eps_ij ~ N(0, sigma_eps^2) iid,
// with independent copies u_j of the latent field.  The FEM path stacks the
// latent GMRF blocks and evaluates the marginal likelihood through sparse
// Cholesky log-determinant identities; the Markov path is dense.  Fixed
// effects are profiled out with generalized least squares in every
// likelihood evaluation.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "latent.hpp"
#include "markov.hpp"

namespace fracmatern {

enum class Scheme { fem_cov, fem_op, markov };

/// Observations with optional fixed-effects design and replicate indices.
struct Dataset {
    Eigen::VectorXd y;
    std::vector<double> locs;
    Eigen::MatrixXd X;      // n x p design; p = 0 means no fixed effects
    std::vector<int> repl;  // empty means a single replicate

    int n() const { return static_cast<int>(y.size()); }
    int p() const { return X.size() == 0 ? 0 : static_cast<int>(X.cols()); }

    void validate() const
    {
        if (y.size() == 0) throw std::invalid_argument("Dataset: empty");
        if (static_cast<int>(locs.size()) != n())
            throw std::invalid_argument("Dataset: y and locs row counts differ");
        if (X.size() != 0 && static_cast<int>(X.rows()) != n())
            throw std::invalid_argument("Dataset: y and X row counts differ");
        if (!repl.empty() && static_cast<int>(repl.size()) != n())
            throw std::invalid_argument("Dataset: y and replicate-id row counts differ");
    }

    /// Row indices grouped by replicate id, in order of first appearance.
    std::vector<std::vector<int>> replicate_groups() const
    {
        std::vector<std::vector<int>> groups;
        if (repl.empty()) {
            groups.emplace_back(static_cast<size_t>(n()));
            for (int i = 0; i < n(); ++i) groups[0][static_cast<size_t>(i)] = i;
            return groups;
        }
        std::vector<int> ids;
        for (int i = 0; i < n(); ++i) {
            const auto it = std::find(ids.begin(), ids.end(), repl[static_cast<size_t>(i)]);
            size_t g;
            if (it == ids.end()) {
                ids.push_back(repl[static_cast<size_t>(i)]);
                groups.emplace_back();
                g = groups.size() - 1;
            } else {
                g = static_cast<size_t>(it - ids.begin());
            }
            groups[g].push_back(i);
        }
        return groups;
    }
};

/// Identifies the scheme and its discretization; the likelihood rebuilds the
/// latent model from this template at every parameter value.
struct ModelTemplate {
    Scheme scheme = Scheme::fem_cov;
    int m = 2;
    RationalMethod method = RationalMethod::chebfunLB;
    std::vector<double> mesh_nodes; // required for the FEM schemes
    double nu_upper = 2.0;          // optimizer transform bound for nu
};

/// Natural-scale model parameters.
struct Params {
    double sigma = 1.0;
    double range = 1.0;
    double nu = 1.0;
    double sigma_eps = 0.1;
};

struct LikelihoodResult {
    double loglik = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd beta; // profiled fixed effects (empty if p = 0)
    bool ok = false;      // false: Cholesky/positivity failure (penalty value)
};

namespace detail {

using InfChol = Eigen::SimplicialLDLT<SpMat>;

inline double ldlt_logdet(const InfChol& f, bool& ok)
{
    const Eigen::VectorXd& D = f.vectorD();
    double s = 0.0;
    for (int i = 0; i < D.size(); ++i) {
        if (!(D[i] > 0.0)) { ok = false; return 0.0; }
        s += std::log(D[i]);
    }
    return s;
}

// p(M) as a sparse matrix from its roots, M = C_lumped^{-1} L
inline SpMat root_poly_sparse(const SpMat& M, const std::vector<double>& roots,
                              double lead)
{
    const int n = static_cast<int>(M.rows());
    SpMat P(n, n);
    P.setIdentity();
    SpMat I(n, n);
    I.setIdentity();
    for (double rho : roots) P = (SpMat(M - rho * I) * P).eval();
    P = lead * P;
    P.makeCompressed();
    return P;
}

// Latent prior and the latent-to-observation map shared by both FEM schemes:
// the covariance scheme stacks one GMRF block per partial fraction and maps
// observations through [A A ... A]; the operator scheme has a single block
// with precision C_lumped p_l(M)^2 and maps through A diag(tau)^{-1} p_r(M).
struct FemEngine {
    Mesh1D mesh;
    int blocks = 1;
    int nh = 0;   // nodes per block
    SpMat Qprior; // stacked prior precision, SPD
    SpMat map;    // nh x nh latent-to-node map inside each block

    explicit FemEngine(Mesh1D me) : mesh(std::move(me)) {}

    int dim() const { return blocks * nh; }

    // stacked observation matrix for the given locations
    SpMat obs(const std::vector<double>& locs) const
    {
        const SpMat A = SpMat(observation_matrix(mesh, locs) * map);
        SpMat out(static_cast<int>(locs.size()), dim());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(A.nonZeros()) * static_cast<size_t>(blocks));
        for (int b = 0; b < blocks; ++b)
            for (int k = 0; k < A.outerSize(); ++k)
                for (SpMat::InnerIterator it(A, k); it; ++it)
                    trip.emplace_back(static_cast<int>(it.row()),
                                      b * nh + static_cast<int>(it.col()), it.value());
        out.setFromTriplets(trip.begin(), trip.end());
        return out;
    }
};

inline FemEngine make_fem_engine(const ModelTemplate& t, const Params& p)
{
    Mesh1D mesh(t.mesh_nodes);
    const FemMatrices fem = assemble_fem(mesh);
    const MaternParams mp = MaternParams::from_range(p.sigma, p.nu, p.range, 1);
    FemEngine eng(mesh);
    eng.nh = mesh.size();
    if (t.scheme == Scheme::fem_cov) {
        const CovLatentModel model = build_cov_model(mesh, fem, mp, t.m, t.method);
        eng.blocks = model.n_blocks();
        // block-diagonal stacking of the precision blocks
        std::vector<Eigen::Triplet<double>> trip;
        for (int b = 0; b < eng.blocks; ++b) {
            const SpMat& Q = model.Q[static_cast<size_t>(b)];
            for (int k = 0; k < Q.outerSize(); ++k)
                for (SpMat::InnerIterator it(Q, k); it; ++it)
                    trip.emplace_back(b * eng.nh + static_cast<int>(it.row()),
                                      b * eng.nh + static_cast<int>(it.col()), it.value());
        }
        eng.Qprior.resize(eng.dim(), eng.dim());
        eng.Qprior.setFromTriplets(trip.begin(), trip.end());
        eng.map.resize(eng.nh, eng.nh);
        eng.map.setIdentity();
    } else {
        const OpLatentModel model = build_op_model(mesh, fem, mp, t.m, t.method);
        SpMat Cl(eng.nh, eng.nh);
        Cl.setIdentity();
        Cl.diagonal() = model.cl;
        const SpMat M = SpMat(model.cl_inv.asDiagonal() * model.L);
        const SpMat Pl = root_poly_sparse(M, model.pl_roots, model.c_l);
        eng.Qprior = symmetrized(SpMat(SpMat(Pl.transpose()) * SpMat(Cl * Pl)));
        const SpMat Pr = root_poly_sparse(M, model.pr_roots, model.c_r);
        eng.map = SpMat(model.tau.cwiseInverse().asDiagonal() * Pr);
    }
    eng.Qprior.makeCompressed();
    return eng;
}

inline Eigen::MatrixXd markov_gram(const MarkovRationalModel& model,
                                   const std::vector<double>& a,
                                   const std::vector<double>& b)
{
    Eigen::MatrixXd S(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            S(static_cast<int>(i), static_cast<int>(j)) =
                model.markov_cov(std::abs(a[i] - b[j]));
    return S;
}

template <typename T>
std::vector<T> subset(const std::vector<T>& v, const std::vector<int>& idx)
{
    std::vector<T> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(v[static_cast<size_t>(i)]);
    return out;
}

inline Eigen::VectorXd subset_vec(const Eigen::VectorXd& v, const std::vector<int>& idx)
{
    Eigen::VectorXd out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[static_cast<int>(i)] = v[idx[i]];
    return out;
}

inline Eigen::MatrixXd subset_rows(const Eigen::MatrixXd& M, const std::vector<int>& idx)
{
    if (M.size() == 0) return Eigen::MatrixXd(idx.size(), 0);
    Eigen::MatrixXd out(idx.size(), M.cols());
    for (size_t i = 0; i < idx.size(); ++i) out.row(static_cast<int>(i)) = M.row(idx[i]);
    return out;
}

// accumulate GLS normal equations and the Gaussian exponent pieces
struct GlsAccum {
    Eigen::MatrixXd XtSiX;
    Eigen::VectorXd XtSiy;
    double ytSiy = 0.0;
    double logdet_sum = 0.0; // sum over replicates of log|Sigma_y|
    int ntot = 0;

    explicit GlsAccum(int p)
        : XtSiX(Eigen::MatrixXd::Zero(p, p)), XtSiy(Eigen::VectorXd::Zero(p)) {}

    // SiY: Sigma_y^{-1} [X_g y_g] applied columnwise
    void add(const Eigen::MatrixXd& Xg, const Eigen::VectorXd& yg,
             const Eigen::MatrixXd& SiY, double logdet)
    {
        const int p = static_cast<int>(Xg.cols());
        if (p > 0) {
            XtSiX += Xg.transpose() * SiY.leftCols(p);
            XtSiy += Xg.transpose() * SiY.col(p);
        }
        ytSiy += yg.dot(SiY.col(p));
        logdet_sum += logdet;
        ntot += static_cast<int>(yg.size());
    }

    LikelihoodResult finish() const
    {
        LikelihoodResult r;
        r.ok = true;
        double quad = ytSiy;
        if (XtSiX.rows() > 0) {
            const Eigen::LLT<Eigen::MatrixXd> llt(XtSiX);
            if (llt.info() != Eigen::Success) { r.ok = false; return r; }
            r.beta = llt.solve(XtSiy);
            quad -= XtSiy.dot(r.beta); // y'Si y - b'X'Si y with GLS b
        }
        r.loglik = -0.5 * (ntot * std::log(2.0 * 3.14159265358979323846) +
                           logdet_sum + quad);
        return r;
    }
};

} // namespace detail

/// Marginal log-likelihood of the dataset under the templated model at the
/// given natural-scale parameters.  Returns ok = false (with a large negative
/// loglik) instead of throwing on positive-definiteness failures, so the
/// value is safe to hand to an optimizer.
inline LikelihoodResult log_likelihood(const ModelTemplate& t, const Dataset& d,
                                       const Params& p)
{
    d.validate();
    LikelihoodResult fail;
    fail.loglik = -1e12;
    try {
        const auto groups = d.replicate_groups();
        detail::GlsAccum acc(d.p());

        if (t.scheme == Scheme::markov) {
            if (!(p.sigma_eps >= 0.0))
                throw std::invalid_argument("log_likelihood: sigma_eps must be >= 0");
            const MaternParams mp = MaternParams::from_range(p.sigma, p.nu, p.range, 1);
            const auto model = build_markov_rational(mp, t.m, t.method);
            std::vector<double> cached_locs;
            Eigen::LLT<Eigen::MatrixXd> llt;
            double logdet = 0.0;
            for (const auto& g : groups) {
                const auto locs = detail::subset(d.locs, g);
                if (locs != cached_locs) {
                    Eigen::MatrixXd K = detail::markov_gram(model, locs, locs);
                    K.diagonal().array() += p.sigma_eps * p.sigma_eps;
                    llt.compute(K);
                    if (llt.info() != Eigen::Success) return fail;
                    logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
                    cached_locs = locs;
                }
                const Eigen::VectorXd yg = detail::subset_vec(d.y, g);
                const Eigen::MatrixXd Xg = detail::subset_rows(d.X, g);
                Eigen::MatrixXd rhs(yg.size(), Xg.cols() + 1);
                if (Xg.cols() > 0) rhs.leftCols(Xg.cols()) = Xg;
                rhs.col(Xg.cols()) = yg;
                acc.add(Xg, yg, llt.solve(rhs), logdet);
            }
            auto r = acc.finish();
            if (!r.ok) return fail;
            return r;
        }

        // FEM schemes: sparse GMRF path with the Woodbury identities
        //   Sigma_y^{-1} = I/s2 - Abar Qpost^{-1} Abar^T / s2^2
        //   log|Sigma_y| = n log s2 + log|Qpost| - log|Qprior|
        if (!(p.sigma_eps > 0.0))
            throw std::invalid_argument("log_likelihood: FEM path needs sigma_eps > 0");
        const double s2 = p.sigma_eps * p.sigma_eps;
        const auto eng = detail::make_fem_engine(t, p);
        detail::InfChol prior(eng.Qprior);
        bool ok = prior.info() == Eigen::Success;
        const double logdet_prior = ok ? detail::ldlt_logdet(prior, ok) : 0.0;
        if (!ok) return fail;

        std::vector<double> cached_locs;
        detail::SpMat At; // Abar^T for the cached locations
        detail::InfChol post;
        double logdet_post = 0.0;
        for (const auto& g : groups) {
            const auto locs = detail::subset(d.locs, g);
            if (locs != cached_locs) {
                At = detail::SpMat(eng.obs(locs).transpose());
                const detail::SpMat Qpost = detail::symmetrized(
                    detail::SpMat(eng.Qprior + detail::SpMat(At * detail::SpMat(At.transpose())) / s2));
                post.compute(Qpost);
                ok = post.info() == Eigen::Success;
                logdet_post = ok ? detail::ldlt_logdet(post, ok) : 0.0;
                if (!ok) return fail;
                cached_locs = locs;
            }
            const Eigen::VectorXd yg = detail::subset_vec(d.y, g);
            const Eigen::MatrixXd Xg = detail::subset_rows(d.X, g);
            Eigen::MatrixXd rhs(yg.size(), Xg.cols() + 1);
            if (Xg.cols() > 0) rhs.leftCols(Xg.cols()) = Xg;
            rhs.col(Xg.cols()) = yg;
            const Eigen::MatrixXd SiY =
                rhs / s2 - (At.transpose() * post.solve(Eigen::MatrixXd(At * rhs))) / (s2 * s2);
            const double logdet =
                yg.size() * std::log(s2) + logdet_post - logdet_prior;
            acc.add(Xg, yg, SiY, logdet);
        }
        auto r = acc.finish();
        if (!r.ok) return fail;
        return r;
    } catch (const std::exception&) {
        // construction failures at extreme parameter values (indefinite
        // factors, kappa beyond the spectral bound, ...) act as a penalty
        return fail;
    }
}

// ---------------------------------------------------------------------------
// Optimizer transform:  theta = (log sigma, log range[, logit(nu/nu_upper)],
// log sigma_eps); nu is included only when it is estimated.

struct TransformSpec {
    bool nu_free = true;
    double nu_fixed = 1.0;  // used when !nu_free
    double nu_upper = 2.0;

    int dim() const { return nu_free ? 4 : 3; }
};

inline Eigen::VectorXd pack_theta(const Params& p, const TransformSpec& ts)
{
    Eigen::VectorXd t(ts.dim());
    t[0] = std::log(p.sigma);
    t[1] = std::log(p.range);
    int i = 2;
    if (ts.nu_free) {
        const double f = p.nu / ts.nu_upper;
        if (!(f > 0.0 && f < 1.0))
            throw std::invalid_argument("pack_theta: nu outside (0, nu_upper)");
        t[i++] = std::log(f / (1.0 - f));
    }
    t[i] = std::log(p.sigma_eps);
    return t;
}

inline Params unpack_theta(const Eigen::VectorXd& t, const TransformSpec& ts)
{
    Params p;
    p.sigma = std::exp(t[0]);
    p.range = std::exp(t[1]);
    int i = 2;
    p.nu = ts.nu_free ? ts.nu_upper / (1.0 + std::exp(-t[i++])) : ts.nu_fixed;
    p.sigma_eps = std::exp(t[i]);
    return p;
}

struct FitOptions {
    bool nu_free = true;
    double nu_fixed = 1.0;
    double nu_upper = 2.0;
    std::optional<Params> start;
    bool parallel = false;
    int max_iter = 500;
};

struct FitResult {
    Params estimates;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta_se;
    double loglik = 0.0;
    Params se;            // delta-method natural-scale standard errors
    bool converged = false;
    bool se_clamped = false; // observed information was not PD; eigenvalues clamped
    int iterations = 0;
    int n_eval = 0;
};

namespace detail {

inline int thread_cap()
{
    if (const char* env = std::getenv("FRACMATERN_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// evaluates f at each point, optionally concurrently; output order is fixed
// by the input order so results do not depend on scheduling
inline std::vector<double>
map_eval(const std::function<double(const Eigen::VectorXd&)>& f,
         const std::vector<Eigen::VectorXd>& pts, bool parallel)
{
    std::vector<double> out(pts.size());
    const int cap = parallel ? thread_cap() : 1;
    if (cap <= 1 || pts.size() <= 1) {
        for (size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
        return out;
    }
    std::vector<std::future<double>> fut;
    fut.reserve(pts.size());
    for (const auto& x : pts)
        fut.push_back(std::async(std::launch::async, [&f, &x] { return f(x); }));
    for (size_t i = 0; i < pts.size(); ++i) out[i] = fut[i].get();
    return out;
}

// central-difference gradient, relative step 1e-6 per coordinate
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, bool parallel)
{
    const int n = static_cast<int>(x.size());
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<size_t>(2 * n));
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) {
        h[i] = 1e-6 * std::max(1.0, std::abs(x[i]));
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h[i];
        xm[i] -= h[i];
        pts.push_back(xp);
        pts.push_back(xm);
    }
    const auto v = map_eval(f, pts, parallel);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i)
        g[i] = (v[static_cast<size_t>(2 * i)] - v[static_cast<size_t>(2 * i + 1)]) /
               (2.0 * h[i]);
    return g;
}

// central-difference Hessian, absolute step per transformed coordinate
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x, double step, bool parallel)
{
    const int n = static_cast<int>(x.size());
    std::vector<Eigen::VectorXd> pts;
    auto shifted = [&](int i, double si, int j, double sj) {
        Eigen::VectorXd z = x;
        z[i] += si * step;
        if (j >= 0) z[j] += sj * step;
        return z;
    };
    pts.push_back(x);
    for (int i = 0; i < n; ++i) {
        pts.push_back(shifted(i, 1, -1, 0));
        pts.push_back(shifted(i, -1, -1, 0));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            pts.push_back(shifted(i, 1, j, 1));
            pts.push_back(shifted(i, 1, j, -1));
            pts.push_back(shifted(i, -1, j, 1));
            pts.push_back(shifted(i, -1, j, -1));
        }
    const auto v = map_eval(f, pts, parallel);
    Eigen::MatrixXd H(n, n);
    const double f0 = v[0];
    size_t k = 1;
    for (int i = 0; i < n; ++i) {
        H(i, i) = (v[k] - 2.0 * f0 + v[k + 1]) / (step * step);
        k += 2;
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            H(i, j) = (v[k] - v[k + 1] - v[k + 2] + v[k + 3]) / (4.0 * step * step);
            H(j, i) = H(i, j);
            k += 4;
        }
    return H;
}

struct BfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    bool converged = false;
    int iterations = 0;
    int n_eval = 0;
};

// BFGS minimization with numerical gradients and Armijo backtracking
inline BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                Eigen::VectorXd x, int max_iter, bool parallel)
{
    const int n = static_cast<int>(x.size());
    BfgsResult res;
    double fx = f(x);
    res.n_eval = 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n); // inverse-Hessian estimate
    Eigen::VectorXd g = fd_gradient(f, x, parallel);
    res.n_eval += 2 * n;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it;
        if (g.lpNorm<Eigen::Infinity>() < 1e-6 * std::max(1.0, std::abs(fx))) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd dir = -(H * g);
        double slope = g.dot(dir);
        if (!(slope < 0.0)) { // reset on a non-descent direction
            H.setIdentity();
            dir = -g;
            slope = g.dot(dir);
        }
        double step = 1.0;
        double fn = fx;
        Eigen::VectorXd xn = x;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = x + step * dir;
            fn = f(xn);
            ++res.n_eval;
            if (fn <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = true; // no descent left at line-search resolution
            break;
        }
        const Eigen::VectorXd gn = fd_gradient(f, xn, parallel);
        res.n_eval += 2 * n;
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd yv = gn - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            const Eigen::VectorXd Hy = H * yv;
            const double yHy = yv.dot(Hy);
            H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                 (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        if (s.lpNorm<Eigen::Infinity>() < 1e-10) {
            x = xn; fx = fn; g = gn;
            res.converged = true;
            break;
        }
        x = xn;
        fx = fn;
        g = gn;
    }
    res.x = x;
    res.f = fx;
    return res;
}

inline Params default_start(const Dataset& d, const TransformSpec& ts)
{
    Params p;
    const double mean = d.y.mean();
    const double sd = std::sqrt((d.y.array() - mean).square().sum() /
                                std::max<int>(1, d.n() - 1));
    p.sigma = sd > 0.0 ? sd : 1.0;
    const auto [lo, hi] = std::minmax_element(d.locs.begin(), d.locs.end());
    p.range = (*hi - *lo) > 0.0 ? 0.2 * (*hi - *lo) : 1.0;
    p.nu = ts.nu_free ? 0.5 * ts.nu_upper : ts.nu_fixed;
    p.sigma_eps = 0.1 * p.sigma;
    return p;
}

} // namespace detail

/// Maximum-likelihood fit over (sigma, range[, nu], sigma_eps) with profiled
/// fixed effects.  Deterministic given the start and the dataset; standard
/// errors from the central-difference observed information (step 1e-4 per
/// transformed coordinate), eigenvalue-clamped when not positive definite.
inline FitResult fit_lme(const ModelTemplate& t, const Dataset& d,
                         const FitOptions& opt = FitOptions())
{
    d.validate();
    TransformSpec ts;
    ts.nu_free = opt.nu_free;
    ts.nu_fixed = opt.nu_fixed;
    ts.nu_upper = opt.nu_upper;

    const auto nll = [&](const Eigen::VectorXd& theta) {
        return -log_likelihood(t, d, unpack_theta(theta, ts)).loglik;
    };
    const Params start = opt.start ? *opt.start : detail::default_start(d, ts);
    const Eigen::VectorXd theta0 = pack_theta(start, ts);
    const auto best = detail::bfgs_minimize(nll, theta0, opt.max_iter, opt.parallel);

    FitResult fr;
    fr.converged = best.converged;
    fr.iterations = best.iterations;
    fr.n_eval = best.n_eval;
    fr.estimates = unpack_theta(best.x, ts);
    const auto atbest = log_likelihood(t, d, fr.estimates);
    fr.loglik = atbest.loglik;
    fr.beta = atbest.beta;

    // observed information = Hessian of the negative loglik at the optimum
    Eigen::MatrixXd info = detail::fd_hessian(nll, best.x, 1e-4, opt.parallel);
    info = 0.5 * (info + info.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    Eigen::VectorXd ev = es.eigenvalues();
    const double floor_ev = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < ev.size(); ++i)
        if (ev[i] < floor_ev) {
            ev[i] = floor_ev;
            fr.se_clamped = true;
        }
    const Eigen::MatrixXd cov = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
    Eigen::VectorXd se_t = cov.diagonal().cwiseMax(0.0).cwiseSqrt();

    // delta method back to the natural scale
    fr.se.sigma = fr.estimates.sigma * se_t[0];
    fr.se.range = fr.estimates.range * se_t[1];
    int i = 2;
    if (ts.nu_free) {
        const double nu = fr.estimates.nu;
        fr.se.nu = nu * (1.0 - nu / ts.nu_upper) * se_t[i++];
    } else {
        fr.se.nu = 0.0;
    }
    fr.se.sigma_eps = fr.estimates.sigma_eps * se_t[i];

    if (d.p() > 0) {
        // GLS covariance of the fixed effects at the optimum: (X' Si X)^{-1}
        // reassembled by one more likelihood-style pass
        detail::GlsAccum acc(d.p());
        const auto groups = d.replicate_groups();
        if (t.scheme == Scheme::markov) {
            const MaternParams mp = MaternParams::from_range(
                fr.estimates.sigma, fr.estimates.nu, fr.estimates.range, 1);
            const auto model = build_markov_rational(mp, t.m, t.method);
            for (const auto& g : groups) {
                const auto locs = detail::subset(d.locs, g);
                Eigen::MatrixXd K = detail::markov_gram(model, locs, locs);
                K.diagonal().array() += fr.estimates.sigma_eps * fr.estimates.sigma_eps;
                const Eigen::LLT<Eigen::MatrixXd> llt(K);
                const Eigen::VectorXd yg = detail::subset_vec(d.y, g);
                const Eigen::MatrixXd Xg = detail::subset_rows(d.X, g);
                Eigen::MatrixXd rhs(yg.size(), Xg.cols() + 1);
                rhs.leftCols(Xg.cols()) = Xg;
                rhs.col(Xg.cols()) = yg;
                acc.add(Xg, yg, llt.solve(rhs), 0.0);
            }
        } else {
            const double s2 = fr.estimates.sigma_eps * fr.estimates.sigma_eps;
            const auto eng = detail::make_fem_engine(t, fr.estimates);
            for (const auto& g : groups) {
                const auto locs = detail::subset(d.locs, g);
                const detail::SpMat At = detail::SpMat(eng.obs(locs).transpose());
                detail::InfChol post(detail::symmetrized(detail::SpMat(
                    eng.Qprior + detail::SpMat(At * detail::SpMat(At.transpose())) / s2)));
                const Eigen::VectorXd yg = detail::subset_vec(d.y, g);
                const Eigen::MatrixXd Xg = detail::subset_rows(d.X, g);
                Eigen::MatrixXd rhs(yg.size(), Xg.cols() + 1);
                rhs.leftCols(Xg.cols()) = Xg;
                rhs.col(Xg.cols()) = yg;
                const Eigen::MatrixXd SiY =
                    rhs / s2 -
                    (At.transpose() * post.solve(Eigen::MatrixXd(At * rhs))) / (s2 * s2);
                acc.add(Xg, yg, SiY, 0.0);
            }
        }
        fr.beta_se = acc.XtSiX.inverse().diagonal().cwiseMax(0.0).cwiseSqrt();
    }
    return fr;
}

struct Prediction {
    std::vector<double> mean;
    std::vector<double> sd; // latent-field marginal SD (nugget excluded)
};

/// Kriging: posterior mean and marginal SD of the latent field (plus fixed
/// effects) at new locations, conditioning on the rows of one replicate
/// (default: the first).  Fixed effects are re-profiled at the given
/// parameters; X_new must have the same column count as the dataset design.
inline Prediction predict_kriging(const ModelTemplate& t, const Dataset& d,
                                  const Params& p, const std::vector<double>& new_locs,
                                  const Eigen::MatrixXd& X_new = Eigen::MatrixXd(),
                                  int replicate = 0)
{
    d.validate();
    if (d.p() > 0 && (X_new.rows() != static_cast<int>(new_locs.size()) ||
                      X_new.cols() != d.X.cols()))
        throw std::invalid_argument("predict_kriging: X_new shape mismatch");
    const auto groups = d.replicate_groups();
    if (replicate < 0 || replicate >= static_cast<int>(groups.size()))
        throw std::invalid_argument("predict_kriging: replicate index out of range");
    const auto lik = log_likelihood(t, d, p);
    if (!lik.ok) throw std::runtime_error("predict_kriging: likelihood evaluation failed");
    const auto& g = groups[static_cast<size_t>(replicate)];
    const auto locs = detail::subset(d.locs, g);
    Eigen::VectorXd yc = detail::subset_vec(d.y, g);
    if (d.p() > 0) yc -= detail::subset_rows(d.X, g) * lik.beta;

    Prediction out;
    out.mean.resize(new_locs.size());
    out.sd.resize(new_locs.size());
    const Eigen::VectorXd fixed_part =
        d.p() > 0 ? Eigen::VectorXd(X_new * lik.beta)
                  : Eigen::VectorXd::Zero(static_cast<int>(new_locs.size()));

    if (t.scheme == Scheme::markov) {
        const MaternParams mp = MaternParams::from_range(p.sigma, p.nu, p.range, 1);
        const auto model = build_markov_rational(mp, t.m, t.method);
        Eigen::MatrixXd K = detail::markov_gram(model, locs, locs);
        K.diagonal().array() += p.sigma_eps * p.sigma_eps;
        const Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("predict_kriging: covariance not positive definite");
        const Eigen::MatrixXd Kno = detail::markov_gram(model, new_locs, locs);
        const Eigen::VectorXd w = llt.solve(yc);
        const Eigen::MatrixXd KiKon = llt.solve(Kno.transpose());
        const double var0 = model.markov_cov(0.0);
        for (size_t j = 0; j < new_locs.size(); ++j) {
            const int jj = static_cast<int>(j);
            out.mean[j] = fixed_part[jj] + Kno.row(jj).dot(w);
            out.sd[j] = std::sqrt(std::max(0.0, var0 - Kno.row(jj).dot(KiKon.col(jj))));
        }
        return out;
    }

    if (!(p.sigma_eps > 0.0))
        throw std::invalid_argument("predict_kriging: FEM path needs sigma_eps > 0");
    const double s2 = p.sigma_eps * p.sigma_eps;
    const auto eng = detail::make_fem_engine(t, p);
    const detail::SpMat At = detail::SpMat(eng.obs(locs).transpose());
    detail::InfChol post(detail::symmetrized(detail::SpMat(
        eng.Qprior + detail::SpMat(At * detail::SpMat(At.transpose())) / s2)));
    if (post.info() != Eigen::Success)
        throw std::runtime_error("predict_kriging: posterior precision not positive definite");
    const Eigen::VectorXd mu = post.solve(Eigen::VectorXd(At * yc)) / s2;
    const detail::SpMat ObsT =
        detail::SpMat(eng.obs(new_locs).transpose()); // errors if outside the mesh
    for (size_t j = 0; j < new_locs.size(); ++j) {
        const int jj = static_cast<int>(j);
        Eigen::VectorXd row = Eigen::VectorXd::Zero(eng.dim());
        for (detail::SpMat::InnerIterator it(ObsT, jj); it; ++it)
            row[it.row()] = it.value();
        out.mean[j] = fixed_part[jj] + row.dot(mu);
        out.sd[j] = std::sqrt(std::max(0.0, row.dot(post.solve(row))));
    }
    return out;
}

} // namespace fracmatern
