#pragma once

// Discretized fractional fields built from FEM matrices: the covariance-based
// construction (sum of GMRFs, one sparse precision block per partial
// fraction) and the operator-based construction (factored P_l / P_r sweeps).
// Both reduce the fractional power to the rational approximation of x^phi on
// the normalized spectral interval [lb, 1] of C_lumped^{-1} L.

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fem1d.hpp"
#include "matern.hpp"
#include "rational.hpp"
#include "rng.hpp"

namespace fracmatern {

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Chol = Eigen::SimplicialLLT<SpMat>;

inline Eigen::VectorXd lumped_diagonal(const SpMat& C)
{
    Eigen::VectorXd d = Eigen::VectorXd::Zero(C.rows());
    for (int k = 0; k < C.outerSize(); ++k)
        for (SpMat::InnerIterator it(C, k); it; ++it) d[it.row()] += it.value();
    for (int i = 0; i < d.size(); ++i)
        if (!(d[i] > 0.0))
            throw std::invalid_argument("latent model: mass matrix has nonpositive row sum");
    return d;
}

// Gershgorin upper bound for the generalized eigenvalues of (C_lumped, L)
inline double gershgorin_upper(const SpMat& L, const Eigen::VectorXd& cl)
{
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(L.rows());
    for (int k = 0; k < L.outerSize(); ++k)
        for (SpMat::InnerIterator it(L, k); it; ++it)
            rowsum[it.row()] += std::abs(it.value());
    return (rowsum.array() / cl.array()).maxCoeff();
}

inline SpMat symmetrized(const SpMat& A)
{
    SpMat S = 0.5 * (A + SpMat(A.transpose()));
    S.makeCompressed();
    return S;
}

inline std::unique_ptr<Chol> factorize(const SpMat& A, const std::string& what)
{
    auto f = std::make_unique<Chol>(A);
    if (f->info() != Eigen::Success)
        throw std::runtime_error("latent model: Cholesky failed for " + what +
                                 " (matrix not positive definite)");
    return f;
}

// x = P^T U^{-1} z has covariance A^{-1} when PAP^T = LL^T
inline Eigen::VectorXd precision_sample(const Chol& f, const Eigen::VectorXd& z)
{
    return f.permutationPinv() * f.matrixU().solve(z).eval();
}

inline Eigen::VectorXd observation_row(const std::vector<double>& nodes, double s0)
{
    if (nodes.empty())
        throw std::logic_error("cov_at: model was built without a mesh");
    const Mesh1D mesh(nodes);
    const SpMat A = observation_matrix(mesh, {s0});
    return Eigen::VectorXd(A.transpose() * Eigen::VectorXd::Ones(1));
}

// real roots of a polynomial, rejecting complex pairs
inline std::vector<double> real_roots(const poly& c, const std::string& what)
{
    std::vector<double> out;
    for (const auto& z : poly_roots(c)) {
        if (std::abs(z.imag()) > 1e-8L * std::max<long double>(1.0L, std::abs(z.real())))
            throw std::runtime_error("latent model: complex root in " + what);
        out.push_back(static_cast<double>(z.real()));
    }
    return out;
}

} // namespace detail

/// Covariance-based model: the latent field is a sum of independent GMRFs
/// x_1..x_{m+1}, one per partial fraction term plus one for the constant
/// term, each with a sparse SPD precision block.
class CovLatentModel {
public:
    int m = 0;               // rational order (0 on the exact integer path)
    double alpha = 0.0;
    int floor_alpha = 0;
    bool fractional = false;
    double scale_factor = 0.0; // lower spectral bound of C_lumped^{-1} L
    double lb = 0.0;           // normalized interval left end
    RationalApprox rational;
    double k_lam = 1.0;               // lambda-domain constant term
    std::vector<double> r_lam, p_lam; // lambda-domain residues / poles

    detail::SpMat L;
    Eigen::VectorXd cl;  // lumped mass diagonal
    Eigen::VectorXd tau; // nodal tau
    std::vector<detail::SpMat> Q; // precision blocks, field scaling included
    std::vector<double> mesh_nodes; // empty when built from raw matrices

    int dim() const { return static_cast<int>(L.rows()); }
    int n_blocks() const { return static_cast<int>(Q.size()); }

    Eigen::MatrixXd sigma_mult(const Eigen::MatrixXd& v) const
    {
        if (v.rows() != dim())
            throw std::invalid_argument("sigma_mult: dimension mismatch");
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), v.cols());
        for (const auto& f : fact_) out += f->solve(v);
        return out;
    }

    Eigen::VectorXd cov_at(double s0) const
    {
        return sigma_mult(detail::observation_row(mesh_nodes, s0));
    }

    Eigen::MatrixXd simulate(int nsim, std::uint64_t seed) const
    {
        if (nsim < 1) throw std::invalid_argument("simulate: nsim must be positive");
        NormalSampler rng(seed);
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), nsim);
        for (int j = 0; j < nsim; ++j)
            for (const auto& f : fact_) {
                Eigen::VectorXd z(dim());
                for (int i = 0; i < dim(); ++i) z[i] = rng();
                out.col(j) += detail::precision_sample(*f, z);
            }
        return out;
    }

    void finalize()
    {
        fact_.clear();
        for (size_t i = 0; i < Q.size(); ++i)
            fact_.push_back(detail::factorize(Q[i], "precision block " + std::to_string(i + 1)));
    }

private:
    std::vector<std::unique_ptr<detail::Chol>> fact_;
};

/// Operator-based model: u = tau^{-1} p_r(M) x with x ~ N(0, Q^{-1}),
/// Q = P_l C_lumped^{-1} P_l, all applications swept factor by factor.
class OpLatentModel {
public:
    int m = 0;
    double beta = 0.0;
    int m_beta = 0; // integer part of beta; the left polynomial has order m + m_beta
    bool fractional = false;
    double scale_factor = 0.0;
    double lb = 0.0;
    RationalApprox rational;
    double c_r = 1.0, c_l = 1.0;     // leading scalars of p_r, p_l (lambda domain)
    std::vector<double> pr_roots;    // roots of p_r
    std::vector<double> pl_roots;    // roots of p_l (m_beta zeros included)

    detail::SpMat L;
    Eigen::VectorXd cl, cl_inv, cl_sqrt;
    Eigen::VectorXd tau;
    std::vector<double> mesh_nodes;

    int dim() const { return static_cast<int>(L.rows()); }

    // (M - rho I) v swept over the roots of p_r, M = C_lumped^{-1} L
    Eigen::VectorXd Pr_mult(Eigen::VectorXd v) const
    {
        for (double rho : pr_roots) {
            const Eigen::VectorXd Lv = L * v;
            v = cl_inv.asDiagonal() * Lv - rho * v;
        }
        return c_r * v;
    }

    // solves sweep the factors in reverse so that solve(mult(v)) retraces the
    // multiply path factor by factor instead of compounding the full
    // dynamic range of the product
    Eigen::VectorXd Pr_solve(Eigen::VectorXd v) const
    {
        v /= c_r;
        for (size_t i = pr_fact_.size(); i-- > 0;) {
            const Eigen::VectorXd rhs = (cl.array() * v.array()).matrix();
            v = pr_fact_[i]->solve(rhs);
        }
        return v;
    }

    Eigen::VectorXd Pl_mult(Eigen::VectorXd v) const
    {
        for (double rho : pl_roots) {
            const Eigen::VectorXd Lv = L * v;
            v = cl_inv.asDiagonal() * Lv - rho * v;
        }
        return c_l * v;
    }

    Eigen::VectorXd Pl_solve(Eigen::VectorXd v) const
    {
        v /= c_l;
        for (size_t i = pl_fact_.size(); i-- > 0;) {
            const Eigen::VectorXd rhs = (cl.array() * v.array()).matrix();
            v = pl_fact_[i]->solve(rhs);
        }
        return v;
    }

    // p_r(M) p_l(M)^{-1} v with the solves and multiplies interleaved in
    // matched pairs: applying all of p_l^{-1} first would blow up the
    // intermediate dynamic range and lose the high-frequency components
    Eigen::VectorXd ratio_apply(Eigen::VectorXd v) const
    {
        for (size_t i = 0; i < pl_roots.size(); ++i) {
            const Eigen::VectorXd rhs = (cl.array() * v.array()).matrix();
            v = pl_fact_[i]->solve(rhs);
            if (i < pr_roots.size()) {
                const Eigen::VectorXd Lv = L * v;
                v = cl_inv.asDiagonal() * Lv - pr_roots[i] * v;
            }
        }
        return (c_r / c_l) * v;
    }

    // Q = (C_lumped p_l(M)) C_lumped^{-1} (C_lumped p_l(M)) = C_lumped p_l(M)^2
    Eigen::VectorXd Q_mult(const Eigen::VectorXd& v) const
    {
        return (cl.array() * Pl_mult(Pl_mult(v)).array()).matrix();
    }

    Eigen::VectorXd Q_solve(const Eigen::VectorXd& v) const
    {
        return Pl_solve(Pl_solve((cl_inv.array() * v.array()).matrix()));
    }

    // Sigma = D^{-1} p_r(M)^2 p_l(M)^{-2} C_lumped^{-1} D^{-1}, D = diag(tau)
    Eigen::MatrixXd sigma_mult(const Eigen::MatrixXd& v) const
    {
        if (v.rows() != dim())
            throw std::invalid_argument("sigma_mult: dimension mismatch");
        Eigen::MatrixXd out(v.rows(), v.cols());
        for (int j = 0; j < v.cols(); ++j) {
            Eigen::VectorXd w = (v.col(j).array() / tau.array() * cl_inv.array()).matrix();
            w = ratio_apply(ratio_apply(w));
            out.col(j) = (w.array() / tau.array()).matrix();
        }
        return out;
    }

    Eigen::VectorXd cov_at(double s0) const
    {
        return sigma_mult(detail::observation_row(mesh_nodes, s0));
    }

    Eigen::MatrixXd simulate(int nsim, std::uint64_t seed) const
    {
        if (nsim < 1) throw std::invalid_argument("simulate: nsim must be positive");
        NormalSampler rng(seed);
        Eigen::MatrixXd out(dim(), nsim);
        for (int j = 0; j < nsim; ++j) {
            Eigen::VectorXd z(dim());
            for (int i = 0; i < dim(); ++i) z[i] = rng();
            // u = D^{-1} p_r(M) x with x = P_l^{-1} C^{1/2} z ~ N(0, Q^{-1})
            Eigen::VectorXd x =
                ratio_apply((cl_inv.array() * cl_sqrt.array() * z.array()).matrix());
            out.col(j) = (x.array() / tau.array()).matrix();
        }
        return out;
    }

    void finalize()
    {
        pr_fact_.clear();
        pl_fact_.clear();
        auto shifted = [&](double rho) {
            detail::SpMat A = L;
            if (rho != 0.0) {
                detail::SpMat D(dim(), dim());
                D.setIdentity();
                D.diagonal() = cl;
                A = detail::symmetrized(L - rho * D);
            }
            return A;
        };
        for (double rho : pr_roots)
            pr_fact_.push_back(detail::factorize(shifted(rho), "right factor"));
        for (double rho : pl_roots)
            pl_fact_.push_back(detail::factorize(shifted(rho), "left factor"));
    }

private:
    std::vector<std::unique_ptr<detail::Chol>> pr_fact_, pl_fact_;
};

namespace detail {

struct SpectralSetup {
    SpMat L;
    Eigen::VectorXd cl;
    double c_up, lb;
    double phi;   // fractional part of the exponent
    int n;        // integer part
    bool fractional;
};

inline SpectralSetup spectral_setup(const SpMat& C, const SpMat& Lin, double exponent,
                                    double scale_factor, int n_tau)
{
    if (C.rows() != C.cols() || Lin.rows() != Lin.cols() || C.rows() != Lin.rows())
        throw std::invalid_argument("latent model: C and L must be square and equal size");
    if (C.rows() != n_tau)
        throw std::invalid_argument("latent model: tau vector length mismatch");
    if (!(scale_factor > 0.0))
        throw std::invalid_argument("latent model: scale_factor must be positive");
    SpectralSetup s;
    s.L = symmetrized(Lin);
    s.cl = lumped_diagonal(C);
    s.c_up = gershgorin_upper(s.L, s.cl);
    s.lb = scale_factor / s.c_up;
    if (!(s.lb < 1.0))
        throw std::invalid_argument(
            "latent model: scale_factor exceeds the spectral upper bound");
    const double rounded = std::round(exponent);
    s.fractional = std::abs(exponent - rounded) > 1e-12;
    s.n = s.fractional ? static_cast<int>(std::floor(exponent))
                       : static_cast<int>(rounded);
    s.phi = s.fractional ? exponent - s.n : 0.0;
    return s;
}

// (C_lumped^{-1} L)^n as a sparse matrix (identity for n = 0)
inline SpMat m_power(const SpMat& L, const Eigen::VectorXd& cl, int n)
{
    SpMat P(L.rows(), L.cols());
    P.setIdentity();
    const SpMat M = Eigen::VectorXd(cl.cwiseInverse()).asDiagonal() * L;
    for (int i = 0; i < n; ++i) P = (P * M).eval();
    P.makeCompressed();
    return P;
}

} // namespace detail

/// Covariance-based construction from raw matrices: C (mass, lumped
/// internally), L (SPD operator), alpha = 2 beta the full exponent,
/// nodal tau, and a positive lower bound for the spectrum of C_lumped^{-1} L.
inline CovLatentModel build_generic_cov(const detail::SpMat& C, const detail::SpMat& Lin,
                                        double alpha, const Eigen::VectorXd& tau_nodes,
                                        double scale_factor, int m,
                                        RationalMethod method = RationalMethod::chebfunLB,
                                        double lb_override = 0.0)
{
    if (!(alpha > 0.5))
        throw std::invalid_argument(
            "build_generic_cov: requires alpha > 1/2 (beta = alpha/2 > d/4 in d = 1)");
    if (m < 1) throw std::invalid_argument("build_generic_cov: m must be >= 1");
    for (int i = 0; i < tau_nodes.size(); ++i)
        if (!(tau_nodes[i] > 0.0))
            throw std::invalid_argument("build_generic_cov: tau must be positive");

    const auto s = detail::spectral_setup(C, Lin, alpha, scale_factor,
                                          static_cast<int>(tau_nodes.size()));
    CovLatentModel model;
    model.alpha = alpha;
    model.floor_alpha = s.n;
    model.fractional = s.fractional;
    model.scale_factor = scale_factor;
    model.lb = lb_override > 0.0 ? lb_override : s.lb;
    if (!(model.lb < 1.0))
        throw std::invalid_argument("build_generic_cov: lb override must be below 1");
    model.L = s.L;
    model.cl = s.cl;
    model.tau = tau_nodes;

    const auto D = tau_nodes.asDiagonal();
    detail::SpMat Cl(s.L.rows(), s.L.cols());
    Cl.setIdentity();
    Cl.diagonal() = s.cl;

    if (!s.fractional) {
        // integer exponent: the construction is exact, one block
        model.m = 0;
        model.k_lam = 1.0;
        const detail::SpMat Kinv = s.L * detail::m_power(s.L, s.cl, s.n - 1);
        model.Q.push_back(detail::symmetrized(D * Kinv * D));
        model.finalize();
        return model;
    }

    model.m = m;
    model.rational = rational_coeffs(s.phi, m, model.lb, method);
    // rescale the decomposition from [lb, 1] to the lambda domain
    model.k_lam = std::pow(scale_factor, -s.phi) * model.rational.k;
    for (int i = 0; i < m; ++i) {
        model.r_lam.push_back(std::pow(scale_factor, 1.0 - s.phi) *
                              model.rational.residues[i]);
        model.p_lam.push_back(scale_factor * model.rational.poles[i]);
    }
    if (model.k_lam <= 0.0)
        throw std::runtime_error("build_generic_cov: nonpositive constant term");

    const detail::SpMat Sn = detail::m_power(s.L, s.cl, s.n);
    for (int i = 0; i < m; ++i) {
        if (!(model.r_lam[i] > 0.0) || !(model.p_lam[i] < 0.0))
            throw std::runtime_error(
                "build_generic_cov: partial fraction term " + std::to_string(i + 1) +
                " has the wrong sign structure");
        const detail::SpMat shifted = s.L - model.p_lam[i] * Cl;
        model.Q.push_back(
            detail::symmetrized(D * ((shifted * Sn) / model.r_lam[i]) * D));
    }
    // constant term: covariance k K with K = V Lambda^{-n} V^T, so the
    // precision is K^{-1}/k, which is sparse (C_lumped for n = 0)
    detail::SpMat Kinv;
    if (s.n == 0)
        Kinv = Cl;
    else
        Kinv = s.L * detail::m_power(s.L, s.cl, s.n - 1);
    model.Q.push_back(detail::symmetrized(D * (Kinv / model.k_lam) * D));
    model.finalize();
    return model;
}

/// Operator-based construction from raw matrices; beta is the operator
/// exponent (alpha / 2 for the Matern link).
inline OpLatentModel build_generic_op(const detail::SpMat& C, const detail::SpMat& Lin,
                                      double beta, const Eigen::VectorXd& tau_nodes,
                                      double scale_factor, int m,
                                      RationalMethod method = RationalMethod::chebfunLB,
                                      double lb_override = 0.0)
{
    if (!(beta > 0.25))
        throw std::invalid_argument("build_generic_op: requires beta > d/4 = 1/4 in d = 1");
    if (m < 1) throw std::invalid_argument("build_generic_op: m must be >= 1");
    for (int i = 0; i < tau_nodes.size(); ++i)
        if (!(tau_nodes[i] > 0.0))
            throw std::invalid_argument("build_generic_op: tau must be positive");

    const auto s = detail::spectral_setup(C, Lin, beta, scale_factor,
                                          static_cast<int>(tau_nodes.size()));
    OpLatentModel model;
    model.beta = beta;
    model.m_beta = s.n;
    model.fractional = s.fractional;
    model.scale_factor = scale_factor;
    model.lb = s.lb;
    model.L = s.L;
    model.cl = s.cl;
    model.cl_inv = s.cl.cwiseInverse();
    model.cl_sqrt = s.cl.cwiseSqrt();
    model.tau = tau_nodes;

    if (s.fractional) {
        // factor out lambda^{-floor(beta)} and approximate the remaining
        // power: with x = scale/lambda and x^phi ~ P(x)/Q(x) (degrees mn, md),
        //   lambda^{-beta} ~ scale^{-phi} P~(lambda) /
        //                    (Q~(lambda) lambda^{floor(beta) - (md - mn)})
        // where P~(lambda) = lambda^{mn} P(scale/lambda) has roots
        // scale * roots(reversed P) and leading coefficient P(0), same for Q~.
        // The balance floor(beta) - (md - mn) can be -1 ([m/(m+1)] form with
        // beta < 1), in which case the zero root lands on the right factor.
        model.m = m;
        model.m_beta = std::max(s.n, 1);
        // the operator form approximates on an interval extended one decade
        // below the spectral lower bound: the squared factors double the
        // spectral error near the bound, and the widened interval restores
        // the reference accuracy; all poles stay below the spectrum
        model.lb = lb_override > 0.0 ? lb_override : s.lb / 10.0;
        if (!(model.lb < 1.0))
            throw std::invalid_argument("build_generic_op: lb override must be below 1");
        model.rational = rational_coeffs(s.phi, m, model.lb, method, /*op_form=*/true);
        detail::poly pn(model.rational.numer.rbegin(), model.rational.numer.rend());
        detail::poly qd(model.rational.denom.rbegin(), model.rational.denom.rend());
        const int mn = static_cast<int>(model.rational.numer.size()) - 1;
        const int md = static_cast<int>(model.rational.denom.size()) - 1;
        const int nzeros = s.n - (md - mn);
        if (nzeros < -1)
            throw std::runtime_error("build_generic_op: unbalanced factor degrees");
        // any root must stay strictly below the spectral lower bound (z < 1 in
        // the reversed domain), so every shifted factor L - z*scale*C is SPD;
        // the [m/(m+1)] form places one such positive subspectral pole
        for (double z : detail::real_roots(pn, "the right polynomial")) {
            if (!(z < 1.0))
                throw std::runtime_error("build_generic_op: right root inside the spectrum");
            model.pr_roots.push_back(scale_factor * z);
        }
        // nonzero left roots first (pairing with the right roots in sorted
        // order keeps the interleaved factor sweeps well scaled), then the
        // roots at zero
        for (double z : detail::real_roots(qd, "the left polynomial")) {
            if (!(z < 1.0))
                throw std::runtime_error("build_generic_op: left root inside the spectrum");
            model.pl_roots.push_back(scale_factor * z);
        }
        if (nzeros >= 0)
            model.pl_roots.insert(model.pl_roots.end(), nzeros, 0.0);
        else
            model.pr_roots.insert(model.pr_roots.end(), -nzeros, 0.0);
        model.c_r = pn.back() * std::pow(scale_factor, -s.phi);
        model.c_l = qd.back();
        if (model.c_r * model.c_l < 0.0) { // fix the overall sign on c_r
            model.c_r = -model.c_r;
            model.c_l = -model.c_l;
        }
    } else {
        model.pl_roots.assign(s.n, 0.0);
        model.m_beta = s.n;
    }
    model.finalize();
    return model;
}

namespace detail {

inline Eigen::VectorXd constant_tau(const MaternParams& p, int n)
{
    return Eigen::VectorXd::Constant(n, p.tau());
}

inline double min_kappa2(const std::vector<double>& kappa)
{
    double k = kappa[0];
    for (double v : kappa) k = std::min(k, v);
    if (!(k > 0.0)) throw std::domain_error("latent model: kappa must be positive");
    return k * k;
}

} // namespace detail

inline CovLatentModel build_cov_model(const Mesh1D& mesh, const FemMatrices& fem,
                                      const MaternParams& p, int m,
                                      RationalMethod method = RationalMethod::chebfunLB,
                                      double lb_override = 0.0)
{
    auto model = build_generic_cov(fem.C, assemble_L(fem, p.kappa), p.alpha(),
                                   detail::constant_tau(p, mesh.size()),
                                   p.kappa * p.kappa, m, method, lb_override);
    model.mesh_nodes = mesh.nodes;
    return model;
}

inline CovLatentModel build_cov_model(const Mesh1D& mesh, const FemMatrices& fem,
                                      const std::vector<double>& kappa_at_nodes,
                                      const std::vector<double>& tau_at_nodes,
                                      double alpha, int m,
                                      RationalMethod method = RationalMethod::chebfunLB,
                                      double lb_override = 0.0)
{
    auto model = build_generic_cov(
        fem.C, assemble_L(fem, kappa_at_nodes), alpha,
        Eigen::Map<const Eigen::VectorXd>(tau_at_nodes.data(), tau_at_nodes.size()),
        detail::min_kappa2(kappa_at_nodes), m, method, lb_override);
    model.mesh_nodes = mesh.nodes;
    return model;
}

inline OpLatentModel build_op_model(const Mesh1D& mesh, const FemMatrices& fem,
                                    const MaternParams& p, int m,
                                    RationalMethod method = RationalMethod::chebfunLB,
                                    double lb_override = 0.0)
{
    auto model = build_generic_op(fem.C, assemble_L(fem, p.kappa), p.alpha() / 2.0,
                                  detail::constant_tau(p, mesh.size()),
                                  p.kappa * p.kappa, m, method, lb_override);
    model.mesh_nodes = mesh.nodes;
    return model;
}

inline OpLatentModel build_op_model(const Mesh1D& mesh, const FemMatrices& fem,
                                    const std::vector<double>& kappa_at_nodes,
                                    const std::vector<double>& tau_at_nodes, double alpha,
                                    int m, RationalMethod method = RationalMethod::chebfunLB,
                                    double lb_override = 0.0)
{
    auto model = build_generic_op(
        fem.C, assemble_L(fem, kappa_at_nodes), alpha / 2.0,
        Eigen::Map<const Eigen::VectorXd>(tau_at_nodes.data(), tau_at_nodes.size()),
        detail::min_kappa2(kappa_at_nodes), m, method, lb_override);
    model.mesh_nodes = mesh.nodes;
    return model;
}

/// Dense, unfactored evaluation of the operator-based covariance: evaluates
/// p_r and p_l as full monomial matrix polynomials in M.  Numerically
/// unstable for m > 2 -- kept for demonstration and small sanity checks.
inline Eigen::MatrixXd dense_covariance_direct(const OpLatentModel& model)
{
    const int n = model.dim();
    const Eigen::MatrixXd M =
        model.cl_inv.asDiagonal() * Eigen::MatrixXd(model.L);
    auto poly_in_M = [&](const std::vector<double>& roots, double lead) {
        // expand to monomial coefficients, then Horner in the dense matrix
        detail::poly c{lead};
        for (double r : roots) c = detail::poly_mul(c, detail::poly{-r, 1.0L});
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
        for (auto it = c.rbegin(); it != c.rend(); ++it)
            P = (P * M + static_cast<double>(*it) * Eigen::MatrixXd::Identity(n, n)).eval();
        return P;
    };
    const Eigen::MatrixXd Pr = poly_in_M(model.pr_roots, model.c_r);
    const Eigen::MatrixXd Pl = poly_in_M(model.pl_roots, model.c_l);
    const Eigen::MatrixXd Dinv = model.tau.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd rhs =
        Pr * Pr * Eigen::MatrixXd(model.cl_inv.asDiagonal()) * Dinv;
    return Dinv * (Pl * Pl).partialPivLu().solve(rhs);
}

} // namespace fracmatern
