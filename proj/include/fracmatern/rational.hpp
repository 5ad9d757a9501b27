#pragma once

// Degree-m rational approximations of x^phi on [lb, 1] and their partial
// fraction decompositions: the coefficient engine behind the operator-based,
// covariance-based and Markov approximation schemes.
//
// Coefficients are stored in the monomial basis on [lb, 1].  The partial
// fractions {k, r_i, p_i} are those of the reciprocal-argument function
//   F(y) = p(1/y) / q(1/y),  y = 1/x,
// which is the normalization in which the sum-of-GMRFs representation is
// written: F(y) = k + sum_i r_i / (y - p_i) with k, r_i > 0 and p_i < 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace fracmatern {

enum class RationalMethod { chebfunLB, chebfun, brasil };

inline std::string to_string(RationalMethod m)
{
    switch (m) {
        case RationalMethod::chebfunLB: return "chebfunLB";
        case RationalMethod::chebfun: return "chebfun";
        case RationalMethod::brasil: return "brasil";
    }
    return "?";
}

inline RationalMethod rational_method_from_string(const std::string& s)
{
    if (s == "chebfunLB") return RationalMethod::chebfunLB;
    if (s == "chebfun") return RationalMethod::chebfun;
    if (s == "brasil") return RationalMethod::brasil;
    throw std::invalid_argument("unknown rational method: " + s);
}

/// Plain partial fraction decomposition k + sum r_i / (x - p_i) of a
/// rational function given by monomial coefficients (equal degrees).
struct PartialFractions {
    double k;
    std::vector<double> residues;
    std::vector<double> poles;
};

struct RationalApprox {
    double phi = 0.0;
    int m = 0;
    double lb = 0.0;
    RationalMethod method = RationalMethod::chebfunLB;
    std::vector<double> numer; // a_0..a_m, monomial coefficients
    std::vector<double> denom; // b_0..b_m
    // reciprocal-argument decomposition, the normalization of the
    // sum-of-GMRFs representation
    double k = 0.0;
    std::vector<double> residues;
    std::vector<double> poles;
};

namespace detail {

using poly = std::vector<long double>; // coefficient i = power i

inline long double poly_eval(const poly& c, long double x)
{
    long double v = 0.0L;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

inline poly poly_derivative(const poly& c)
{
    poly d(std::max<size_t>(c.size(), 1) - 1, 0.0L);
    for (size_t i = 1; i < c.size(); ++i) d[i - 1] = i * c[i];
    return d;
}

inline poly poly_mul(const poly& a, const poly& b)
{
    poly r(a.size() + b.size() - 1, 0.0L);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

// roots of a real polynomial via the companion matrix, Newton-polished
inline std::vector<std::complex<long double>> poly_roots(const poly& c)
{
    int deg = static_cast<int>(c.size()) - 1;
    while (deg > 0 && c[deg] == 0.0L) --deg;
    if (deg < 1) return {};
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> comp =
        Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0L;
    Eigen::EigenSolver<decltype(comp)> es(comp);
    const poly dc = poly_derivative(c);
    std::vector<std::complex<long double>> roots(deg);
    for (int i = 0; i < deg; ++i) {
        std::complex<long double> z(es.eigenvalues()[i].real(),
                                    es.eigenvalues()[i].imag());
        for (int it = 0; it < 6; ++it) {
            std::complex<long double> f = 0.0L, fp = 0.0L;
            for (int j = deg; j >= 0; --j) {
                if (j < deg) fp = fp * z + std::complex<long double>(dc[j] * (0.0L));
                f = f * z + c[j];
            }
            // recompute derivative directly (the folded update above is a no-op)
            fp = 0.0L;
            for (int j = static_cast<int>(dc.size()) - 1; j >= 0; --j) fp = fp * z + dc[j];
            if (std::abs(fp) == 0.0L) break;
            const auto step = f / fp;
            z -= step;
            if (std::abs(step) < 1e-18L * (std::abs(z) + 1.0L)) break;
        }
        roots[i] = z;
    }
    std::sort(roots.begin(), roots.end(),
              [](const auto& a, const auto& b) { return a.real() < b.real(); });
    return roots;
}

// Chebyshev coefficients gamma_0..gamma_{K-1} of f on [a,b],
// f = sum gamma_k T_k(t) with t the usual affine map of [a,b] to [-1,1].
template <class F>
std::vector<long double> chebyshev_coeffs(F&& f, long double a, long double b, int K,
                                          int N = 4096)
{
    const long double pi = 3.14159265358979323846264338L;
    std::vector<long double> fv(N);
    for (int j = 0; j < N; ++j) {
        const long double t = std::cos(pi * (j + 0.5L) / N);
        const long double x = 0.5L * ((b - a) * t + (b + a));
        fv[j] = f(x);
    }
    std::vector<long double> g(K);
    for (int k = 0; k < K; ++k) {
        long double s = 0.0L;
        for (int j = 0; j < N; ++j) s += fv[j] * std::cos(k * pi * (j + 0.5L) / N);
        g[k] = (k == 0 ? 1.0L : 2.0L) * s / N;
    }
    return g;
}

// monomial coefficients (in t) of T_0..T_n
inline std::vector<poly> chebyshev_basis_monomial(int n)
{
    std::vector<poly> T(n + 1);
    T[0] = {1.0L};
    if (n >= 1) T[1] = {0.0L, 1.0L};
    for (int k = 2; k <= n; ++k) {
        poly t(k + 1, 0.0L);
        for (size_t i = 0; i < T[k - 1].size(); ++i) t[i + 1] += 2.0L * T[k - 1][i];
        for (size_t i = 0; i < T[k - 2].size(); ++i) t[i] -= T[k - 2][i];
        T[k] = std::move(t);
    }
    return T;
}

// compose a polynomial in t with the affine map t = alpha x + beta
inline poly poly_compose_affine(const poly& c, long double alpha, long double beta)
{
    poly result{0.0L};
    poly lin{beta, alpha};
    poly power{1.0L};
    for (size_t i = 0; i < c.size(); ++i) {
        if (result.size() < power.size()) result.resize(power.size(), 0.0L);
        for (size_t j = 0; j < power.size(); ++j) result[j] += c[i] * power[j];
        if (i + 1 < c.size()) power = poly_mul(power, lin);
    }
    return result;
}

inline std::vector<double> to_double(const poly& c)
{
    std::vector<double> r(c.size());
    for (size_t i = 0; i < c.size(); ++i) r[i] = static_cast<double>(c[i]);
    return r;
}

inline poly to_long(const std::vector<double>& c)
{
    poly r(c.size());
    for (size_t i = 0; i < c.size(); ++i) r[i] = c[i];
    return r;
}

// scale both polynomials so max |denom coefficient| == 1
inline void normalize_pair(poly& p, poly& q)
{
    long double mx = 0.0L;
    for (auto v : q) mx = std::max(mx, std::abs(v));
    if (mx == 0.0L) throw std::runtime_error("rational: zero denominator");
    long double sign = 1.0L;
    // make the denominator positive at the right endpoint for determinism
    if (poly_eval(q, 1.0L) < 0.0L) sign = -1.0L;
    for (auto& v : p) v *= sign / mx;
    for (auto& v : q) v *= sign / mx;
}

} // namespace detail

/// Partial fraction decomposition of p/q with deg p == deg q and simple
/// real denominator roots: p(x)/q(x) = k + sum r_i / (x - p_i).
inline PartialFractions partial_fractions(const std::vector<double>& numer,
                                          const std::vector<double>& denom)
{
    if (numer.size() != denom.size() || numer.empty())
        throw std::invalid_argument("partial_fractions: need equal-degree polynomials");
    const auto p = detail::to_long(numer);
    const auto q = detail::to_long(denom);
    const int m = static_cast<int>(q.size()) - 1;
    PartialFractions pf;
    pf.k = static_cast<double>(p[m] / q[m]);
    if (m == 0) return pf;

    const auto roots = detail::poly_roots(q);
    long double scale = 0.0L;
    for (auto v : q) scale = std::max(scale, std::abs(v));
    const auto dq = detail::poly_derivative(q);
    for (const auto& z : roots) {
        if (std::abs(z.imag()) > 1e-8L * std::max<long double>(1.0L, std::abs(z.real())))
            throw std::runtime_error(
                "partial_fractions: complex denominator root " +
                std::to_string(static_cast<double>(z.real())) + " + " +
                std::to_string(static_cast<double>(z.imag())) + "i");
        pf.poles.push_back(static_cast<double>(z.real()));
    }
    std::sort(pf.poles.begin(), pf.poles.end());
    for (size_t i = 1; i < pf.poles.size(); ++i)
        if (std::abs(pf.poles[i] - pf.poles[i - 1]) <
            1e-10 * std::max(1.0, std::abs(pf.poles[i])))
            throw std::runtime_error("partial_fractions: repeated denominator root near " +
                                     std::to_string(pf.poles[i]));
    for (double root : pf.poles) {
        const long double x = root;
        // residue of (p - k q)/q; subtracting k q removes the constant part
        long double num = detail::poly_eval(p, x) -
                          static_cast<long double>(pf.k) * detail::poly_eval(q, x);
        long double den = detail::poly_eval(dq, x);
        pf.residues.push_back(static_cast<double>(num / den));
    }
    return pf;
}

/// Evaluates p(x)/q(x) by Horner on both polynomials.
inline double eval_rational(const RationalApprox& ra, double x)
{
    return static_cast<double>(detail::poly_eval(detail::to_long(ra.numer), x) /
                               detail::poly_eval(detail::to_long(ra.denom), x));
}

/// Evaluates the stored decomposition in its own normalization:
/// k + sum r_i / (1/x - p_i), identical to eval_rational up to rounding.
inline double eval_partial_fractions(const RationalApprox& ra, double x)
{
    const double y = 1.0 / x;
    long double v = ra.k;
    for (size_t i = 0; i < ra.poles.size(); ++i)
        v += static_cast<long double>(ra.residues[i]) / (y - ra.poles[i]);
    return static_cast<double>(v);
}

namespace detail {

// attach the reciprocal-argument partial fractions to a freshly built pair
inline void finish_rational(RationalApprox& ra)
{
    std::vector<double> pr(ra.numer.rbegin(), ra.numer.rend());
    std::vector<double> qr(ra.denom.rbegin(), ra.denom.rend());
    // p(1/y)/q(1/y) = y^{deg q - deg p} pr(y)/qr(y); for the [m/(m+1)]
    // operator form that leaves one extra power of y on the numerator
    while (pr.size() < qr.size()) pr.insert(pr.begin(), 0.0);
    const PartialFractions pf = partial_fractions(pr, qr);
    ra.k = pf.k;
    ra.residues = pf.residues;
    ra.poles = pf.poles;
}

} // namespace detail

/// Clenshaw-Lord style Chebyshev-Pade approximant of x^phi on [lb, 1]
/// (Maehly linearization: the denominator solves the Hankel-type system that
/// cancels the first deg(q) Chebyshev coefficients of f q - p beyond order m).
/// Type is [m/m] (covariance form) or, with op_form set, [m/(m+1)] (operator
/// form, one extra denominator degree).
inline RationalApprox chebyshev_pade_coeffs(double phi, int m, double lb,
                                            bool op_form = false)
{
    if (!(phi > 0.0 && phi < 1.0))
        throw std::invalid_argument("chebyshev_pade_coeffs: phi must be in (0,1)");
    if (m < 1 || m > 8)
        throw std::invalid_argument("chebyshev_pade_coeffs: m must be in [1,8]");
    if (!(lb >= 0.0 && lb < 1.0))
        throw std::invalid_argument("chebyshev_pade_coeffs: lb must be in [0,1)");

    const int md = m + (op_form ? 1 : 0); // denominator degree
    const long double a = lb, b = 1.0L;
    // with a positive lower bound the series converges geometrically at rate
    // ~exp(-2 k sqrt(lb)), so the truncation length scales with 1/sqrt(lb);
    // at lb = 0 convergence is algebraic and the expansion is capped at 512
    const int K = (lb > 0.0)
                      ? std::min(512, std::max({64, 6 * m + 16,
                                                static_cast<int>(8.0 / std::sqrt(lb))}))
                      : 512;
    const long double lphi = phi;
    auto g = detail::chebyshev_coeffs(
        [lphi](long double x) { return std::pow(x, lphi); }, a, b, K, 8192);
    // symmetric extension with the halved-constant convention
    auto ghat = [&g](int i) { return (i == 0) ? 2.0L * g[0] : g[i]; };

    // denominator: cancel Chebyshev coefficients m+1 .. m+md of f q - p
    using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    Mat M(md, md + 1);
    for (int s = m + 1; s <= m + md; ++s)
        for (int j = 0; j <= md; ++j)
            M(s - m - 1, j) = g[j + s] + ghat(std::abs(s - j));
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    {
        const long double smax = svd.singularValues()(0);
        if (!(smax > 0.0L) || (md > 1 && svd.singularValues()(md - 1) < 1e-17L * smax))
            throw std::runtime_error(
                "chebyshev_pade_coeffs: degenerate system for phi=" +
                std::to_string(phi) + " m=" + std::to_string(m) +
                " lb=" + std::to_string(lb));
    }
    Eigen::Matrix<long double, Eigen::Dynamic, 1> bq = svd.matrixV().col(md);

    // numerator Chebyshev coefficients of f * q, orders 0..m
    std::vector<long double> ac(m + 1, 0.0L), bc(md + 1);
    for (int j = 0; j <= md; ++j) bc[j] = bq(j);
    for (int j = 0; j <= md; ++j) {
        ac[0] += (j == 0) ? bc[0] * g[0] : 0.5L * bc[j] * g[j];
        for (int s = 1; s <= m; ++s)
            ac[s] += 0.5L * bc[j] * (g[j + s] + ghat(std::abs(j - s)));
    }

    // Chebyshev (in t) -> monomial (in t) -> monomial (in x)
    const auto T = detail::chebyshev_basis_monomial(md);
    detail::poly pt(m + 1, 0.0L), qt(md + 1, 0.0L);
    for (int j = 0; j <= md; ++j)
        for (size_t i = 0; i < T[j].size(); ++i) {
            if (j <= m) pt[i] += ac[j] * T[j][i];
            qt[i] += bc[j] * T[j][i];
        }
    const long double alpha = 2.0L / (b - a), beta = -(b + a) / (b - a);
    detail::poly px = detail::poly_compose_affine(pt, alpha, beta);
    detail::poly qx = detail::poly_compose_affine(qt, alpha, beta);
    detail::normalize_pair(px, qx);

    RationalApprox ra;
    ra.phi = phi;
    ra.m = m;
    ra.lb = lb;
    ra.method = (lb > 0.0) ? RationalMethod::chebfunLB : RationalMethod::chebfun;
    ra.numer = detail::to_double(px);
    ra.denom = detail::to_double(qx);
    detail::finish_rational(ra);
    return ra;
}

namespace detail {

struct Barycentric {
    std::vector<long double> y, fy, w; // support points, values, weights
    long double operator()(long double x) const
    {
        long double num = 0.0L, den = 0.0L;
        for (size_t j = 0; j < y.size(); ++j) {
            const long double d = x - y[j];
            if (d == 0.0L) return fy[j];
            num += w[j] * fy[j] / d;
            den += w[j] / d;
        }
        return num / den;
    }
};

// type-(m,m) rational interpolant through 2m+1 nodes: support points are the
// even-indexed nodes, the weights span the nullspace of the Loewner matrix of
// the odd-indexed nodes
template <class F>
Barycentric interpolate_rational(const std::vector<long double>& nodes, F&& f)
{
    const int n = static_cast<int>(nodes.size());
    const int m = (n - 1) / 2;
    Barycentric r;
    for (int i = 0; i < n; i += 2) {
        r.y.push_back(nodes[i]);
        r.fy.push_back(f(nodes[i]));
    }
    using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    Mat B(m, m + 1);
    for (int i = 0; i < m; ++i) {
        const long double z = nodes[2 * i + 1];
        const long double fz = f(z);
        for (int j = 0; j <= m; ++j) B(i, j) = (fz - r.fy[j]) / (z - r.y[j]);
    }
    Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeFullV);
    for (int j = 0; j <= m; ++j) r.w.push_back(svd.matrixV()(j, m));
    return r;
}

// max of |err| on [lo, hi]: coarse sampling followed by golden-section
template <class E>
long double interval_max_abs(E&& err, long double lo, long double hi, long double& argmax)
{
    const int ns = 30;
    long double best = -1.0L, xb = lo;
    for (int i = 0; i <= ns; ++i) {
        const long double x = lo + (hi - lo) * i / ns;
        const long double v = std::abs(err(x));
        if (v > best) { best = v; xb = x; }
    }
    long double l = std::max(lo, xb - (hi - lo) / ns);
    long double h = std::min(hi, xb + (hi - lo) / ns);
    const long double gr = 0.61803398874989485L;
    long double c = h - gr * (h - l), d = l + gr * (h - l);
    long double fc = std::abs(err(c)), fd = std::abs(err(d));
    for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
            l = c; c = d; fc = fd;
            d = l + gr * (h - l); fd = std::abs(err(d));
        } else {
            h = d; d = c; fd = fc;
            c = h - gr * (h - l); fc = std::abs(err(c));
        }
    }
    const long double xm = 0.5L * (l + h);
    const long double vm = std::abs(err(xm));
    if (vm > best) { best = vm; xb = xm; }
    argmax = xb;
    return best;
}

} // namespace detail

/// BRASIL: near-best rational approximation of x^phi on [lb, 1] by barycentric
/// interpolation with iterative rescaling of the node intervals until the
/// error equioscillates.
inline RationalApprox brasil_coeffs(double phi, int m, double lb, int max_iter = 200,
                                    double equi_tol = 1e-3)
{
    if (!(phi > 0.0 && phi < 1.0))
        throw std::invalid_argument("brasil_coeffs: phi must be in (0,1)");
    if (m < 1 || m > 8) throw std::invalid_argument("brasil_coeffs: m must be in [1,8]");
    if (!(lb > 0.0 && lb < 1.0))
        throw std::invalid_argument("brasil_coeffs: lb must be in (0,1)");

    const long double a = lb, b = 1.0L;
    const long double lphi = phi;
    auto f = [lphi](long double x) { return std::pow(x, lphi); };
    const int n = 2 * m + 1;
    const long double pi = 3.14159265358979323846264338L;

    // initial nodes: Chebyshev-like points, strictly interior
    std::vector<long double> nodes(n);
    for (int i = 1; i <= n; ++i)
        nodes[i - 1] = a + (b - a) * 0.5L * (1.0L - std::cos(pi * i / (n + 1)));

    detail::Barycentric r;
    std::vector<long double> emax(n + 1), earg(n + 1);
    double defect = 1.0;
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        r = detail::interpolate_rational(nodes, f);
        auto err = [&](long double x) { return f(x) - r(x); };
        long double lo = a;
        for (int i = 0; i <= n; ++i) {
            const long double hi = (i < n) ? nodes[i] : b;
            emax[i] = detail::interval_max_abs(err, lo, hi, earg[i]);
            lo = hi;
        }
        const long double mx = *std::max_element(emax.begin(), emax.end());
        const long double mn = *std::min_element(emax.begin(), emax.end());
        defect = static_cast<double>((mx - mn) / mx);
        if (defect < equi_tol) { converged = true; break; }

        // rescale interval lengths toward equal local errors
        long double logmean = 0.0L;
        for (auto e : emax) logmean += std::log(std::max(e, 1e-300L));
        logmean /= (n + 1);
        std::vector<long double> len(n + 1);
        long double total = 0.0L;
        lo = a;
        const long double step = 0.5L;
        for (int i = 0; i <= n; ++i) {
            const long double hi = (i < n) ? nodes[i] : b;
            long double scale =
                std::exp(-step * (std::log(std::max(emax[i], 1e-300L)) - logmean));
            scale = std::clamp(scale, 0.25L, 4.0L);
            len[i] = (hi - lo) * scale;
            total += len[i];
            lo = hi;
        }
        long double acc = a;
        for (int i = 0; i < n; ++i) {
            acc += len[i] * (b - a) / total;
            nodes[i] = acc;
        }
    }
    if (!converged)
        throw std::runtime_error(
            "brasil_coeffs: no equioscillation after " + std::to_string(max_iter) +
            " iterations (final defect " + std::to_string(defect) + ") for phi=" +
            std::to_string(phi) + " m=" + std::to_string(m) + " lb=" + std::to_string(lb));

    // barycentric -> monomial coefficients
    detail::poly full{1.0L};
    for (auto yj : r.y) full = detail::poly_mul(full, detail::poly{-yj, 1.0L});
    detail::poly px(m + 1, 0.0L), qx(m + 1, 0.0L);
    for (size_t j = 0; j < r.y.size(); ++j) {
        // synthetic division of the full node polynomial by (x - y_j)
        detail::poly quot(m + 1, 0.0L);
        long double carry = full[m + 1];
        for (int i = m; i >= 0; --i) {
            quot[i] = carry;
            carry = full[i] + carry * r.y[j];
        }
        for (int i = 0; i <= m; ++i) {
            qx[i] += r.w[j] * quot[i];
            px[i] += r.w[j] * r.fy[j] * quot[i];
        }
    }
    detail::normalize_pair(px, qx);

    RationalApprox ra;
    ra.phi = phi;
    ra.m = m;
    ra.lb = lb;
    ra.method = RationalMethod::brasil;
    ra.numer = detail::to_double(px);
    ra.denom = detail::to_double(qx);
    detail::finish_rational(ra);
    return ra;
}

/// Dispatch on the method tag.  chebfun ignores lb and expands on [0, 1].
/// op_form requests the [m/(m+1)] operator-form approximant; BRASIL is
/// diagonal-type only, so it always returns the [m/m] approximant.
inline RationalApprox rational_coeffs(double phi, int m, double lb, RationalMethod method,
                                      bool op_form = false)
{
    switch (method) {
        case RationalMethod::chebfunLB: return chebyshev_pade_coeffs(phi, m, lb, op_form);
        case RationalMethod::chebfun: return chebyshev_pade_coeffs(phi, m, 0.0, op_form);
        case RationalMethod::brasil: return brasil_coeffs(phi, m, lb);
    }
    throw std::invalid_argument("rational_coeffs: bad method");
}

/// sup |x^phi - p(x)/q(x)| on a dense grid of [max(lb, grid floor), 1]
inline double rational_sup_error(const RationalApprox& ra, int grid = 10000)
{
    double worst = 0.0;
    const double lo = ra.lb;
    for (int i = 0; i <= grid; ++i) {
        const double x = lo + (1.0 - lo) * i / grid;
        if (x <= 0.0) continue;
        worst = std::max(worst, std::abs(std::pow(x, ra.phi) - eval_rational(ra, x)));
    }
    return worst;
}

} // namespace fracmatern
