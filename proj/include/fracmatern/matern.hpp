#pragma once

// Exact Matern reference quantities: the covariance function, its folded
// (Neumann interval) variant, the 1d spectral density, parameter
// conversions, and a modified Bessel function of the second kind with
// real order.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fracmatern {

namespace detail {

// Coefficients gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu))/(2 mu) and
// gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu))/2 for |mu| <= 1/2, together with
// gampl = 1/Gamma(1+mu) and gammi = 1/Gamma(1-mu).
inline void temme_gammas(double mu, double& gam1, double& gam2,
                         double& gampl, double& gammi)
{
    gampl = 1.0 / std::tgamma(1.0 + mu);
    gammi = 1.0 / std::tgamma(1.0 - mu);
    if (std::abs(mu) < 1e-5) {
        // 1/Gamma(1+mu) = 1 + g1 mu + g2 mu^2 + g3 mu^3 + ...
        constexpr double g1 = 0.57721566490153286061;   // Euler's constant
        constexpr double g3 = -0.04200263503409523553;
        gam1 = -(g1 + g3 * mu * mu);
    } else {
        gam1 = (gammi - gampl) / (2.0 * mu);
    }
    gam2 = 0.5 * (gammi + gampl);
}

} // namespace detail

/// K_nu(x) for real order nu and x > 0.  Temme's series for x < 2,
/// Thompson-Barnett continued fraction for x >= 2, followed by upward
/// recurrence in the order.  Overflow (tiny x, large nu) yields +inf.
inline double bessel_k(double nu, double x)
{
    if (!(x > 0.0))
        throw std::domain_error("bessel_k: x must be positive, got " +
                                std::to_string(x));
    nu = std::abs(nu); // K_{-nu} = K_nu
    constexpr int max_iter = 10000;
    const double eps = std::numeric_limits<double>::epsilon();
    const double pi = 3.14159265358979323846;

    const int nl = static_cast<int>(nu + 0.5);
    const double mu = nu - nl;
    const double mu2 = mu * mu;
    const double xi = 1.0 / x;

    double kmu, k1;
    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = pi * mu;
        const double fact = (std::abs(pimu) < eps) ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = (std::abs(e) < eps) ? 1.0 : std::sinh(e) / e;
        double gam1, gam2, gampl, gammi;
        detail::temme_gammas(mu, gam1, gam2, gampl, gammi);
        double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl;
        double q = 0.5 / (e * gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= max_iter; ++i) {
            ff = (i * ff + p + q) / (i * i - mu2);
            c *= d / i;
            p /= (i - mu);
            q /= (i + mu);
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * eps) break;
        }
        if (i > max_iter)
            throw std::runtime_error("bessel_k: Temme series did not converge");
        kmu = sum;
        k1 = sum1 * 2.0 * xi;
    } else {
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d, delh = d;
        double q1 = 0.0, q2 = 1.0;
        const double a1 = 0.25 - mu2;
        double q = a1, c = a1;
        double a = -a1;
        double s = 1.0 + q * delh;
        int i = 1;
        for (; i < max_iter; ++i) {
            a -= 2 * i;
            c = -a * c / (i + 1.0);
            const double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            const double dels = q * delh;
            s += dels;
            if (std::abs(dels / s) <= eps) break;
        }
        if (i >= max_iter)
            throw std::runtime_error("bessel_k: continued fraction did not converge");
        h = a1 * h;
        kmu = std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
        k1 = kmu * (mu + x + 0.5 - h) * xi;
    }
    for (int i = 1; i <= nl; ++i) {
        const double ktemp = (mu + i) * 2.0 * xi * k1 + kmu;
        kmu = k1;
        k1 = ktemp;
    }
    return kmu; // +inf on overflow, by IEEE arithmetic
}

/// Matern field parameters.  sigma is the marginal standard deviation,
/// nu the smoothness, kappa the inverse length scale and d the spatial
/// dimension.  alpha, tau and the practical correlation range are derived.
struct MaternParams {
    double sigma;
    double nu;
    double kappa;
    int d = 1;

    MaternParams(double sigma_, double nu_, double kappa_, int d_ = 1)
        : sigma(sigma_), nu(nu_), kappa(kappa_), d(d_)
    {
        if (!(sigma > 0.0)) throw std::invalid_argument("MaternParams: sigma must be > 0");
        if (!(nu > 0.0)) throw std::invalid_argument("MaternParams: nu must be > 0");
        if (!(kappa > 0.0)) throw std::invalid_argument("MaternParams: kappa must be > 0");
        if (d_ < 1) throw std::invalid_argument("MaternParams: d must be a positive integer");
    }

    double alpha() const { return nu + 0.5 * d; }
    double range() const { return std::sqrt(8.0 * nu) / kappa; }

    // tau^2 = sigma^-2 Gamma(nu) Gamma(alpha)^-1 (4 pi)^{-d/2} kappa^{-2 nu}
    double tau_squared() const
    {
        const double pi = 3.14159265358979323846;
        return std::tgamma(nu) /
               (sigma * sigma * std::tgamma(alpha()) *
                std::pow(4.0 * pi, 0.5 * d) * std::pow(kappa, 2.0 * nu));
    }
    double tau() const { return std::sqrt(tau_squared()); }

    static MaternParams from_range(double sigma, double nu, double range, int d = 1)
    {
        if (!(range > 0.0)) throw std::invalid_argument("MaternParams: range must be > 0");
        return MaternParams(sigma, nu, std::sqrt(8.0 * nu) / range, d);
    }

    // Recovers sigma from (tau, nu, kappa, d) by inverting the tau^2 relation.
    static MaternParams from_tau(double tau, double nu, double kappa, int d = 1)
    {
        if (!(tau > 0.0)) throw std::invalid_argument("MaternParams: tau must be > 0");
        const double pi = 3.14159265358979323846;
        const double alpha = nu + 0.5 * d;
        const double sigma2 = std::tgamma(nu) /
            (tau * tau * std::tgamma(alpha) * std::pow(4.0 * pi, 0.5 * d) *
             std::pow(kappa, 2.0 * nu));
        return MaternParams(std::sqrt(sigma2), nu, kappa, d);
    }
};

/// Matern covariance r(h) = sigma^2 / (2^{nu-1} Gamma(nu)) (kappa h)^nu K_nu(kappa h).
inline double matern_cov(double h, const MaternParams& p)
{
    if (h < 0.0) throw std::domain_error("matern_cov: h must be nonnegative");
    if (h == 0.0) return p.sigma * p.sigma;
    const double z = p.kappa * h;
    const double val = p.sigma * p.sigma / (std::pow(2.0, p.nu - 1.0) * std::tgamma(p.nu)) *
                       std::pow(z, p.nu) * bessel_k(p.nu, z);
    // (kappa h)^nu K_nu underflows jointly for small z; the limit is sigma^2
    return std::isfinite(val) ? val : p.sigma * p.sigma;
}

/// Folded Matern covariance on [0, L]: the reflected sum
/// sum_k r(|s - t + 2kL|) + r(|s + t + 2kL|), truncated once the last
/// added term drops below tol * sigma^2 (hard cap at |k| = 10^4).
inline double folded_matern_cov(double s, double t, const MaternParams& p,
                                double L, double tol = 1e-12)
{
    if (s < 0.0 || s > L || t < 0.0 || t > L)
        throw std::domain_error("folded_matern_cov: locations must lie in [0, L]");
    if (!(tol > 0.0)) throw std::invalid_argument("folded_matern_cov: tol must be > 0");
    const double thresh = tol * p.sigma * p.sigma;
    double total = matern_cov(std::abs(s - t), p) + matern_cov(s + t, p);
    constexpr int k_cap = 10000;
    for (int k = 1; k <= k_cap; ++k) {
        double term = 0.0;
        term += matern_cov(std::abs(s - t + 2.0 * k * L), p);
        term += matern_cov(std::abs(s - t - 2.0 * k * L), p);
        term += matern_cov(std::abs(s + t + 2.0 * k * L), p);
        term += matern_cov(std::abs(s + t - 2.0 * k * L), p);
        total += term;
        if (term < thresh) break;
    }
    return total;
}

/// Spectral constant A = (1/2pi) Gamma(alpha) sqrt(4 pi) kappa^{2 nu} / Gamma(nu)
/// of the d=1 Matern spectral density.
inline double matern_spectral_constant(const MaternParams& p)
{
    const double pi = 3.14159265358979323846;
    return std::tgamma(p.alpha()) * std::sqrt(4.0 * pi) *
           std::pow(p.kappa, 2.0 * p.nu) / (2.0 * pi * std::tgamma(p.nu));
}

/// f(w) = A sigma^2 (kappa^2 + w^2)^{-alpha}, d = 1 only.
inline double matern_spectral_density(double w, const MaternParams& p)
{
    if (p.d != 1)
        throw std::domain_error("matern_spectral_density: defined for d = 1 only");
    return matern_spectral_constant(p) * p.sigma * p.sigma *
           std::pow(p.kappa * p.kappa + w * w, -p.alpha());
}

} // namespace fracmatern
