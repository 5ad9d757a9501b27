#pragma once

// FEM-free rational Markov approximation of stationary Matern processes on
// intervals.  The spectral density f(w) = A sigma^2 kappa^{-2 alpha} t^{-alpha}
// with t = 1 + (w/kappa)^2 is approximated by
//   f_m(w) = A sigma^2 kappa^{-2 alpha} t^{-n} (k + sum_i r_i / (t - p_i)),
// n = floor(alpha), where {k, r_i, p_i} is the partial-fraction form of the
// rational approximant of x^phi, phi = alpha - n, evaluated at x = 1/t.  Every
// component is a (half-integer) Matern spectral density, so the covariance has
// a closed form.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "matern.hpp"
#include "rational.hpp"

namespace fracmatern {

namespace detail {

// covariance at lag h of the d=1 density c (rate^2 + w^2)^{-a}, a > 1/2:
// a Matern covariance with nu = a - 1/2 scaled to match the constant
inline double density_power_cov(double c, double a, double rate, double h)
{
    const MaternParams unit(1.0, a - 0.5, rate, 1);
    return c / matern_spectral_constant(unit) * matern_cov(h, unit);
}

} // namespace detail

/// One additive component of the Markov rational model.  Component 0 carries
/// the constant k and integer shape n; components 1..m carry a residue/pole
/// pair and the shifted rate kappa_i = kappa sqrt(1 - p_i).
struct MarkovComponent {
    double weight = 0.0;  // k (component 0) or r_i
    double pole = 0.0;    // 0 for component 0, p_i < 0 otherwise
    double kappa_i = 0.0; // rate of the shifted exponential part
    int shape = 0;        // integer spectral exponent floor(alpha)
};

class MarkovRationalModel {
public:
    MaternParams params;
    int m = 0;
    int n = 0; // floor(alpha)
    bool fractional = false;
    double constant = 0.0; // A sigma^2 kappa^{-2 alpha}
    RationalApprox rational;
    std::vector<MarkovComponent> components;

    explicit MarkovRationalModel(const MaternParams& p) : params(p) {}

    /// f_m(w); the exact density when alpha is an integer.
    double spectral_density_m(double w) const
    {
        if (!fractional) return matern_spectral_density(w, params);
        const double t = 1.0 + (w / params.kappa) * (w / params.kappa);
        double s = rational.k;
        for (size_t i = 0; i < rational.poles.size(); ++i)
            s += rational.residues[i] / (t - rational.poles[i]);
        return constant * std::pow(t, -n) * s;
    }

    /// Closed-form covariance of f_m at lag h >= 0.  For alpha < 1 the
    /// constant component of f_m is not integrable (white noise); only the
    /// absolutely continuous part is evaluated (see the decisions ledger).
    double markov_cov(double h) const
    {
        if (h < 0.0) throw std::domain_error("markov_cov: h must be nonnegative");
        if (!fractional) return matern_cov(h, params);
        const double kap = params.kappa;
        const double k2 = kap * kap;
        double cov = 0.0;
        for (const MarkovComponent& c : components) {
            if (c.pole == 0.0) {
                // component 0: density constant * k * t^{-n}
                if (n >= 1)
                    cov += detail::density_power_cov(constant * c.weight * std::pow(k2, n),
                                                     n, kap, h);
                continue;
            }
            // component i: density constant * r_i * t^{-n} / (t - p_i), with
            //   1/(t^n (t-p)) = 1/(p^n (t-p)) - sum_{j=1..n} p^{j-n-1}/t^j,
            //   1/(t-p) = kappa^2/(kappa_i^2 + w^2), 1/t^j = kappa^{2j}(kappa^2+w^2)^{-j}
            const double B = constant * c.weight;
            double v = std::pow(c.pole, -n) *
                       detail::density_power_cov(k2, 1.0, c.kappa_i, h);
            for (int j = 1; j <= n; ++j)
                v -= std::pow(c.pole, j - n - 1) *
                     detail::density_power_cov(std::pow(k2, j), j, kap, h);
            cov += B * v;
        }
        return cov;
    }

    /// Covariance of every location against the anchor locs[ind].
    std::vector<double> covariance_curve(const std::vector<double>& locs, int ind) const
    {
        if (ind < 0 || ind >= static_cast<int>(locs.size()))
            throw std::invalid_argument("covariance_curve: anchor index out of range");
        std::vector<double> out(locs.size());
        for (size_t j = 0; j < locs.size(); ++j)
            out[j] = markov_cov(std::abs(locs[j] - locs[static_cast<size_t>(ind)]));
        return out;
    }
};

/// Builds the order-m Markov rational approximation of a d=1 Matern model.
/// The rational step runs on x = 1/t with t = 1 + (w/kappa)^2 >= 1, so there
/// is no spectral upper bound fixing the interval; the default (lb = 0, auto)
/// uses the near-best BRASIL approximant on [10^{-(5+m)/2}, 1], an order-
/// dependent window that reproduces the reference accuracy to four digits.
inline MarkovRationalModel
build_markov_rational(const MaternParams& p, int m,
                      RationalMethod method = RationalMethod::brasil,
                      double lb = 0.0)
{
    if (p.d != 1)
        throw std::invalid_argument("build_markov_rational: defined for d = 1 only");
    if (m < 1) throw std::invalid_argument("build_markov_rational: m must be >= 1");
    if (lb == 0.0 && method != RationalMethod::chebfun)
        lb = std::pow(10.0, -0.5 * (5.0 + m));
    MarkovRationalModel model(p);
    model.m = m;
    const double alpha = p.alpha();
    model.n = static_cast<int>(std::floor(alpha));
    const double phi = alpha - model.n;
    model.constant = matern_spectral_constant(p) * p.sigma * p.sigma *
                     std::pow(p.kappa, -2.0 * alpha);
    model.fractional = phi > 1e-12 && phi < 1.0 - 1e-12;
    if (!model.fractional) {
        // integer alpha (to rounding): the model is the exact Matern process
        model.n = static_cast<int>(std::llround(alpha));
        return model;
    }
    model.rational = rational_coeffs(phi, m, lb, method);
    MarkovComponent c0;
    c0.weight = model.rational.k;
    c0.kappa_i = p.kappa;
    c0.shape = model.n;
    model.components.push_back(c0);
    for (int i = 0; i < m; ++i) {
        MarkovComponent ci;
        ci.weight = model.rational.residues[static_cast<size_t>(i)];
        ci.pole = model.rational.poles[static_cast<size_t>(i)];
        if (!(ci.pole < 0.0))
            throw std::runtime_error("build_markov_rational: nonnegative pole");
        ci.kappa_i = p.kappa * std::sqrt(1.0 - ci.pole);
        ci.shape = model.n;
        model.components.push_back(ci);
    }
    return model;
}

} // namespace fracmatern
