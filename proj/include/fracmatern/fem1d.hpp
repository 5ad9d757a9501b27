#pragma once

// Piecewise-linear finite elements on an interval mesh with Neumann
// boundary conditions: mass, stiffness and observation matrices plus the
// (possibly non-stationary) operator L = G + C_lumped diag(kappa^2).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

namespace fracmatern {

struct Mesh1D {
    std::vector<double> nodes;

    explicit Mesh1D(std::vector<double> n) : nodes(std::move(n))
    {
        if (nodes.size() < 3)
            throw std::domain_error("Mesh1D: need at least 3 nodes");
        for (size_t i = 1; i < nodes.size(); ++i)
            if (!(nodes[i] > nodes[i - 1]))
                throw std::domain_error("Mesh1D: nodes must be strictly increasing");
    }

    int size() const { return static_cast<int>(nodes.size()); }
    double a() const { return nodes.front(); }
    double b() const { return nodes.back(); }
};

inline Mesh1D build_mesh(double a, double b, int n)
{
    if (!(a < b)) throw std::domain_error("build_mesh: need a < b");
    if (n < 3) throw std::domain_error("build_mesh: need n >= 3");
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = a + (b - a) * i / (n - 1);
    nodes.back() = b;
    return Mesh1D(std::move(nodes));
}

struct FemMatrices {
    Eigen::SparseMatrix<double> C;        // consistent mass, tridiagonal
    Eigen::SparseMatrix<double> C_lumped; // diagonal row-sum lumping
    Eigen::SparseMatrix<double> G;        // stiffness
};

inline FemMatrices assemble_fem(const Mesh1D& mesh)
{
    const int n = mesh.size();
    std::vector<Eigen::Triplet<double>> tc, tl, tg;
    tc.reserve(3 * n);
    tl.reserve(n);
    tg.reserve(3 * n);
    for (int e = 0; e + 1 < n; ++e) {
        const double h = mesh.nodes[e + 1] - mesh.nodes[e];
        tc.emplace_back(e, e, h / 3.0);
        tc.emplace_back(e + 1, e + 1, h / 3.0);
        tc.emplace_back(e, e + 1, h / 6.0);
        tc.emplace_back(e + 1, e, h / 6.0);
        tl.emplace_back(e, e, h / 2.0);
        tl.emplace_back(e + 1, e + 1, h / 2.0);
        tg.emplace_back(e, e, 1.0 / h);
        tg.emplace_back(e + 1, e + 1, 1.0 / h);
        tg.emplace_back(e, e + 1, -1.0 / h);
        tg.emplace_back(e + 1, e, -1.0 / h);
    }
    FemMatrices fem;
    fem.C.resize(n, n);
    fem.C_lumped.resize(n, n);
    fem.G.resize(n, n);
    fem.C.setFromTriplets(tc.begin(), tc.end());
    fem.C_lumped.setFromTriplets(tl.begin(), tl.end());
    fem.G.setFromTriplets(tg.begin(), tg.end());
    return fem;
}

/// A_{ij} = phi_j(s_i): linear interpolation weights, rows sum to one.
inline Eigen::SparseMatrix<double> observation_matrix(const Mesh1D& mesh,
                                                      const std::vector<double>& locs)
{
    const int n = mesh.size();
    const double tol = 1e-12 * std::max(1.0, std::max(std::abs(mesh.a()), std::abs(mesh.b())));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * locs.size());
    for (size_t i = 0; i < locs.size(); ++i) {
        double s = locs[i];
        if (s < mesh.a() - tol || s > mesh.b() + tol)
            throw std::domain_error("observation_matrix: location " + std::to_string(s) +
                                    " outside the mesh interval");
        s = std::clamp(s, mesh.a(), mesh.b());
        const auto it = std::upper_bound(mesh.nodes.begin(), mesh.nodes.end(), s);
        int e = static_cast<int>(it - mesh.nodes.begin()) - 1;
        e = std::clamp(e, 0, n - 2);
        const double h = mesh.nodes[e + 1] - mesh.nodes[e];
        const double w = (s - mesh.nodes[e]) / h;
        if (w < 1.0) trip.emplace_back(static_cast<int>(i), e, 1.0 - w);
        if (w > 0.0) trip.emplace_back(static_cast<int>(i), e + 1, w);
    }
    Eigen::SparseMatrix<double> A(static_cast<int>(locs.size()), n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

/// L = G + C_lumped diag(kappa^2) with nodal kappa values.
inline Eigen::SparseMatrix<double> assemble_L(const FemMatrices& fem,
                                              const std::vector<double>& kappa_at_nodes)
{
    const int n = fem.G.rows();
    if (static_cast<int>(kappa_at_nodes.size()) != n)
        throw std::invalid_argument("assemble_L: need one kappa value per node");
    Eigen::VectorXd k2(n);
    for (int i = 0; i < n; ++i) {
        if (!(kappa_at_nodes[i] > 0.0))
            throw std::domain_error("assemble_L: kappa must be positive");
        k2[i] = kappa_at_nodes[i] * kappa_at_nodes[i];
    }
    Eigen::SparseMatrix<double> L = fem.G;
    L += Eigen::SparseMatrix<double>((fem.C_lumped * k2.asDiagonal()).eval());
    return L;
}

inline Eigen::SparseMatrix<double> assemble_L(const FemMatrices& fem, double kappa)
{
    return assemble_L(fem, std::vector<double>(fem.G.rows(), kappa));
}

} // namespace fracmatern
