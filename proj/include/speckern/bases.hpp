#pragma once

#include "speckern/matrix.hpp"

#include <span>
#include <vector>

namespace speckern
{

enum class QuadratureKind
{
    GaussLobattoLegendre,
    GaussRadauJacobiAlpha1, ///< weight (1-z), z = -1 included, z = +1 excluded
    GaussRadauJacobiAlpha2, ///< weight (1-z)^2, z = -1 included, z = +1 excluded
};

/// Points strictly increasing in [-1,1]; weights integrate against the
/// rule's Jacobi weight function (1 for Lobatto, (1-z)^alpha for Radau).
struct QuadratureRule
{
    QuadratureKind kind = QuadratureKind::GaussLobattoLegendre;
    std::vector<double> points;
    std::vector<double> weights;

    int size() const { return static_cast<int>(points.size()); }

    /// Highest polynomial degree integrated exactly against the weight.
    int exactness_degree() const;
};

QuadratureRule compute_rule(QuadratureKind kind, int npoints);

// Jacobi polynomials P_n^{(alpha,beta)}(z) and their derivatives.
double jacobi(int n, double alpha, double beta, double z);
double jacobi_derivative(int n, double alpha, double beta, double z);

/// Zeros of P_n^{(alpha,beta)} in increasing order. Newton iteration with
/// Chebyshev initial guesses and deflation against the zeros already found.
std::vector<double> jacobi_zeros(int n, double alpha, double beta);

enum class BasisKind
{
    ModifiedA,
    ModifiedB,
    ModifiedC,
    Lagrange,
};

// Modified hierarchical basis. Vertex modes come first:
//   A_0 = (1-z)/2, A_1 = (1+z)/2, A_p = (1-z)/2 (1+z)/2 P^{1,1}_{p-2}(z)
//   B_{0q} = A_q
//   B_{pq} = ((1-z)/2)^p                                  q = 0
//          = ((1-z)/2)^p (1+z)/2 P^{2p-1,1}_{q-1}(z)      q > 0
//   C_{pqr} = B_{p+q, r}
// Admissible sets: A: p <= P; B: p+q <= P; C: p+q+r <= P.
double modified_a(int P, int p, double z);
double modified_a_derivative(int P, int p, double z);
double modified_b(int P, int p, int q, double z);
double modified_b_derivative(int P, int p, int q, double z);
double modified_c(int P, int p, int q, int r, double z);
double modified_c_derivative(int P, int p, int q, int r, double z);

/// Generic dispatch over the modified families; `index` holds p, (p,q) or
/// (p,q,r). Throws ConfigError for indices outside the admissible set.
double eval_modified_basis(BasisKind kind, int P, std::span<const int> index, double z);

/// Lagrange polynomial through `nodes` with index k, and its derivative.
double lagrange(std::span<const double> nodes, int k, double z);
double lagrange_derivative(std::span<const double> nodes, int k, double z);

/// One-dimensional basis with its quadrature rule. Column ordering:
/// ModifiedA and Lagrange by mode p; ModifiedB by (p,q) lexicographic;
/// ModifiedC by (p,q,r) lexicographic.
struct Basis1D
{
    BasisKind kind = BasisKind::ModifiedA;
    int order = 0;
    QuadratureRule rule;
    Matrix eval;  ///< Q x N: basis values at the rule's points
    Matrix deriv; ///< Q x N: basis derivatives at the rule's points
    std::vector<double> nodes; ///< Lagrange nodes (GLL, order+1), empty otherwise

    int num_points() const { return rule.size(); }
    int num_modes() const { return static_cast<int>(eval.cols()); }
};

Basis1D build_basis_matrices(BasisKind kind, int order, QuadratureRule rule);

/// Collocation differentiation matrix D[i][k] = h_k'(z_i) for the Lagrange
/// polynomials through the rule's points.
struct DiffMatrix
{
    Matrix d;
    int size() const { return static_cast<int>(d.rows()); }
};

DiffMatrix build_diff_matrix(const QuadratureRule &rule);

} // namespace speckern
