#pragma once

// Dense elemental matrices built by explicit quadrature loops. Only the
// quadrature rules, collocation derivatives and one-dimensional modified
// basis functions are taken from the library; mode sets, collapsed
// coordinates, metric terms and assembly are re-derived here.

#include "speckern/bases.hpp"
#include "speckern/matrix.hpp"
#include "speckern/shapes.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace speckern::oracle
{

/// Standard-element coordinates to physical coordinates for one element.
using ElementMap = std::function<Point(const Point &xi)>;

struct ElementSpec
{
    ShapeType shape = ShapeType::Quad;
    int order = 1;
    ElementMap map; ///< identity when empty
    std::optional<std::array<int, 3>> qpoints;
};

enum class MatrixKind
{
    BwdTrans,
    Mass,
    Helmholtz,
};

struct DenseElementalMatrix
{
    MatrixKind kind = MatrixKind::Mass;
    Matrix values; ///< N_P x N_P, or N_Q x N_P for BwdTrans
};

/// Mode values at the quadrature points, point index fastest in eta_0.
DenseElementalMatrix assemble_bwd(const ElementSpec &spec);

/// M[m][n] = sum_l w_l |J_l| phi_n(l) phi_m(l).
DenseElementalMatrix assemble_mass(const ElementSpec &spec);

/// H[m][n] = sum_l w_l |J_l| (lambda phi_n phi_m + grad phi_n . grad phi_m),
/// gradients from collocation differentiation of sampled mode values.
DenseElementalMatrix assemble_helmholtz(const ElementSpec &spec, double lambda);

/// lambda B^T W B + sum_ij (D_i B)^T W Lambda_ij (D_j B) with analytic
/// one-dimensional derivatives; a second route for cross-checking.
DenseElementalMatrix assemble_helmholtz_factored(const ElementSpec &spec, double lambda);

std::vector<double> apply_dense(const DenseElementalMatrix &a, std::span<const double> x);

/// max |A - A^T| / max |A|.
double relative_asymmetry(const Matrix &a);

} // namespace speckern::oracle
