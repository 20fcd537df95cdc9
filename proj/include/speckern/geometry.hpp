#pragma once

#include "speckern/shapes.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace speckern
{

enum class GeometryClass
{
    Regular,
    Deformed,
};

std::string_view to_string(GeometryClass cls);
GeometryClass parse_geometry(std::string_view name);

/// Metric data of a block.
///
/// Regular: one d x d inverse Jacobian and one |J| per element.
/// Deformed: the same per quadrature point, plus the fused weights
/// wj = w_l |J_l|.
struct GeometricFactors
{
    GeometryClass cls = GeometryClass::Regular;
    ShapeType shape = ShapeType::Quad;
    int dim = 2;
    int num_elements = 0;
    int num_points = 0; ///< quadrature points per element (Deformed storage)

    std::vector<double> dxi_dx; ///< d xi_i / d x_j, row i, column j
    std::vector<double> jac;
    std::vector<double> wj;

    /// d xi_i / d x_j of element e at point l.
    double metric(int e, int l, int i, int j) const
    {
        const std::size_t base = cls == GeometryClass::Regular
                                     ? static_cast<std::size_t>(e)
                                     : static_cast<std::size_t>(e) * num_points + l;
        return dxi_dx[(base * dim + i) * dim + j];
    }
    double jacobian(int e, int l) const
    {
        return cls == GeometryClass::Regular ? jac[e]
                                             : jac[static_cast<std::size_t>(e) * num_points + l];
    }
};

/// Map from standard-element coordinates to physical coordinates.
using CoordinateMap = std::function<Point(int element, const Point &xi)>;

/// Affine image of the standard element fixed by d+1 vertices per element:
/// vertex 0 is the image of (-1,...,-1) and vertex i the image of the point
/// moved to +1 along xi_i. `vertices` holds (d+1)*d values per element.
Point affine_map(int dim, std::span<const double> element_vertices, const Point &xi);

GeometricFactors make_affine_block(ShapeType shape, std::span<const double> vertices,
                                   int num_elements);

/// Iso-parametric metric: the map is sampled at the quadrature points,
/// differentiated by collocation in the collapsed coordinates and inverted
/// pointwise.
GeometricFactors make_deformed_block(const ShapeBasis &basis, int num_elements,
                                     const CoordinateMap &map);

/// Diagonal weight payload: per-point w_l |J_l| for Deformed blocks, per-element
/// |J| for Regular ones (combined with reference weights by the kernels).
std::vector<double> fuse_weights(const GeometricFactors &geom);

/// Per-point w_l |J_l| regardless of class; element-major.
std::vector<double> expand_weights(const GeometricFactors &geom, const ShapeBasis &basis);

/// Physical coordinates at every quadrature point, ((e * N_Q) + l) * d + j.
std::vector<double> quadrature_coordinates(const ShapeBasis &basis, int num_elements,
                                           const CoordinateMap &map);

/// Deterministic benchmark mesh: independent, mildly sheared affine elements,
/// optionally bent by a smooth sinusoidal perturbation. Element e depends only
/// on (seed, e).
struct SyntheticMesh
{
    ShapeType shape = ShapeType::Quad;
    int dim = 2;
    int num_elements = 0;
    double amplitude = 0.0; ///< fraction of the element scale
    std::vector<double> vertices;
    std::vector<double> phases; ///< d per element

    Point map(int e, const Point &xi) const;
    CoordinateMap mapping() const;
};

inline constexpr double kMaxDeformationAmplitude = 0.1;

SyntheticMesh make_synthetic_mesh(ShapeType shape, int num_elements, std::uint64_t seed,
                                  double amplitude = 0.05);

GeometricFactors build_geometry(const SyntheticMesh &mesh, GeometryClass cls,
                                const ShapeBasis &basis);

/// Element-local generator shared by anything that needs per-element
/// determinism.
std::uint64_t element_seed(std::uint64_t seed, std::uint64_t element);

} // namespace speckern
