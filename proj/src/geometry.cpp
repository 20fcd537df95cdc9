#include "speckern/geometry.hpp"

#include "speckern/error.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace speckern
{

namespace
{

using Mat3 = std::array<std::array<double, 3>, 3>;

double determinant(int dim, const Mat3 &a)
{
    if (dim == 2)
    {
        return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    }
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

Mat3 inverse(int dim, const Mat3 &a, double det)
{
    Mat3 inv{};
    if (dim == 2)
    {
        inv[0][0] = a[1][1] / det;
        inv[0][1] = -a[0][1] / det;
        inv[1][0] = -a[1][0] / det;
        inv[1][1] = a[0][0] / det;
        return inv;
    }
    inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    inv[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
    inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    inv[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
    inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
    inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    return inv;
}

// a[j][i] = d x_j / d xi_i; stores its inverse d xi_i / d x_j.
double store_inverse(int dim, const Mat3 &a, double *out, int element, int point)
{
    const double det = determinant(dim, a);
    if (!(det > 0.0) || !std::isfinite(det))
    {
        throw GeometryError("non-positive Jacobian determinant in element " +
                            std::to_string(element) +
                            (point >= 0 ? " at point " + std::to_string(point) : std::string{}));
    }
    const Mat3 inv = inverse(dim, a, det);
    for (int i = 0; i < dim; ++i)
    {
        for (int j = 0; j < dim; ++j)
        {
            out[i * dim + j] = inv[i][j];
        }
    }
    return det;
}

double unit_uniform(std::mt19937_64 &rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

std::string_view to_string(GeometryClass cls)
{
    return cls == GeometryClass::Regular ? "regular" : "deformed";
}

GeometryClass parse_geometry(std::string_view name)
{
    if (name == "regular")
    {
        return GeometryClass::Regular;
    }
    if (name == "deformed")
    {
        return GeometryClass::Deformed;
    }
    throw ConfigError("unknown geometry '" + std::string(name) + "'");
}

Point affine_map(int dim, std::span<const double> v, const Point &xi)
{
    Point x{};
    for (int j = 0; j < dim; ++j)
    {
        x[j] = v[j];
        for (int i = 0; i < dim; ++i)
        {
            x[j] += 0.5 * (xi[i] + 1.0) * (v[(i + 1) * dim + j] - v[j]);
        }
    }
    return x;
}

GeometricFactors make_affine_block(ShapeType shape, std::span<const double> vertices,
                                   int num_elements)
{
    const int dim = dimension(shape);
    const std::size_t per = static_cast<std::size_t>(dim + 1) * dim;
    if (num_elements < 1 || vertices.size() != per * num_elements)
    {
        throw ConfigError("vertex array does not match the element count");
    }
    GeometricFactors g;
    g.cls = GeometryClass::Regular;
    g.shape = shape;
    g.dim = dim;
    g.num_elements = num_elements;
    g.dxi_dx.resize(static_cast<std::size_t>(num_elements) * dim * dim);
    g.jac.resize(num_elements);
    for (int e = 0; e < num_elements; ++e)
    {
        const double *v = vertices.data() + per * e;
        Mat3 a{};
        for (int j = 0; j < dim; ++j)
        {
            for (int i = 0; i < dim; ++i)
            {
                a[j][i] = 0.5 * (v[(i + 1) * dim + j] - v[j]);
            }
        }
        g.jac[e] = store_inverse(dim, a, g.dxi_dx.data() + static_cast<std::size_t>(e) * dim * dim,
                                 e, -1);
    }
    return g;
}

std::vector<double> quadrature_coordinates(const ShapeBasis &basis, int num_elements,
                                           const CoordinateMap &map)
{
    const int dim = basis.dim;
    const int nq = basis.num_points;
    std::vector<double> x(static_cast<std::size_t>(num_elements) * nq * dim);
    for (int e = 0; e < num_elements; ++e)
    {
        for (int l = 0; l < nq; ++l)
        {
            const Point p = map(e, duffy_inverse(basis.shape, basis.eta[l]));
            for (int j = 0; j < dim; ++j)
            {
                x[(static_cast<std::size_t>(e) * nq + l) * dim + j] = p[j];
            }
        }
    }
    return x;
}

GeometricFactors make_deformed_block(const ShapeBasis &basis, int num_elements,
                                     const CoordinateMap &map)
{
    if (num_elements < 1)
    {
        throw ConfigError("a block needs at least one element");
    }
    const int dim = basis.dim;
    const int nq = basis.num_points;
    const auto &n = basis.nq;
    const std::array<int, 3> stride{1, n[0], n[0] * n[1]};

    GeometricFactors g;
    g.cls = GeometryClass::Deformed;
    g.shape = basis.shape;
    g.dim = dim;
    g.num_elements = num_elements;
    g.num_points = nq;
    g.dxi_dx.resize(static_cast<std::size_t>(num_elements) * nq * dim * dim);
    g.jac.resize(static_cast<std::size_t>(num_elements) * nq);
    g.wj.resize(g.jac.size());

    std::vector<Mat3> gmat(nq);
    for (int l = 0; l < nq; ++l)
    {
        gmat[l] = collapsed_jacobian(basis.shape, basis.eta[l]);
    }

    const std::vector<double> x = quadrature_coordinates(basis, num_elements, map);
    // dx[(l * dim + k) * dim + j] = d x_j / d eta_k
    std::vector<double> dx(static_cast<std::size_t>(nq) * dim * dim);
    for (int e = 0; e < num_elements; ++e)
    {
        const double *xe = x.data() + static_cast<std::size_t>(e) * nq * dim;
        for (int l = 0; l < nq; ++l)
        {
            const int idx[3] = {l % n[0], (l / n[0]) % n[1], l / (n[0] * n[1])};
            for (int k = 0; k < dim; ++k)
            {
                const Matrix &dk = basis.diff[k].d;
                const int base = l - idx[k] * stride[k];
                for (int j = 0; j < dim; ++j)
                {
                    double s = 0.0;
                    for (int a = 0; a < n[k]; ++a)
                    {
                        s += dk(idx[k], a) * xe[(base + a * stride[k]) * dim + j];
                    }
                    dx[(l * dim + k) * dim + j] = s;
                }
            }
        }
        for (int l = 0; l < nq; ++l)
        {
            Mat3 a{};
            for (int j = 0; j < dim; ++j)
            {
                for (int i = 0; i < dim; ++i)
                {
                    double s = 0.0;
                    for (int k = 0; k < dim; ++k)
                    {
                        s += gmat[l][i][k] * dx[(l * dim + k) * dim + j];
                    }
                    a[j][i] = s;
                }
            }
            const std::size_t at = static_cast<std::size_t>(e) * nq + l;
            g.jac[at] = store_inverse(dim, a, g.dxi_dx.data() + at * dim * dim, e, l);
            g.wj[at] = basis.ref_weights[l] * g.jac[at];
        }
    }
    return g;
}

std::vector<double> fuse_weights(const GeometricFactors &geom)
{
    return geom.cls == GeometryClass::Regular ? geom.jac : geom.wj;
}

std::vector<double> expand_weights(const GeometricFactors &geom, const ShapeBasis &basis)
{
    if (geom.cls == GeometryClass::Deformed)
    {
        return geom.wj;
    }
    const int nq = basis.num_points;
    std::vector<double> w(static_cast<std::size_t>(geom.num_elements) * nq);
    for (int e = 0; e < geom.num_elements; ++e)
    {
        for (int l = 0; l < nq; ++l)
        {
            w[static_cast<std::size_t>(e) * nq + l] = basis.ref_weights[l] * geom.jac[e];
        }
    }
    return w;
}

std::uint64_t element_seed(std::uint64_t seed, std::uint64_t element)
{
    // splitmix64 finaliser
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (element + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SyntheticMesh make_synthetic_mesh(ShapeType shape, int num_elements, std::uint64_t seed,
                                  double amplitude)
{
    if (num_elements < 1)
    {
        throw ConfigError("a block needs at least one element");
    }
    if (amplitude < 0.0 || amplitude > kMaxDeformationAmplitude)
    {
        throw ConfigError("deformation amplitude must lie in [0, 0.1]");
    }
    SyntheticMesh mesh;
    mesh.shape = shape;
    mesh.dim = dimension(shape);
    mesh.num_elements = num_elements;
    mesh.amplitude = amplitude;
    const int dim = mesh.dim;
    mesh.vertices.resize(static_cast<std::size_t>(num_elements) * (dim + 1) * dim);
    mesh.phases.resize(static_cast<std::size_t>(num_elements) * dim);
    constexpr double shear = 0.1;
    for (int e = 0; e < num_elements; ++e)
    {
        std::mt19937_64 rng(element_seed(seed, e));
        double *v = mesh.vertices.data() + static_cast<std::size_t>(e) * (dim + 1) * dim;
        for (int j = 0; j < dim; ++j)
        {
            v[j] = (j == 0 ? 2.0 * e : 0.0) + shear * (2.0 * unit_uniform(rng) - 1.0);
        }
        for (int i = 0; i < dim; ++i)
        {
            for (int j = 0; j < dim; ++j)
            {
                const double edge = (i == j ? 1.0 : 0.0) + shear * (2.0 * unit_uniform(rng) - 1.0);
                v[(i + 1) * dim + j] = v[j] + edge;
            }
        }
        for (int j = 0; j < dim; ++j)
        {
            mesh.phases[static_cast<std::size_t>(e) * dim + j] =
                2.0 * std::numbers::pi * unit_uniform(rng);
        }
    }
    return mesh;
}

Point SyntheticMesh::map(int e, const Point &xi) const
{
    const std::size_t per = static_cast<std::size_t>(dim + 1) * dim;
    Point x = affine_map(dim, std::span<const double>(vertices.data() + per * e, per), xi);
    if (amplitude > 0.0)
    {
        for (int j = 0; j < dim; ++j)
        {
            const double phase = phases[static_cast<std::size_t>(e) * dim + j];
            x[j] += 0.5 * amplitude * std::sin(std::numbers::pi * xi[(j + 1) % dim] + phase);
        }
    }
    return x;
}

CoordinateMap SyntheticMesh::mapping() const
{
    return [mesh = *this](int e, const Point &xi) { return mesh.map(e, xi); };
}

GeometricFactors build_geometry(const SyntheticMesh &mesh, GeometryClass cls,
                                const ShapeBasis &basis)
{
    if (mesh.shape != basis.shape)
    {
        throw ConfigError("mesh and basis shapes differ");
    }
    if (cls == GeometryClass::Regular)
    {
        return make_affine_block(mesh.shape, mesh.vertices, mesh.num_elements);
    }
    return make_deformed_block(basis, mesh.num_elements, mesh.mapping());
}

} // namespace speckern
