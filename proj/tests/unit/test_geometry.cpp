#include "speckern/error.hpp"
#include "speckern/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace speckern;

TEST_CASE("affine map of the identity vertices")
{
    const double v[] = {-1, -1, 1, -1, -1, 1};
    const Point x = affine_map(2, v, {0.3, -0.2, 0.0});
    CHECK(std::abs(x[0] - 0.3) < 1e-15);
    CHECK(std::abs(x[1] + 0.2) < 1e-15);
}

TEST_CASE("affine block: scaled and sheared element")
{
    // x = 2 xi_0 + 0.5 xi_1, y = 3 xi_1 (plus a shift)
    const double v[] = {0, 0, 4, 0, 1, 6};
    const auto g = make_affine_block(ShapeType::Quad, v, 1);
    CHECK(g.cls == GeometryClass::Regular);
    CHECK(std::abs(g.jac[0] - 6.0) < 1e-15);
    // inverse of [[2, 0.5], [0, 3]]
    CHECK(std::abs(g.metric(0, 0, 0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(g.metric(0, 0, 0, 1) + 0.5 / 6.0) < 1e-15);
    CHECK(std::abs(g.metric(0, 0, 1, 0)) < 1e-15);
    CHECK(std::abs(g.metric(0, 0, 1, 1) - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("inverted element is rejected")
{
    const double v[] = {0, 0, 0, 2, 2, 0};
    CHECK_THROWS_AS(make_affine_block(ShapeType::Tri, v, 1), GeometryError);
    const double flat[] = {0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0};
    CHECK_THROWS_AS(make_affine_block(ShapeType::Tet, flat, 1), GeometryError);
}

TEST_CASE("vertex count must match")
{
    const double v[] = {0, 0, 1, 0};
    CHECK_THROWS_AS(make_affine_block(ShapeType::Tri, v, 1), ConfigError);
}

TEST_CASE("deformed geometry of an affine map equals the affine factors")
{
    for (ShapeType s : kAllShapes)
    {
        const auto basis = build_shape_basis(s, 3);
        const auto mesh = make_synthetic_mesh(s, 5, 17, 0.0);
        const auto reg = build_geometry(mesh, GeometryClass::Regular, *basis);
        const auto def = build_geometry(mesh, GeometryClass::Deformed, *basis);
        const int d = dimension(s);
        for (int e = 0; e < 5; ++e)
        {
            for (int l = 0; l < basis->num_points; ++l)
            {
                CHECK(std::abs(def.jacobian(e, l) - reg.jacobian(e, 0)) < 1e-12 * reg.jacobian(e, 0));
                CHECK(std::abs(def.wj[e * basis->num_points + l] - basis->ref_weights[l] * reg.jac[e]) < 1e-12);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        CHECK(std::abs(def.metric(e, l, i, j) - reg.metric(e, 0, i, j)) < 1e-11);
            }
        }
    }
}

TEST_CASE("deformed volume converges to the mapped volume")
{
    // Quad with x += 0.5 a sin(pi eta + phase): the area is unchanged by the
    // shear-like perturbation, so sum wj equals the affine area.
    const auto mesh = make_synthetic_mesh(ShapeType::Quad, 3, 5, 0.1);
    const auto affine = make_affine_block(ShapeType::Quad, mesh.vertices, 3);
    const auto basis = build_shape_basis(ShapeType::Quad, 8);
    const auto def = make_deformed_block(*basis, 3, mesh.mapping());
    for (int e = 0; e < 3; ++e)
    {
        double area = 0.0;
        for (int l = 0; l < basis->num_points; ++l)
        {
            area += def.wj[e * basis->num_points + l];
        }
        CHECK(std::abs(area - 4.0 * affine.jac[e]) < 1e-6 * area);
    }
}

TEST_CASE("synthetic mesh is deterministic per element")
{
    const auto a = make_synthetic_mesh(ShapeType::Tet, 10, 99, 0.05);
    const auto b = make_synthetic_mesh(ShapeType::Tet, 4, 99, 0.05);
    for (std::size_t i = 0; i < b.vertices.size(); ++i)
    {
        CHECK(a.vertices[i] == b.vertices[i]);
    }
    const auto c = make_synthetic_mesh(ShapeType::Tet, 4, 100, 0.05);
    CHECK(c.vertices != b.vertices);
    CHECK(element_seed(1, 2) != element_seed(2, 1));
}

TEST_CASE("deformation amplitude is bounded")
{
    CHECK_THROWS_AS(make_synthetic_mesh(ShapeType::Hex, 2, 1, 0.2), ConfigError);
    CHECK_THROWS_AS(make_synthetic_mesh(ShapeType::Hex, 2, 1, -0.01), ConfigError);
    CHECK_NOTHROW(make_synthetic_mesh(ShapeType::Hex, 2, 1, kMaxDeformationAmplitude));
}

TEST_CASE("all synthetic elements have positive Jacobians")
{
    for (ShapeType s : kAllShapes)
    {
        const auto basis = build_shape_basis(s, 4);
        const auto mesh = make_synthetic_mesh(s, 200, 3, kMaxDeformationAmplitude);
        const auto g = build_geometry(mesh, GeometryClass::Deformed, *basis);
        for (double j : g.jac)
        {
            CHECK(j > 0.0);
        }
    }
}

TEST_CASE("weight helpers")
{
    const auto basis = build_shape_basis(ShapeType::Prism, 2);
    const auto mesh = make_synthetic_mesh(ShapeType::Prism, 3, 1, 0.0);
    const auto reg = build_geometry(mesh, GeometryClass::Regular, *basis);
    const auto fused = fuse_weights(reg);
    REQUIRE(fused.size() == 3);
    const auto expanded = expand_weights(reg, *basis);
    REQUIRE(expanded.size() == 3u * basis->num_points);
    for (int e = 0; e < 3; ++e)
        for (int l = 0; l < basis->num_points; ++l)
            CHECK(expanded[e * basis->num_points + l] == doctest::Approx(basis->ref_weights[l] * fused[e]));
}

TEST_CASE("quadrature coordinates follow the map")
{
    const auto basis = build_shape_basis(ShapeType::Tri, 2);
    const auto mesh = make_synthetic_mesh(ShapeType::Tri, 2, 1, 0.05);
    const auto x = quadrature_coordinates(*basis, 2, mesh.mapping());
    REQUIRE(x.size() == 2u * basis->num_points * 2);
    const Point xi = duffy_inverse(ShapeType::Tri, basis->eta[3]);
    const Point p = mesh.map(1, xi);
    CHECK(x[(basis->num_points + 3) * 2 + 0] == p[0]);
    CHECK(x[(basis->num_points + 3) * 2 + 1] == p[1]);
}

TEST_CASE("geometry names")
{
    CHECK(parse_geometry("regular") == GeometryClass::Regular);
    CHECK(parse_geometry("deformed") == GeometryClass::Deformed);
    CHECK_THROWS_AS(parse_geometry("curvy"), ConfigError);
}
