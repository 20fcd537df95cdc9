#include "speckern/error.hpp"
#include "speckern/field.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace speckern;

TEST_CASE("interleave round-trips for random layouts")
{
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> ne(1, 40), np(1, 30), nc(1, 3), w(1, 16);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial)
    {
        const int e = ne(gen), p = np(gen), c = nc(gen), width = w(gen);
        std::vector<double> canon(static_cast<std::size_t>(e) * p * c);
        for (double &x : canon)
        {
            x = u(gen);
        }
        const auto stored = interleave(canon, e, p, c, width);
        const int padded = (e + width - 1) / width * width;
        REQUIRE(stored.size() == static_cast<std::size_t>(padded) * p * c);
        CHECK(deinterleave(stored, e, p, c, width) == canon);
        // padding lanes stay zero
        for (int comp = 0; comp < c; ++comp)
            for (int el = e; el < padded; ++el)
                for (int pt = 0; pt < p; ++pt)
                {
                    const std::size_t g = el / width;
                    CHECK(stored[comp * static_cast<std::size_t>(padded) * p + (g * p + pt) * width + el % width] == 0.0);
                }
    }
}

TEST_CASE("interleave layout")
{
    // 3 elements, 2 points, width 2: groups {e0,e1}, {e2,pad}
    const std::vector<double> canon{10, 11, 20, 21, 30, 31};
    const auto s = interleave(canon, 3, 2, 1, 2);
    CHECK(s == std::vector<double>{10, 20, 11, 21, 30, 0, 31, 0});
    CHECK_THROWS_AS(interleave(canon, 4, 2, 1, 2), ConfigError);
    CHECK_THROWS_AS(deinterleave(canon, 3, 2, 1, 2), ConfigError);
}

TEST_CASE("default width is a register width")
{
    const int w = default_simd_width();
    CHECK((w == 1 || w == 2 || w == 4 || w == 8));
}

TEST_CASE("block indexing and canonical copies")
{
    auto basis = build_shape_basis(ShapeType::Tri, 2);
    const auto mesh = make_synthetic_mesh(ShapeType::Tri, 5, 1, 0.0);
    auto geom = std::make_shared<const GeometricFactors>(build_geometry(mesh, GeometryClass::Regular, *basis));
    Block b(basis, geom, FieldState::Coeff, 2, 4);
    CHECK(b.num_groups() == 2);
    CHECK(b.padded_elements() == 8);
    CHECK(b.points_per_element() == 6);
    CHECK(b.component_stride() == 48u);
    CHECK(b.index(1, 4, 3) == 48u + (1 * 6 + 3) * 4 + 0);
    CHECK(b.index(0, 1, 2) == 2u * 4 + 1);

    std::vector<double> v(5 * 6 * 2);
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        v[i] = static_cast<double>(i);
    }
    b.from_canonical(v);
    CHECK(b.to_canonical() == v);
    {
        auto h = b.region().access(MemorySpace::Host, Access::ReadOnly);
        CHECK(h.read()[b.index(1, 4, 3)] == v[(1 * 5 + 4) * 6 + 3]);
    }
    const Block phys = b.like(FieldState::Phys);
    CHECK(phys.points_per_element() == basis->num_points);
    CHECK(&phys.packed_geometry() == &b.packed_geometry());
    // zero-initialised and readable straight away
    for (double x : phys.to_canonical())
    {
        CHECK(x == 0.0);
    }
}

TEST_CASE("packed geometry pads with identity")
{
    auto basis = build_shape_basis(ShapeType::Quad, 1);
    const auto mesh = make_synthetic_mesh(ShapeType::Quad, 3, 1, 0.05);
    const auto reg = build_geometry(mesh, GeometryClass::Regular, *basis);
    const auto pg = pack_geometry(reg, 4);
    CHECK(pg.num_groups == 1);
    CHECK(pg.metric.size() == 16u);
    CHECK(pg.weight[3] == 1.0);
    CHECK(pg.metric[0 * 4 + 3] == 1.0);
    CHECK(pg.metric[1 * 4 + 3] == 0.0);
    CHECK(pg.metric[3 * 4 + 3] == 1.0);
    CHECK(pg.weight[2] == reg.jac[2]);
    CHECK(pg.metric[1 * 4 + 2] == reg.metric(2, 0, 0, 1));

    const auto def = build_geometry(mesh, GeometryClass::Deformed, *basis);
    const auto pd = pack_geometry(def, 2);
    const int nq = basis->num_points;
    CHECK(pd.weight.size() == 2u * nq * 2);
    CHECK(pd.weight[(1 * nq + 3) * 2 + 0] == def.wj[2 * nq + 3]);
    CHECK(pd.weight[(1 * nq + 3) * 2 + 1] == 1.0);
}

TEST_CASE("block validation")
{
    auto basis = build_shape_basis(ShapeType::Hex, 2);
    auto other = build_shape_basis(ShapeType::Hex, 2, std::array<int, 3>{5, 5, 5});
    const auto mesh = make_synthetic_mesh(ShapeType::Hex, 2, 1, 0.05);
    auto def = std::make_shared<const GeometricFactors>(build_geometry(mesh, GeometryClass::Deformed, *basis));
    CHECK_THROWS_AS(Block(other, def, FieldState::Coeff), ConfigError);
    CHECK_THROWS_AS(Block(basis, def, FieldState::Coeff, 0), ConfigError);
    CHECK_THROWS_AS(Block(nullptr, def, FieldState::Coeff), ConfigError);
    auto tri = build_shape_basis(ShapeType::Tet, 2);
    CHECK_THROWS_AS(Block(tri, def, FieldState::Coeff), ConfigError);
}

TEST_CASE("fields hold blocks of one state")
{
    const BlockSpec specs[] = {{ShapeType::Hex, 3}, {ShapeType::Tet, 5}};
    FieldOptions opt;
    opt.width = 4;
    Field f = make_field(specs, 2, GeometryClass::Deformed, FieldState::Coeff, opt);
    REQUIRE(f.size() == 2);
    CHECK(f[0].shape() == ShapeType::Hex);
    CHECK(f[1].num_elements() == 5);
    CHECK(f[1].width() == 4);
    CHECK_THROWS_AS(f.add_block(f[0].like(FieldState::Phys)), StateError);
    const Field g = f.like(FieldState::Phys);
    CHECK(g.state() == FieldState::Phys);
    CHECK(g[1].points_per_element() == 4 * 3 * 3);
    CHECK_THROWS_AS(make_field(std::span<const BlockSpec>{}, 2, GeometryClass::Regular, FieldState::Coeff),
                    ConfigError);
}

TEST_CASE("field dump round-trip")
{
    const BlockSpec specs[] = {{ShapeType::Quad, 3}, {ShapeType::Pyr, 2}};
    Field f = make_field(specs, 2, GeometryClass::Regular, FieldState::Coeff);
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (Block &b : f.blocks())
    {
        std::vector<double> v(static_cast<std::size_t>(b.num_elements()) * b.points_per_element());
        for (double &x : v)
        {
            x = u(gen);
        }
        b.from_canonical(v);
    }
    std::stringstream ss;
    write_field_dump(f, ss);
    const auto blocks = read_field_dump(ss);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[1].shape == ShapeType::Pyr);
    CHECK(blocks[1].order == 2);
    CHECK(blocks[1].state == FieldState::Coeff);
    CHECK(blocks[1].nq == std::array<int, 3>{4, 4, 3});
    CHECK(blocks[1].values == f[1].to_canonical());
    CHECK(blocks[0].values == f[0].to_canonical());

    std::stringstream bad("XXXX");
    CHECK_THROWS_AS(read_field_dump(bad), ConfigError);
    std::string s = ss.str();
    std::stringstream truncated(s.substr(0, s.size() - 3));
    CHECK_THROWS_AS(read_field_dump(truncated), ConfigError);
}
