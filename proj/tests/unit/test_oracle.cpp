#include "speckern/error.hpp"
#include "speckern/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace speckern;
using namespace speckern::oracle;

namespace
{

// Smooth map with positive Jacobian on every reference shape.
Point bent(const Point &xi)
{
    return {xi[0] + 0.08 * std::sin(1.3 * xi[1] + 0.2), 1.2 * xi[1] + 0.05 * std::cos(xi[0]),
            0.9 * xi[2] + 0.06 * std::sin(xi[0] + xi[1])};
}

double max_entry_diff(const Matrix &a, const Matrix &b)
{
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

double max_abs(const Matrix &a)
{
    double m = 0.0;
    for (double x : a.values())
        m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST_CASE("bilinear quad on the reference square")
{
    const ElementSpec spec{ShapeType::Quad, 1, {}, {}};
    const auto m = assemble_mass(spec).values;
    CHECK(m(0, 0) == doctest::Approx(4.0 / 9.0).epsilon(1e-14));
    CHECK(m(0, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    CHECK(m(0, 3) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    const auto k = assemble_helmholtz(spec, 0.0).values;
    CHECK(k(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(k(0, 1) == doctest::Approx(-1.0 / 6.0).epsilon(1e-14));
    CHECK(k(0, 3) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("linear triangle mass matrix")
{
    const auto m = assemble_mass({ShapeType::Tri, 1, {}, {}}).values;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(m(i, j) == doctest::Approx(i == j ? 1.0 / 3.0 : 1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("linear vertex modes each carry a share of the volume")
{
    for (ShapeType s : kAllShapes)
    {
        const auto m = assemble_mass({s, 1, {}, {}}).values;
        double total = 0.0;
        for (double x : m.values())
            total += x;
        CHECK(total == doctest::Approx(reference_volume(s)).epsilon(1e-13));
    }
    const auto tet = assemble_mass({ShapeType::Tet, 1, {}, {}}).values;
    for (std::size_t i = 0; i < 4; ++i)
    {
        double row = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            row += tet(i, j);
        CHECK(row == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("scaling the element scales mass and stiffness")
{
    for (ShapeType s : {ShapeType::Quad, ShapeType::Tri, ShapeType::Prism, ShapeType::Tet})
    {
        const int d = dimension(s);
        const ElementSpec ref{s, 3, {}, {}};
        const ElementSpec big{s, 3, [](const Point &xi) { return Point{2 * xi[0], 2 * xi[1], 2 * xi[2]}; }, {}};
        const double vol = std::pow(2.0, d);
        const auto m0 = assemble_mass(ref).values;
        const auto m1 = assemble_mass(big).values;
        const auto k0 = assemble_helmholtz(ref, 0.0).values;
        const auto h1 = assemble_helmholtz(big, 1.5).values;
        for (std::size_t i = 0; i < m0.rows(); ++i)
            for (std::size_t j = 0; j < m0.cols(); ++j)
            {
                CHECK(std::abs(m1(i, j) - vol * m0(i, j)) < 1e-13 * vol);
                CHECK(std::abs(h1(i, j) - (vol / 4.0 * k0(i, j) + 1.5 * vol * m0(i, j))) < 1e-12 * vol);
            }
    }
}

TEST_CASE("stiffness annihilates constants on curved elements")
{
    for (ShapeType s : kAllShapes)
    {
        const auto h = assemble_helmholtz({s, 1, bent, {}}, 0.0);
        const std::vector<double> ones(h.values.cols(), 1.0);
        for (double x : apply_dense(h, ones))
        {
            CHECK(std::abs(x) < 1e-13);
        }
    }
}

TEST_CASE("two assembly routes agree and are symmetric")
{
    for (ShapeType s : kAllShapes)
        for (int P = 1; P <= 4; ++P)
            for (double lambda : {0.0, 1.0, 2.5})
            {
                const ElementSpec spec{s, P, bent, {}};
                const auto a = assemble_helmholtz(spec, lambda).values;
                const auto b = assemble_helmholtz_factored(spec, lambda).values;
                CAPTURE(to_string(s));
                CAPTURE(P);
                CHECK(max_entry_diff(a, b) <= 1e-12 * max_abs(a));
                CHECK(relative_asymmetry(a) < 1e-13);
                CHECK(relative_asymmetry(assemble_mass(spec).values) < 1e-14);
            }
}

TEST_CASE("mass matrices are positive definite")
{
    // Cholesky without pivoting succeeds only for SPD matrices.
    for (ShapeType s : kAllShapes)
    {
        Matrix m = assemble_mass({s, 4, bent, {}}).values;
        const std::size_t n = m.rows();
        bool ok = true;
        for (std::size_t j = 0; j < n && ok; ++j)
        {
            double diag = m(j, j);
            for (std::size_t k = 0; k < j; ++k)
                diag -= m(j, k) * m(j, k);
            if (diag <= 0.0)
            {
                ok = false;
                break;
            }
            m(j, j) = std::sqrt(diag);
            for (std::size_t i = j + 1; i < n; ++i)
            {
                double v = m(i, j);
                for (std::size_t k = 0; k < j; ++k)
                    v -= m(i, k) * m(j, k);
                m(i, j) = v / m(j, j);
            }
        }
        CHECK(ok);
    }
}

TEST_CASE("backward matrix sizes and values")
{
    const auto b = assemble_bwd({ShapeType::Pyr, 2, {}, {}});
    CHECK(b.kind == MatrixKind::BwdTrans);
    CHECK(b.values.rows() == static_cast<std::size_t>(total_quad_points(ShapeType::Pyr, 2)));
    CHECK(b.values.cols() == static_cast<std::size_t>(mode_count(ShapeType::Pyr, 2)));
    const auto custom = assemble_bwd({ShapeType::Quad, 2, {}, std::array<int, 3>{6, 5, 1}});
    CHECK(custom.values.rows() == 30u);
}

TEST_CASE("oracle input errors")
{
    const auto m = assemble_mass({ShapeType::Tri, 2, {}, {}});
    CHECK_THROWS_AS(apply_dense(m, std::vector<double>(3)), ConfigError);
    CHECK(apply_dense(m, std::vector<double>(6, 0.0)) == std::vector<double>(6, 0.0));
    CHECK_THROWS_AS(assemble_helmholtz({ShapeType::Tri, 2, {}, {}}, -1.0), ConfigError);
    const ElementMap mirror = [](const Point &xi) { return Point{-xi[0], xi[1], xi[2]}; };
    CHECK_THROWS_AS(assemble_mass({ShapeType::Quad, 2, mirror, {}}), GeometryError);
    CHECK_THROWS_AS(assemble_helmholtz_factored({ShapeType::Hex, 2, mirror, {}}, 1.0), GeometryError);
}
