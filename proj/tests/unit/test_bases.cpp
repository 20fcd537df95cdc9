#include "speckern/bases.hpp"
#include "speckern/error.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace speckern;

namespace
{

constexpr QuadratureKind kKinds[] = {QuadratureKind::GaussLobattoLegendre,
                                     QuadratureKind::GaussRadauJacobiAlpha1,
                                     QuadratureKind::GaussRadauJacobiAlpha2};

int alpha_of(QuadratureKind k)
{
    return k == QuadratureKind::GaussLobattoLegendre ? 0 : (k == QuadratureKind::GaussRadauJacobiAlpha1 ? 1 : 2);
}

// Exact value of the integral of (1-z)^alpha z^k over [-1,1].
double weighted_moment(int alpha, int k)
{
    double s = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= alpha; ++j)
    {
        const int n = k + j;
        const double m = n % 2 == 0 ? 2.0 / (n + 1) : 0.0;
        s += (j % 2 ? -1.0 : 1.0) * binom * m;
        binom = binom * (alpha - j) / (j + 1);
    }
    return s;
}

} // namespace

TEST_CASE("GLL with three points")
{
    const auto r = compute_rule(QuadratureKind::GaussLobattoLegendre, 3);
    REQUIRE(r.size() == 3);
    CHECK(r.points[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::abs(r.points[1]) < 1e-15);
    CHECK(r.points[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(r.weights[0] - 1.0 / 3.0) < 1e-14);
    CHECK(std::abs(r.weights[1] - 4.0 / 3.0) < 1e-14);
    CHECK(std::abs(r.weights[2] - 1.0 / 3.0) < 1e-14);
}

TEST_CASE("GLL with four and five points")
{
    const auto r4 = compute_rule(QuadratureKind::GaussLobattoLegendre, 4);
    CHECK(std::abs(r4.points[1] + 1.0 / std::sqrt(5.0)) < 1e-15);
    CHECK(std::abs(r4.points[2] - 1.0 / std::sqrt(5.0)) < 1e-15);
    CHECK(std::abs(r4.weights[0] - 1.0 / 6.0) < 1e-15);
    CHECK(std::abs(r4.weights[1] - 5.0 / 6.0) < 1e-15);

    const auto r5 = compute_rule(QuadratureKind::GaussLobattoLegendre, 5);
    CHECK(std::abs(r5.points[1] + std::sqrt(21.0) / 7.0) < 1e-15);
    CHECK(std::abs(r5.points[2]) < 1e-15);
}

TEST_CASE("Gauss-Radau-Jacobi with two points")
{
    const auto a1 = compute_rule(QuadratureKind::GaussRadauJacobiAlpha1, 2);
    CHECK(a1.points[0] == -1.0);
    CHECK(std::abs(a1.points[1]) < 1e-15);
    CHECK(std::abs(a1.weights[0] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(a1.weights[1] - 4.0 / 3.0) < 1e-15);

    const auto a2 = compute_rule(QuadratureKind::GaussRadauJacobiAlpha2, 2);
    CHECK(std::abs(a2.points[1] + 0.2) < 1e-15);
    CHECK(std::abs(a2.weights[0] - 1.0) < 1e-15);
    CHECK(std::abs(a2.weights[1] - 5.0 / 3.0) < 1e-15);
}

TEST_CASE("rules integrate monomials exactly up to their degree")
{
    for (QuadratureKind kind : kKinds)
    {
        for (int q = 2; q <= 12; ++q)
        {
            const auto r = compute_rule(kind, q);
            CHECK(r.exactness_degree() == (kind == QuadratureKind::GaussLobattoLegendre ? 2 * q - 3 : 2 * q - 2));
            for (int k = 0; k <= r.exactness_degree(); ++k)
            {
                double s = 0.0;
                for (int i = 0; i < q; ++i)
                {
                    s += r.weights[i] * std::pow(r.points[i], k);
                }
                const double exact = weighted_moment(alpha_of(kind), k);
                CHECK(std::abs(s - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
            }
            // One degree higher is no longer exact for an even power.
            const int k = r.exactness_degree() + 1;
            if (k % 2 == 0 || alpha_of(kind) > 0)
            {
                double s = 0.0;
                for (int i = 0; i < q; ++i)
                {
                    s += r.weights[i] * std::pow(r.points[i], k);
                }
                CHECK(std::abs(s - weighted_moment(alpha_of(kind), k)) > 1e-10);
            }
        }
    }
}

TEST_CASE("points increase and weights are positive")
{
    for (QuadratureKind kind : kKinds)
    {
        for (int q = 2; q <= 16; ++q)
        {
            const auto r = compute_rule(kind, q);
            CHECK(r.points.front() == -1.0);
            for (int i = 1; i < q; ++i)
            {
                CHECK(r.points[i] > r.points[i - 1]);
            }
            for (double w : r.weights)
            {
                CHECK(w > 0.0);
            }
            if (kind == QuadratureKind::GaussLobattoLegendre)
            {
                CHECK(r.points.back() == 1.0);
            }
            else
            {
                CHECK(r.points.back() < 1.0);
            }
        }
    }
}

TEST_CASE("too few points")
{
    CHECK_THROWS_AS(compute_rule(QuadratureKind::GaussLobattoLegendre, 1), ConfigError);
    CHECK_THROWS_AS(compute_rule(QuadratureKind::GaussRadauJacobiAlpha2, 0), ConfigError);
}

TEST_CASE("Jacobi polynomial values")
{
    CHECK(jacobi(0, 1, 1, 0.4) == 1.0);
    CHECK(std::abs(jacobi(3, 1, 1, 0.3) + 0.711) < 1e-15);
    CHECK(std::abs(jacobi(2, 3, 1, -0.4) + 0.78) < 1e-15);
    CHECK(std::abs(jacobi(4, 0, 0, 0.7) + 0.4120625) < 1e-15);
    CHECK(std::abs(jacobi_derivative(3, 2, 1, 0.1) + 2.485) < 1e-14);
}

TEST_CASE("Jacobi zeros are zeros")
{
    for (int n = 1; n <= 14; ++n)
    {
        for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.0, 1.0 + 1.0}, std::pair{2.0, 1.0}})
        {
            const auto z = jacobi_zeros(n, a, b);
            REQUIRE(z.size() == static_cast<std::size_t>(n));
            for (double x : z)
            {
                CHECK(std::abs(jacobi(n, a, b, x)) < 1e-10 * std::abs(jacobi(n, a, b, 1.0)));
            }
        }
    }
}

TEST_CASE("modified basis values")
{
    CHECK(std::abs(modified_a(4, 3, 0.25) - 0.1171875) < 1e-16);
    CHECK(std::abs(modified_b(4, 2, 1, -0.5) - 0.140625) < 1e-16);
    CHECK(std::abs(modified_b(4, 2, 2, 0.3) - 0.1512875) < 1e-15);
    CHECK(std::abs(modified_b_derivative(4, 1, 3, 0.6) - 0.54) < 1e-14);
    CHECK(modified_c(4, 1, 1, 2, 0.2) == modified_b(4, 2, 2, 0.2));
}

TEST_CASE("vertex and bubble modes at the interval ends")
{
    const int P = 6;
    CHECK(modified_a(P, 0, -1.0) == 1.0);
    CHECK(modified_a(P, 0, 1.0) == 0.0);
    CHECK(modified_a(P, 1, 1.0) == 1.0);
    for (int p = 2; p <= P; ++p)
    {
        CHECK(modified_a(P, p, -1.0) == 0.0);
        CHECK(modified_a(P, p, 1.0) == 0.0);
    }
    for (int p = 1; p <= P; ++p)
    {
        for (int q = 0; p + q <= P; ++q)
        {
            CHECK(modified_b(P, p, q, 1.0) == 0.0);
        }
    }
}

TEST_CASE("analytic derivatives match central differences")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    const int P = 7;
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial)
    {
        const double z = u(gen);
        for (int p = 0; p <= P; ++p)
        {
            const double fd = (modified_a(P, p, z + h) - modified_a(P, p, z - h)) / (2 * h);
            CHECK(std::abs(modified_a_derivative(P, p, z) - fd) < 1e-7);
            for (int q = 0; p + q <= P; ++q)
            {
                const double fb = (modified_b(P, p, q, z + h) - modified_b(P, p, q, z - h)) / (2 * h);
                CHECK(std::abs(modified_b_derivative(P, p, q, z) - fb) < 1e-7);
            }
        }
    }
}

TEST_CASE("inadmissible indices")
{
    CHECK_THROWS_AS(modified_a(3, 4, 0.0), ConfigError);
    CHECK_THROWS_AS(modified_b(3, 2, 2, 0.0), ConfigError);
    CHECK_THROWS_AS(modified_c(3, 1, 1, 2, 0.0), ConfigError);
    const int idx[2] = {1, 1};
    CHECK_THROWS_AS(eval_modified_basis(BasisKind::ModifiedA, 3, idx, 0.0), ConfigError);
    CHECK(eval_modified_basis(BasisKind::ModifiedB, 3, idx, 0.1) == modified_b(3, 1, 1, 0.1));
}

TEST_CASE("Lagrange polynomials are cardinal")
{
    const auto r = compute_rule(QuadratureKind::GaussLobattoLegendre, 7);
    for (int k = 0; k < r.size(); ++k)
    {
        for (int i = 0; i < r.size(); ++i)
        {
            CHECK(std::abs(lagrange(r.points, k, r.points[i]) - (i == k ? 1.0 : 0.0)) < 1e-14);
        }
    }
}

TEST_CASE("collocation derivative rows sum to zero and are exact")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (QuadratureKind kind : kKinds)
    {
        for (int q = 2; q <= 12; ++q)
        {
            const auto r = compute_rule(kind, q);
            const auto d = build_diff_matrix(r);
            REQUIRE(d.size() == q);
            std::vector<double> c(q);
            for (double &x : c)
            {
                x = u(gen);
            }
            for (int i = 0; i < q; ++i)
            {
                double row = 0.0;
                double df = 0.0;
                double exact = 0.0;
                for (int j = 0; j < q; ++j)
                {
                    row += d.d(i, j);
                    double f = 0.0;
                    for (int k = q - 1; k >= 0; --k)
                    {
                        f = f * r.points[j] + c[k];
                    }
                    df += d.d(i, j) * f;
                }
                for (int k = q - 1; k >= 1; --k)
                {
                    exact = exact * r.points[i] + k * c[k];
                }
                CHECK(std::abs(row) < 1e-11);
                CHECK(std::abs(df - exact) < 1e-10 * q * q);
            }
        }
    }
}

TEST_CASE("derivative tables equal collocation of evaluated bases")
{
    for (int P = 1; P <= 8; ++P)
    {
        for (auto [kind, qk] : {std::pair{BasisKind::ModifiedA, QuadratureKind::GaussLobattoLegendre},
                                std::pair{BasisKind::ModifiedB, QuadratureKind::GaussRadauJacobiAlpha1},
                                std::pair{BasisKind::ModifiedC, QuadratureKind::GaussRadauJacobiAlpha2}})
        {
            const int q = qk == QuadratureKind::GaussLobattoLegendre ? P + 2 : P + 1;
            const auto b = build_basis_matrices(kind, P, compute_rule(qk, q));
            const auto d = build_diff_matrix(b.rule);
            for (int i = 0; i < b.num_points(); ++i)
            {
                for (int m = 0; m < b.num_modes(); ++m)
                {
                    double s = 0.0;
                    for (int j = 0; j < b.num_points(); ++j)
                    {
                        s += d.d(i, j) * b.eval(j, m);
                    }
                    CHECK(std::abs(s - b.deriv(i, m)) < 1e-11 * (1 + std::abs(b.deriv(i, m))));
                }
            }
        }
    }
}

TEST_CASE("modified A basis reproduces polynomials")
{
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int P = 1; P <= 9; ++P)
    {
        const auto b = build_basis_matrices(BasisKind::ModifiedA, P,
                                            compute_rule(QuadratureKind::GaussLobattoLegendre, P + 2));
        std::vector<double> c(P + 1);
        for (double &x : c)
        {
            x = u(gen);
        }
        auto poly = [&](double z) {
            double f = 0.0;
            for (int k = P; k >= 0; --k)
            {
                f = f * z + c[k];
            }
            return f;
        };
        // Expand in the basis through interpolation at P+1 distinct points.
        Eigen::MatrixXd v(P + 1, P + 1);
        Eigen::VectorXd rhs(P + 1);
        for (int i = 0; i <= P; ++i)
        {
            const double z = -1.0 + 2.0 * (i + 0.37) / (P + 1);
            for (int m = 0; m <= P; ++m)
            {
                v(i, m) = modified_a(P, m, z);
            }
            rhs(i) = poly(z);
        }
        const Eigen::VectorXd coef = v.fullPivLu().solve(rhs);
        for (int i = 0; i < b.num_points(); ++i)
        {
            double s = 0.0;
            for (int m = 0; m <= P; ++m)
            {
                s += b.eval(i, m) * coef(m);
            }
            CHECK(std::abs(s - poly(b.rule.points[i])) < 1e-11);
        }
    }
}

TEST_CASE("Lagrange basis on GLL nodes")
{
    const auto b = build_basis_matrices(BasisKind::Lagrange, 4,
                                        compute_rule(QuadratureKind::GaussLobattoLegendre, 5));
    REQUIRE(b.nodes.size() == 5);
    for (int i = 0; i < 5; ++i)
    {
        for (int m = 0; m < 5; ++m)
        {
            CHECK(std::abs(b.eval(i, m) - (i == m ? 1.0 : 0.0)) < 1e-14);
        }
    }
}
