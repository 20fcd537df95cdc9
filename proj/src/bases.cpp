#include "speckern/bases.hpp"

#include "speckern/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace speckern
{

namespace
{

constexpr double kNewtonTolerance = 1e-15;
constexpr int kNewtonMaxIterations = 100;

// P_n and dP_n/dz evaluated together by the three-term recurrence.
void jacobi_with_derivative(int n, double alpha, double beta, double z, double &value,
                            double &deriv)
{
    auto eval = [](int m, double a, double b, double x) {
        if (m == 0)
            return 1.0;
        double p0 = 1.0;
        double p1 = 0.5 * (a - b + (a + b + 2.0) * x);
        for (int k = 1; k < m; ++k)
        {
            const double apb = a + b;
            const double a1 = 2.0 * (k + 1) * (k + apb + 1) * (2 * k + apb);
            const double a2 = (2 * k + apb + 1) * (a * a - b * b);
            const double a3 = (2 * k + apb) * (2 * k + apb + 1) * (2 * k + apb + 2);
            const double a4 = 2.0 * (k + a) * (k + b) * (2 * k + apb + 2);
            const double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
            p0 = p1;
            p1 = p2;
        }
        return p1;
    };
    value = eval(n, alpha, beta, z);
    deriv = n == 0 ? 0.0 : 0.5 * (n + alpha + beta + 1) * eval(n - 1, alpha + 1, beta + 1, z);
}

void check_order(int P)
{
    if (P < 1)
        throw ConfigError("polynomial order must be >= 1, got " + std::to_string(P));
}

void check_a(int P, int p)
{
    check_order(P);
    if (p < 0 || p > P)
        throw ConfigError("ModifiedA index p=" + std::to_string(p) + " outside 0.." + std::to_string(P));
}

void check_b(int P, int p, int q)
{
    check_order(P);
    if (p < 0 || q < 0 || p + q > P)
        throw ConfigError("ModifiedB index (" + std::to_string(p) + "," + std::to_string(q) +
                          ") violates p+q <= " + std::to_string(P));
}

void check_c(int P, int p, int q, int r)
{
    check_order(P);
    if (p < 0 || q < 0 || r < 0 || p + q + r > P)
        throw ConfigError("ModifiedC index (" + std::to_string(p) + "," + std::to_string(q) + "," +
                          std::to_string(r) + ") violates p+q+r <= " + std::to_string(P));
}

// Unchecked kernels; the public wrappers validate indices.
double a_value(int p, double z)
{
    const double lo = 0.5 * (1.0 - z);
    const double hi = 0.5 * (1.0 + z);
    if (p == 0)
        return lo;
    if (p == 1)
        return hi;
    return lo * hi * jacobi(p - 2, 1.0, 1.0, z);
}

double a_deriv(int p, double z)
{
    if (p == 0)
        return -0.5;
    if (p == 1)
        return 0.5;
    const double lo = 0.5 * (1.0 - z);
    const double hi = 0.5 * (1.0 + z);
    double j = 0.0;
    double dj = 0.0;
    jacobi_with_derivative(p - 2, 1.0, 1.0, z, j, dj);
    return (0.5 * lo - 0.5 * hi) * j + lo * hi * dj;
}

double b_value(int p, int q, double z)
{
    if (p == 0)
        return a_value(q, z);
    const double lo = 0.5 * (1.0 - z);
    const double lop = std::pow(lo, p);
    if (q == 0)
        return lop;
    return lop * 0.5 * (1.0 + z) * jacobi(q - 1, 2.0 * p - 1.0, 1.0, z);
}

double b_deriv(int p, int q, double z)
{
    if (p == 0)
        return a_deriv(q, z);
    const double lo = 0.5 * (1.0 - z);
    const double dlop = -0.5 * p * std::pow(lo, p - 1);
    if (q == 0)
        return dlop;
    const double lop = std::pow(lo, p);
    const double hi = 0.5 * (1.0 + z);
    double j = 0.0;
    double dj = 0.0;
    jacobi_with_derivative(q - 1, 2.0 * p - 1.0, 1.0, z, j, dj);
    return dlop * hi * j + lop * 0.5 * j + lop * hi * dj;
}

} // namespace

int QuadratureRule::exactness_degree() const
{
    const int q = size();
    return kind == QuadratureKind::GaussLobattoLegendre ? 2 * q - 3 : 2 * q - 2;
}

double jacobi(int n, double alpha, double beta, double z)
{
    double v = 0.0;
    double d = 0.0;
    jacobi_with_derivative(n, alpha, beta, z, v, d);
    return v;
}

double jacobi_derivative(int n, double alpha, double beta, double z)
{
    double v = 0.0;
    double d = 0.0;
    jacobi_with_derivative(n, alpha, beta, z, v, d);
    return d;
}

std::vector<double> jacobi_zeros(int n, double alpha, double beta)
{
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
    {
        double r = -std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n));
        if (k > 0)
            r = 0.5 * (r + z[k - 1]);
        for (int it = 0; it < kNewtonMaxIterations; ++it)
        {
            double poly = 0.0;
            double pder = 0.0;
            jacobi_with_derivative(n, alpha, beta, r, poly, pder);
            double sum = 0.0;
            for (int i = 0; i < k; ++i)
                sum += 1.0 / (r - z[i]);
            const double delta = -poly / (pder - sum * poly);
            r += delta;
            if (std::abs(delta) < kNewtonTolerance)
                break;
        }
        z[k] = r;
    }
    return z;
}

QuadratureRule compute_rule(QuadratureKind kind, int npoints)
{
    if (npoints < 2)
        throw ConfigError("quadrature rule needs at least 2 points, got " + std::to_string(npoints));

    QuadratureRule rule;
    rule.kind = kind;
    const int np = npoints;
    rule.points.resize(np);
    rule.weights.resize(np);

    if (kind == QuadratureKind::GaussLobattoLegendre)
    {
        // Interior points are the zeros of P^{1,1}_{np-2}.
        rule.points.front() = -1.0;
        rule.points.back() = 1.0;
        const auto interior = jacobi_zeros(np - 2, 1.0, 1.0);
        for (int i = 0; i < np - 2; ++i)
            rule.points[i + 1] = interior[i];
        const double fac = 2.0 / (static_cast<double>(np - 1) * np);
        for (int i = 0; i < np; ++i)
        {
            const double p = jacobi(np - 1, 0.0, 0.0, rule.points[i]);
            rule.weights[i] = fac / (p * p);
        }
        return rule;
    }

    double alpha = 0.0;
    switch (kind)
    {
    case QuadratureKind::GaussRadauJacobiAlpha1:
        alpha = 1.0;
        break;
    case QuadratureKind::GaussRadauJacobiAlpha2:
        alpha = 2.0;
        break;
    default:
        throw ConfigError("unsupported quadrature kind");
    }
    const double beta = 0.0;

    // z = -1 plus the zeros of P^{alpha,beta+1}_{np-1}.
    rule.points.front() = -1.0;
    const auto interior = jacobi_zeros(np - 1, alpha, beta + 1.0);
    for (int i = 0; i < np - 1; ++i)
        rule.points[i + 1] = interior[i];

    const double apb = alpha + beta;
    double fac = std::pow(2.0, apb) * std::tgamma(alpha + np) * std::tgamma(beta + np);
    fac /= std::tgamma(np) * (beta + np) * std::tgamma(apb + np + 1);
    for (int i = 0; i < np; ++i)
    {
        const double p = jacobi(np - 1, alpha, beta, rule.points[i]);
        rule.weights[i] = fac * (1.0 - rule.points[i]) / (p * p);
    }
    rule.weights[0] *= beta + 1.0;
    return rule;
}

double modified_a(int P, int p, double z)
{
    check_a(P, p);
    return a_value(p, z);
}

double modified_a_derivative(int P, int p, double z)
{
    check_a(P, p);
    return a_deriv(p, z);
}

double modified_b(int P, int p, int q, double z)
{
    check_b(P, p, q);
    return b_value(p, q, z);
}

double modified_b_derivative(int P, int p, int q, double z)
{
    check_b(P, p, q);
    return b_deriv(p, q, z);
}

double modified_c(int P, int p, int q, int r, double z)
{
    check_c(P, p, q, r);
    return b_value(p + q, r, z);
}

double modified_c_derivative(int P, int p, int q, int r, double z)
{
    check_c(P, p, q, r);
    return b_deriv(p + q, r, z);
}

double eval_modified_basis(BasisKind kind, int P, std::span<const int> index, double z)
{
    auto need = [&](std::size_t n) {
        if (index.size() != n)
            throw ConfigError("modified basis index has wrong arity");
    };
    switch (kind)
    {
    case BasisKind::ModifiedA:
        need(1);
        return modified_a(P, index[0], z);
    case BasisKind::ModifiedB:
        need(2);
        return modified_b(P, index[0], index[1], z);
    case BasisKind::ModifiedC:
        need(3);
        return modified_c(P, index[0], index[1], index[2], z);
    case BasisKind::Lagrange:
        break;
    }
    throw ConfigError("eval_modified_basis: not a modified basis kind");
}

double lagrange(std::span<const double> nodes, int k, double z)
{
    double v = 1.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
        if (static_cast<int>(j) != k)
            v *= (z - nodes[j]) / (nodes[k] - nodes[j]);
    return v;
}

double lagrange_derivative(std::span<const double> nodes, int k, double z)
{
    const std::size_t n = nodes.size();
    double sum = 0.0;
    for (std::size_t m = 0; m < n; ++m)
    {
        if (static_cast<int>(m) == k)
            continue;
        double term = 1.0 / (nodes[k] - nodes[m]);
        for (std::size_t j = 0; j < n; ++j)
            if (static_cast<int>(j) != k && j != m)
                term *= (z - nodes[j]) / (nodes[k] - nodes[j]);
        sum += term;
    }
    return sum;
}

Basis1D build_basis_matrices(BasisKind kind, int order, QuadratureRule rule)
{
    check_order(order);
    Basis1D basis;
    basis.kind = kind;
    basis.order = order;
    basis.rule = std::move(rule);
    const auto &z = basis.rule.points;
    const std::size_t nq = z.size();

    switch (kind)
    {
    case BasisKind::ModifiedA:
    {
        basis.eval = Matrix(nq, order + 1);
        basis.deriv = Matrix(nq, order + 1);
        for (std::size_t i = 0; i < nq; ++i)
            for (int p = 0; p <= order; ++p)
            {
                basis.eval(i, p) = a_value(p, z[i]);
                basis.deriv(i, p) = a_deriv(p, z[i]);
            }
        break;
    }
    case BasisKind::ModifiedB:
    {
        const std::size_t n = static_cast<std::size_t>((order + 1) * (order + 2) / 2);
        basis.eval = Matrix(nq, n);
        basis.deriv = Matrix(nq, n);
        std::size_t m = 0;
        for (int p = 0; p <= order; ++p)
            for (int q = 0; p + q <= order; ++q, ++m)
                for (std::size_t i = 0; i < nq; ++i)
                {
                    basis.eval(i, m) = b_value(p, q, z[i]);
                    basis.deriv(i, m) = b_deriv(p, q, z[i]);
                }
        break;
    }
    case BasisKind::ModifiedC:
    {
        const std::size_t n = static_cast<std::size_t>((order + 1) * (order + 2) * (order + 3) / 6);
        basis.eval = Matrix(nq, n);
        basis.deriv = Matrix(nq, n);
        std::size_t m = 0;
        for (int p = 0; p <= order; ++p)
            for (int q = 0; p + q <= order; ++q)
                for (int r = 0; p + q + r <= order; ++r, ++m)
                    for (std::size_t i = 0; i < nq; ++i)
                    {
                        basis.eval(i, m) = b_value(p + q, r, z[i]);
                        basis.deriv(i, m) = b_deriv(p + q, r, z[i]);
                    }
        break;
    }
    case BasisKind::Lagrange:
    {
        basis.nodes = compute_rule(QuadratureKind::GaussLobattoLegendre, order + 1).points;
        basis.eval = Matrix(nq, order + 1);
        basis.deriv = Matrix(nq, order + 1);
        for (std::size_t i = 0; i < nq; ++i)
            for (int k = 0; k <= order; ++k)
            {
                basis.eval(i, k) = lagrange(basis.nodes, k, z[i]);
                basis.deriv(i, k) = lagrange_derivative(basis.nodes, k, z[i]);
            }
        break;
    }
    }
    return basis;
}

DiffMatrix build_diff_matrix(const QuadratureRule &rule)
{
    const auto &x = rule.points;
    const std::size_t n = x.size();
    if (n < 2)
        throw ConfigError("differentiation matrix needs at least 2 points");

    // Barycentric weights.
    std::vector<double> lambda(n, 1.0);
    for (std::size_t k = 0; k < n; ++k)
    {
        for (std::size_t j = 0; j < n; ++j)
            if (j != k)
                lambda[k] *= x[k] - x[j];
        lambda[k] = 1.0 / lambda[k];
    }

    DiffMatrix dm{Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
    {
        double diag = 0.0;
        for (std::size_t k = 0; k < n; ++k)
        {
            if (k == i)
                continue;
            const double v = lambda[k] / lambda[i] / (x[i] - x[k]);
            dm.d(i, k) = v;
            diag -= v;
        }
        dm.d(i, i) = diag;
    }
    return dm;
}

} // namespace speckern
