#include "speckern/oracle.hpp"

#include "speckern/error.hpp"

#include <algorithm>
#include <cmath>

namespace speckern::oracle
{

namespace
{

using Mat3 = std::array<std::array<double, 3>, 3>;

struct Element
{
    ShapeType shape;
    int dim = 2;
    int P = 1;
    std::array<int, 3> nq{1, 1, 1};
    int npts = 1;
    std::vector<std::array<int, 3>> modes;
    std::array<QuadratureRule, 3> rules;
    std::array<Matrix, 3> diff;
    std::vector<Point> eta;
    std::vector<Point> xi;
    std::vector<double> w;      // reference weights including the collapse factor
    std::vector<Mat3> g;        // g[l][i][k] = d eta_k / d xi_i
    std::vector<Mat3> dxi_dx;   // [i][j] = d xi_i / d x_j
    std::vector<double> det;
};

int dim_of(ShapeType s) { return s == ShapeType::Quad || s == ShapeType::Tri ? 2 : 3; }

QuadratureKind rule_kind(ShapeType s, int d)
{
    switch (s)
    {
    case ShapeType::Tri:
        return d == 1 ? QuadratureKind::GaussRadauJacobiAlpha1 : QuadratureKind::GaussLobattoLegendre;
    case ShapeType::Prism:
        return d == 2 ? QuadratureKind::GaussRadauJacobiAlpha1 : QuadratureKind::GaussLobattoLegendre;
    case ShapeType::Pyr:
        return d == 2 ? QuadratureKind::GaussRadauJacobiAlpha2 : QuadratureKind::GaussLobattoLegendre;
    case ShapeType::Tet:
        return d == 0   ? QuadratureKind::GaussLobattoLegendre
               : d == 1 ? QuadratureKind::GaussRadauJacobiAlpha1
                        : QuadratureKind::GaussRadauJacobiAlpha2;
    default:
        return QuadratureKind::GaussLobattoLegendre;
    }
}

double collapse_factor(ShapeType s)
{
    switch (s)
    {
    case ShapeType::Tri:
    case ShapeType::Prism:
        return 0.5;
    case ShapeType::Pyr:
        return 0.25;
    case ShapeType::Tet:
        return 0.125;
    default:
        return 1.0;
    }
}

bool in_set(ShapeType s, int P, int p, int q, int r)
{
    switch (s)
    {
    case ShapeType::Quad:
    case ShapeType::Hex:
        return true;
    case ShapeType::Tri:
        return p + q <= P;
    case ShapeType::Prism:
        return p + r <= P;
    case ShapeType::Pyr:
        return std::max(p, q) + r <= P;
    case ShapeType::Tet:
        return p + q + r <= P;
    }
    return false;
}

Point to_xi(ShapeType s, const Point &e)
{
    switch (s)
    {
    case ShapeType::Tri:
        return {(1 + e[0]) * (1 - e[1]) / 2 - 1, e[1], 0.0};
    case ShapeType::Prism:
        return {(1 + e[0]) * (1 - e[2]) / 2 - 1, e[1], e[2]};
    case ShapeType::Pyr:
        return {(1 + e[0]) * (1 - e[2]) / 2 - 1, (1 + e[1]) * (1 - e[2]) / 2 - 1, e[2]};
    case ShapeType::Tet:
    {
        const double x2 = (1 + e[1]) * (1 - e[2]) / 2 - 1;
        return {(1 + e[0]) * (-x2 - e[2]) / 2 - 1, x2, e[2]};
    }
    default:
        return e;
    }
}

// Derivatives of the collapsed coordinates with respect to the standard
// ones, written in terms of xi.
Mat3 eta_gradient(ShapeType s, const Point &x)
{
    Mat3 g{};
    for (int i = 0; i < 3; ++i)
    {
        g[i][i] = 1.0;
    }
    switch (s)
    {
    case ShapeType::Tri:
    {
        const double den = 1 - x[1];
        g[0][0] = 2 / den;
        g[1][0] = 2 * (1 + x[0]) / (den * den);
        break;
    }
    case ShapeType::Prism:
    {
        const double den = 1 - x[2];
        g[0][0] = 2 / den;
        g[2][0] = 2 * (1 + x[0]) / (den * den);
        break;
    }
    case ShapeType::Pyr:
    {
        const double den = 1 - x[2];
        g[0][0] = 2 / den;
        g[2][0] = 2 * (1 + x[0]) / (den * den);
        g[1][1] = 2 / den;
        g[2][1] = 2 * (1 + x[1]) / (den * den);
        break;
    }
    case ShapeType::Tet:
    {
        const double d1 = -x[1] - x[2];
        const double d2 = 1 - x[2];
        g[0][0] = 2 / d1;
        g[1][0] = 2 * (1 + x[0]) / (d1 * d1);
        g[2][0] = g[1][0];
        g[1][1] = 2 / d2;
        g[2][1] = 2 * (1 + x[1]) / (d2 * d2);
        break;
    }
    default:
        break;
    }
    return g;
}

struct Factors
{
    std::array<double, 3> v{1.0, 1.0, 1.0};
    std::array<double, 3> d{0.0, 0.0, 0.0};
};

// One-dimensional factors of a mode; vertex modes at collapsed vertices are
// the merged sums of the degenerate tensor products.
Factors mode_factors(ShapeType s, int P, const std::array<int, 3> &m, const Point &e)
{
    const auto [p, q, r] = m;
    Factors f;
    auto a = [&](int dir, int i) {
        f.v[dir] = modified_a(P, i, e[dir]);
        f.d[dir] = modified_a_derivative(P, i, e[dir]);
    };
    auto b = [&](int dir, int i, int j) {
        f.v[dir] = modified_b(P, i, j, e[dir]);
        f.d[dir] = modified_b_derivative(P, i, j, e[dir]);
    };
    auto c = [&](int dir, int i, int j, int k) {
        f.v[dir] = modified_c(P, i, j, k, e[dir]);
        f.d[dir] = modified_c_derivative(P, i, j, k, e[dir]);
    };
    switch (s)
    {
    case ShapeType::Quad:
        a(0, p);
        a(1, q);
        break;
    case ShapeType::Hex:
        a(0, p);
        a(1, q);
        a(2, r);
        break;
    case ShapeType::Tri:
        if (!(p == 0 && q == 1))
        {
            a(0, p);
        }
        b(1, p, q);
        break;
    case ShapeType::Prism:
        if (!(p == 0 && r == 1))
        {
            a(0, p);
        }
        a(1, q);
        b(2, p, r);
        break;
    case ShapeType::Pyr:
        if (p == 0 && q == 0 && r == 1)
        {
            a(2, 1);
            break;
        }
        a(0, p);
        a(1, q);
        b(2, std::max(p, q), r);
        break;
    case ShapeType::Tet:
        if (p == 0 && q == 0 && r == 1)
        {
            a(2, 1);
            break;
        }
        if (!(p == 0 && q == 1))
        {
            a(0, p);
        }
        b(1, p, q);
        c(2, p, q, r);
        break;
    }
    return f;
}

Element make_element(const ElementSpec &spec)
{
    if (spec.order < 1)
    {
        throw ConfigError("oracle needs order >= 1");
    }
    Element el;
    el.shape = spec.shape;
    el.dim = dim_of(spec.shape);
    el.P = spec.order;
    const int P = el.P;
    for (int d = 0; d < el.dim; ++d)
    {
        const QuadratureKind k = rule_kind(el.shape, d);
        el.nq[d] = spec.qpoints ? (*spec.qpoints)[d]
                                : (k == QuadratureKind::GaussLobattoLegendre ? P + 2 : P + 1);
        el.rules[d] = compute_rule(k, el.nq[d]);
        el.diff[d] = build_diff_matrix(el.rules[d]).d;
    }
    el.npts = el.nq[0] * el.nq[1] * el.nq[2];

    const int rmax = el.dim == 3 ? P : 0;
    for (int p = 0; p <= P; ++p)
    {
        for (int q = 0; q <= P; ++q)
        {
            for (int r = 0; r <= rmax; ++r)
            {
                if (in_set(el.shape, P, p, q, r))
                {
                    el.modes.push_back({p, q, r});
                }
            }
        }
    }

    const double cf = collapse_factor(el.shape);
    for (int k = 0; k < el.nq[2]; ++k)
    {
        for (int j = 0; j < el.nq[1]; ++j)
        {
            for (int i = 0; i < el.nq[0]; ++i)
            {
                Point e{el.rules[0].points[i], el.rules[1].points[j],
                        el.dim == 3 ? el.rules[2].points[k] : 0.0};
                double w = cf * el.rules[0].weights[i] * el.rules[1].weights[j];
                if (el.dim == 3)
                {
                    w *= el.rules[2].weights[k];
                }
                el.eta.push_back(e);
                el.xi.push_back(to_xi(el.shape, e));
                el.w.push_back(w);
                el.g.push_back(eta_gradient(el.shape, el.xi.back()));
            }
        }
    }
    return el;
}

// Derivative along eta_dir of point samples on the tensor grid.
std::vector<double> grid_derivative(const Element &el, std::span<const double> f, int dir)
{
    std::vector<double> out(el.npts, 0.0);
    const int n = el.nq[dir];
    for (int l = 0; l < el.npts; ++l)
    {
        int idx[3] = {l % el.nq[0], (l / el.nq[0]) % el.nq[1], l / (el.nq[0] * el.nq[1])};
        const int self = idx[dir];
        double s = 0.0;
        for (int a = 0; a < n; ++a)
        {
            idx[dir] = a;
            s += el.diff[dir](self, a) * f[idx[0] + el.nq[0] * (idx[1] + el.nq[1] * idx[2])];
        }
        out[l] = s;
    }
    return out;
}

void add_geometry(Element &el, const ElementMap &map)
{
    const int d = el.dim;
    std::vector<std::vector<double>> x(d, std::vector<double>(el.npts));
    for (int l = 0; l < el.npts; ++l)
    {
        const Point p = map ? map(el.xi[l]) : el.xi[l];
        for (int j = 0; j < d; ++j)
        {
            x[j][l] = p[j];
        }
    }
    // dx_j / d eta_k
    std::vector<std::vector<std::vector<double>>> dx(d);
    for (int j = 0; j < d; ++j)
    {
        for (int k = 0; k < d; ++k)
        {
            dx[j].push_back(grid_derivative(el, x[j], k));
        }
    }
    el.dxi_dx.resize(el.npts);
    el.det.resize(el.npts);
    for (int l = 0; l < el.npts; ++l)
    {
        Mat3 a{};
        for (int j = 0; j < d; ++j)
        {
            for (int i = 0; i < d; ++i)
            {
                double s = 0.0;
                for (int k = 0; k < d; ++k)
                {
                    s += el.g[l][i][k] * dx[j][k][l];
                }
                a[j][i] = s;
            }
        }
        Mat3 inv{};
        double det;
        if (d == 2)
        {
            det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            inv[0][0] = a[1][1] / det;
            inv[0][1] = -a[0][1] / det;
            inv[1][0] = -a[1][0] / det;
            inv[1][1] = a[0][0] / det;
        }
        else
        {
            det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                  a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                  a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
            for (int i = 0; i < 3; ++i)
            {
                for (int j = 0; j < 3; ++j)
                {
                    // cofactor of a[j][i]
                    const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
                    const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
                    inv[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
                }
            }
        }
        if (!(det > 0.0))
        {
            throw GeometryError("oracle element has a non-positive Jacobian");
        }
        el.dxi_dx[l] = inv;
        el.det[l] = det;
    }
}

Matrix sample_modes(const Element &el)
{
    Matrix b(el.npts, el.modes.size());
    for (int l = 0; l < el.npts; ++l)
    {
        for (std::size_t m = 0; m < el.modes.size(); ++m)
        {
            const Factors f = mode_factors(el.shape, el.P, el.modes[m], el.eta[l]);
            b(l, m) = f.v[0] * f.v[1] * f.v[2];
        }
    }
    return b;
}

Matrix mass_from(const Element &el, const Matrix &b)
{
    const std::size_t n = el.modes.size();
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r)
    {
        for (std::size_t c = 0; c < n; ++c)
        {
            double s = 0.0;
            for (int l = 0; l < el.npts; ++l)
            {
                s += el.w[l] * el.det[l] * b(l, c) * b(l, r);
            }
            m(r, c) = s;
        }
    }
    return m;
}

} // namespace

DenseElementalMatrix assemble_bwd(const ElementSpec &spec)
{
    const Element el = make_element(spec);
    return {MatrixKind::BwdTrans, sample_modes(el)};
}

DenseElementalMatrix assemble_mass(const ElementSpec &spec)
{
    Element el = make_element(spec);
    add_geometry(el, spec.map);
    return {MatrixKind::Mass, mass_from(el, sample_modes(el))};
}

DenseElementalMatrix assemble_helmholtz(const ElementSpec &spec, double lambda)
{
    if (!(lambda >= 0.0))
    {
        throw ConfigError("lambda must be non-negative");
    }
    Element el = make_element(spec);
    add_geometry(el, spec.map);
    const Matrix b = sample_modes(el);
    const int d = el.dim;
    const std::size_t n = el.modes.size();

    // grad[m][l * d + j] = d phi_m / d x_j at point l
    std::vector<std::vector<double>> grad(n, std::vector<double>(static_cast<std::size_t>(el.npts) * d));
    std::vector<double> column(el.npts);
    for (std::size_t m = 0; m < n; ++m)
    {
        for (int l = 0; l < el.npts; ++l)
        {
            column[l] = b(l, m);
        }
        std::vector<std::vector<double>> de;
        for (int k = 0; k < d; ++k)
        {
            de.push_back(grid_derivative(el, column, k));
        }
        for (int l = 0; l < el.npts; ++l)
        {
            double dxi[3] = {0, 0, 0};
            for (int i = 0; i < d; ++i)
            {
                for (int k = 0; k < d; ++k)
                {
                    dxi[i] += el.g[l][i][k] * de[k][l];
                }
            }
            for (int j = 0; j < d; ++j)
            {
                double s = 0.0;
                for (int i = 0; i < d; ++i)
                {
                    s += el.dxi_dx[l][i][j] * dxi[i];
                }
                grad[m][static_cast<std::size_t>(l) * d + j] = s;
            }
        }
    }

    Matrix h(n, n);
    for (std::size_t r = 0; r < n; ++r)
    {
        for (std::size_t c = 0; c < n; ++c)
        {
            double s = 0.0;
            for (int l = 0; l < el.npts; ++l)
            {
                double dot = 0.0;
                for (int j = 0; j < d; ++j)
                {
                    dot += grad[c][static_cast<std::size_t>(l) * d + j] *
                           grad[r][static_cast<std::size_t>(l) * d + j];
                }
                s += el.w[l] * el.det[l] * (lambda * b(l, c) * b(l, r) + dot);
            }
            h(r, c) = s;
        }
    }
    return {MatrixKind::Helmholtz, std::move(h)};
}

DenseElementalMatrix assemble_helmholtz_factored(const ElementSpec &spec, double lambda)
{
    if (!(lambda >= 0.0))
    {
        throw ConfigError("lambda must be non-negative");
    }
    Element el = make_element(spec);
    add_geometry(el, spec.map);
    const int d = el.dim;
    const std::size_t n = el.modes.size();
    const std::size_t nq = el.npts;

    Matrix b(nq, n);
    std::array<Matrix, 3> dxi; // derivative with respect to xi_i
    for (int i = 0; i < d; ++i)
    {
        dxi[i] = Matrix(nq, n);
    }
    for (std::size_t l = 0; l < nq; ++l)
    {
        for (std::size_t m = 0; m < n; ++m)
        {
            const Factors f = mode_factors(el.shape, el.P, el.modes[m], el.eta[l]);
            b(l, m) = f.v[0] * f.v[1] * f.v[2];
            for (int k = 0; k < d; ++k)
            {
                double dk = f.d[k];
                for (int o = 0; o < 3; ++o)
                {
                    dk *= o == k ? 1.0 : f.v[o];
                }
                for (int i = 0; i < d; ++i)
                {
                    dxi[i](l, m) += el.g[l][i][k] * dk;
                }
            }
        }
    }

    Matrix h = mass_from(el, b);
    for (std::size_t r = 0; r < n; ++r)
    {
        for (std::size_t c = 0; c < n; ++c)
        {
            h(r, c) *= lambda;
        }
    }
    Matrix t(nq, n);
    for (int i = 0; i < d; ++i)
    {
        for (int j = 0; j < d; ++j)
        {
            for (std::size_t l = 0; l < nq; ++l)
            {
                double lam = 0.0;
                for (int m = 0; m < d; ++m)
                {
                    lam += el.dxi_dx[l][i][m] * el.dxi_dx[l][j][m];
                }
                lam *= el.w[l] * el.det[l];
                for (std::size_t c = 0; c < n; ++c)
                {
                    t(l, c) = lam * dxi[j](l, c);
                }
            }
            for (std::size_t r = 0; r < n; ++r)
            {
                for (std::size_t c = 0; c < n; ++c)
                {
                    double s = 0.0;
                    for (std::size_t l = 0; l < nq; ++l)
                    {
                        s += dxi[i](l, r) * t(l, c);
                    }
                    h(r, c) += s;
                }
            }
        }
    }
    return {MatrixKind::Helmholtz, std::move(h)};
}

std::vector<double> apply_dense(const DenseElementalMatrix &a, std::span<const double> x)
{
    const Matrix &m = a.values;
    if (x.size() != m.cols())
    {
        throw ConfigError("dense apply: vector has " + std::to_string(x.size()) +
                          " entries, matrix has " + std::to_string(m.cols()) + " columns");
    }
    std::vector<double> y(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
    {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c)
        {
            s += m(r, c) * x[c];
        }
        y[r] = s;
    }
    return y;
}

double relative_asymmetry(const Matrix &a)
{
    double amax = 0.0;
    double dmax = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r)
    {
        for (std::size_t c = 0; c < a.cols(); ++c)
        {
            amax = std::max(amax, std::abs(a(r, c)));
            dmax = std::max(dmax, std::abs(a(r, c) - a(c, r)));
        }
    }
    return amax > 0.0 ? dmax / amax : 0.0;
}

} // namespace speckern::oracle
