#include "speckern/shapes.hpp"

#include "speckern/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

namespace speckern
{

namespace
{

std::atomic<bool> g_metric_fault{false};

constexpr double kSingularTol = 1e-14;

struct Factor
{
    double v = 1.0;
    double d = 0.0;
};

Factor fa(int P, int p, double z) { return {modified_a(P, p, z), modified_a_derivative(P, p, z)}; }

Factor fb(int P, int p, int q, double z)
{
    return {modified_b(P, p, q, z), modified_b_derivative(P, p, q, z)};
}

Factor fc(int P, int p, int q, int r, double z)
{
    return {modified_c(P, p, q, r, z), modified_c_derivative(P, p, q, r, z)};
}

// A mode is always a single product of one-dimensional factors once the
// collapsed-vertex modes are written in their merged form.
std::array<Factor, 3> mode_factors(ShapeType shape, int P, const ModeIndex &m, const Point &eta)
{
    const auto [p, q, r] = m;
    switch (shape)
    {
    case ShapeType::Quad:
        return {fa(P, p, eta[0]), fa(P, q, eta[1]), Factor{}};
    case ShapeType::Tri:
        if (p == 0 && q == 1)
        {
            return {Factor{}, fb(P, 0, 1, eta[1]), Factor{}};
        }
        return {fa(P, p, eta[0]), fb(P, p, q, eta[1]), Factor{}};
    case ShapeType::Hex:
        return {fa(P, p, eta[0]), fa(P, q, eta[1]), fa(P, r, eta[2])};
    case ShapeType::Prism:
        if (p == 0 && r == 1)
        {
            return {Factor{}, fa(P, q, eta[1]), fb(P, 0, 1, eta[2])};
        }
        return {fa(P, p, eta[0]), fa(P, q, eta[1]), fb(P, p, r, eta[2])};
    case ShapeType::Pyr:
        if (p == 0 && q == 0 && r == 1)
        {
            return {Factor{}, Factor{}, fa(P, 1, eta[2])};
        }
        return {fa(P, p, eta[0]), fa(P, q, eta[1]), fb(P, std::max(p, q), r, eta[2])};
    case ShapeType::Tet:
        if (p == 0 && q == 0 && r == 1)
        {
            return {Factor{}, Factor{}, fa(P, 1, eta[2])};
        }
        if (p == 0 && q == 1)
        {
            return {Factor{}, fb(P, 0, 1, eta[1]), fc(P, 0, 1, r, eta[2])};
        }
        return {fa(P, p, eta[0]), fb(P, p, q, eta[1]), fc(P, p, q, r, eta[2])};
    }
    throw ConfigError("unknown shape");
}

void check_order(int order)
{
    if (order < 1)
    {
        throw ConfigError("polynomial order must be at least 1, got " + std::to_string(order));
    }
}

} // namespace

int dimension(ShapeType shape)
{
    return (shape == ShapeType::Quad || shape == ShapeType::Tri) ? 2 : 3;
}

bool is_collapsed(ShapeType shape) { return shape != ShapeType::Quad && shape != ShapeType::Hex; }

std::string_view to_string(ShapeType shape)
{
    switch (shape)
    {
    case ShapeType::Quad:
        return "quad";
    case ShapeType::Tri:
        return "tri";
    case ShapeType::Hex:
        return "hex";
    case ShapeType::Prism:
        return "prism";
    case ShapeType::Pyr:
        return "pyr";
    case ShapeType::Tet:
        return "tet";
    }
    return "?";
}

ShapeType parse_shape(std::string_view name)
{
    for (ShapeType s : kAllShapes)
    {
        if (to_string(s) == name)
        {
            return s;
        }
    }
    if (name == "pyramid")
    {
        return ShapeType::Pyr;
    }
    if (name == "quadrilateral")
    {
        return ShapeType::Quad;
    }
    if (name == "triangle")
    {
        return ShapeType::Tri;
    }
    if (name == "hexahedron")
    {
        return ShapeType::Hex;
    }
    if (name == "tetrahedron")
    {
        return ShapeType::Tet;
    }
    throw ConfigError("unknown shape '" + std::string(name) + "'");
}

double reference_volume(ShapeType shape)
{
    switch (shape)
    {
    case ShapeType::Quad:
        return 4.0;
    case ShapeType::Tri:
        return 2.0;
    case ShapeType::Hex:
        return 8.0;
    case ShapeType::Prism:
        return 4.0;
    case ShapeType::Pyr:
        return 8.0 / 3.0;
    case ShapeType::Tet:
        return 4.0 / 3.0;
    }
    return 0.0;
}

bool IndexSet::admissible(ShapeType shape, int P, int p, int q, int r)
{
    if (p < 0 || q < 0 || r < 0 || p > P || q > P || r > P)
    {
        return false;
    }
    switch (shape)
    {
    case ShapeType::Quad:
        return r == 0;
    case ShapeType::Tri:
        return r == 0 && p + q <= P;
    case ShapeType::Hex:
        return true;
    case ShapeType::Prism:
        return p + r <= P;
    case ShapeType::Pyr:
        return std::max(p, q) + r <= P;
    case ShapeType::Tet:
        return p + q + r <= P;
    }
    return false;
}

IndexSet::IndexSet(ShapeType shape, int order) : m_shape(shape), m_order(order)
{
    check_order(order);
    const int n = order + 1;
    const int rmax = dimension(shape) == 3 ? order : 0;
    m_lookup.assign(static_cast<std::size_t>(n) * n * n, -1);
    for (int p = 0; p <= order; ++p)
    {
        for (int q = 0; q <= order; ++q)
        {
            for (int r = 0; r <= rmax; ++r)
            {
                if (admissible(shape, order, p, q, r))
                {
                    m_lookup[(p * n + q) * n + r] = static_cast<int>(m_modes.size());
                    m_modes.push_back({p, q, r});
                }
            }
        }
    }
}

int IndexSet::linear(int p, int q, int r) const
{
    const int n = m_order + 1;
    if (p < 0 || q < 0 || r < 0 || p >= n || q >= n || r >= n)
    {
        return -1;
    }
    return m_lookup[(p * n + q) * n + r];
}

int mode_count(ShapeType shape, int order)
{
    check_order(order);
    const int P = order;
    switch (shape)
    {
    case ShapeType::Quad:
        return (P + 1) * (P + 1);
    case ShapeType::Tri:
        return (P + 1) * (P + 2) / 2;
    case ShapeType::Hex:
        return (P + 1) * (P + 1) * (P + 1);
    case ShapeType::Prism:
        return (P + 1) * (P + 1) * (P + 2) / 2;
    case ShapeType::Pyr:
        return (P + 1) * (P + 2) * (2 * P + 3) / 6;
    case ShapeType::Tet:
        return (P + 1) * (P + 2) * (P + 3) / 6;
    }
    return 0;
}

QuadratureKind direction_rule_kind(ShapeType shape, int direction)
{
    if (direction == 0)
    {
        return QuadratureKind::GaussLobattoLegendre;
    }
    switch (shape)
    {
    case ShapeType::Quad:
    case ShapeType::Hex:
        return QuadratureKind::GaussLobattoLegendre;
    case ShapeType::Tri:
        return QuadratureKind::GaussRadauJacobiAlpha1;
    case ShapeType::Prism:
        return direction == 2 ? QuadratureKind::GaussRadauJacobiAlpha1
                              : QuadratureKind::GaussLobattoLegendre;
    case ShapeType::Pyr:
        return direction == 2 ? QuadratureKind::GaussRadauJacobiAlpha2
                              : QuadratureKind::GaussLobattoLegendre;
    case ShapeType::Tet:
        return direction == 2 ? QuadratureKind::GaussRadauJacobiAlpha2
                              : QuadratureKind::GaussRadauJacobiAlpha1;
    }
    return QuadratureKind::GaussLobattoLegendre;
}

std::array<int, 3> quad_point_count(ShapeType shape, int order)
{
    check_order(order);
    std::array<int, 3> nq{1, 1, 1};
    for (int d = 0; d < dimension(shape); ++d)
    {
        nq[d] = direction_rule_kind(shape, d) == QuadratureKind::GaussLobattoLegendre ? order + 2
                                                                                      : order + 1;
    }
    return nq;
}

int total_quad_points(ShapeType shape, int order)
{
    const auto nq = quad_point_count(shape, order);
    return nq[0] * nq[1] * nq[2];
}

Point duffy_forward(ShapeType shape, const Point &xi)
{
    auto collapse = [](double num, double den) {
        if (std::abs(den) < kSingularTol)
        {
            throw GeometryError("collapsed coordinate undefined at the singular vertex/edge");
        }
        return 2.0 * (1.0 + num) / den - 1.0;
    };
    switch (shape)
    {
    case ShapeType::Quad:
    case ShapeType::Hex:
        return xi;
    case ShapeType::Tri:
        return {collapse(xi[0], 1.0 - xi[1]), xi[1], 0.0};
    case ShapeType::Prism:
        return {collapse(xi[0], 1.0 - xi[2]), xi[1], xi[2]};
    case ShapeType::Pyr:
        return {collapse(xi[0], 1.0 - xi[2]), collapse(xi[1], 1.0 - xi[2]), xi[2]};
    case ShapeType::Tet:
        return {collapse(xi[0], -xi[1] - xi[2]), collapse(xi[1], 1.0 - xi[2]), xi[2]};
    }
    return xi;
}

Point duffy_inverse(ShapeType shape, const Point &eta)
{
    const auto [e1, e2, e3] = eta;
    switch (shape)
    {
    case ShapeType::Quad:
    case ShapeType::Hex:
        return eta;
    case ShapeType::Tri:
        return {0.5 * (1.0 + e1) * (1.0 - e2) - 1.0, e2, 0.0};
    case ShapeType::Prism:
        return {0.5 * (1.0 + e1) * (1.0 - e3) - 1.0, e2, e3};
    case ShapeType::Pyr:
        return {0.5 * (1.0 + e1) * (1.0 - e3) - 1.0, 0.5 * (1.0 + e2) * (1.0 - e3) - 1.0, e3};
    case ShapeType::Tet:
        return {0.25 * (1.0 + e1) * (1.0 - e2) * (1.0 - e3) - 1.0,
                0.5 * (1.0 + e2) * (1.0 - e3) - 1.0, e3};
    }
    return eta;
}

std::array<std::array<double, 3>, 3> collapsed_jacobian(ShapeType shape, const Point &eta)
{
    const auto [e1, e2, e3] = eta;
    std::array<std::array<double, 3>, 3> g{};
    for (int i = 0; i < 3; ++i)
    {
        g[i][i] = 1.0;
    }
    switch (shape)
    {
    case ShapeType::Quad:
    case ShapeType::Hex:
        break;
    case ShapeType::Tri:
        g[0][0] = 2.0 / (1.0 - e2);
        g[1][0] = (1.0 + e1) / (1.0 - e2);
        break;
    case ShapeType::Prism:
        g[0][0] = 2.0 / (1.0 - e3);
        g[2][0] = (1.0 + e1) / (1.0 - e3);
        break;
    case ShapeType::Pyr:
        g[0][0] = 2.0 / (1.0 - e3);
        g[1][1] = 2.0 / (1.0 - e3);
        g[2][0] = (1.0 + e1) / (1.0 - e3);
        g[2][1] = (1.0 + e2) / (1.0 - e3);
        break;
    case ShapeType::Tet:
    {
        const double s = (1.0 - e2) * (1.0 - e3);
        g[0][0] = 4.0 / s;
        g[1][0] = 2.0 * (1.0 + e1) / s;
        g[2][0] = 2.0 * (1.0 + e1) / s;
        g[1][1] = 2.0 / (1.0 - e3);
        g[2][1] = (1.0 + e2) / (1.0 - e3);
        break;
    }
    }
    return g;
}

CollapsedMap build_collapsed_metric(ShapeType shape, const std::array<QuadratureRule, 3> &rules)
{
    const int dim = dimension(shape);
    CollapsedMap map;
    map.shape = shape;
    map.dim = dim;
    const int n0 = rules[0].size();
    const int n1 = rules[1].size();
    const int n2 = dim == 3 ? rules[2].size() : 1;
    map.num_points = n0 * n1 * n2;
    map.g.resize(static_cast<std::size_t>(map.num_points) * dim * dim);
    const bool fault = testing::collapsed_metric_fault();
    for (int d = 1; d < dim; ++d)
    {
        if (direction_rule_kind(shape, d) != QuadratureKind::GaussLobattoLegendre &&
            rules[d].points.back() >= 1.0)
        {
            throw GeometryError("collapsed direction rule contains the singular point");
        }
    }
    for (int k = 0; k < n2; ++k)
    {
        for (int j = 0; j < n1; ++j)
        {
            for (int i = 0; i < n0; ++i)
            {
                const Point eta{rules[0].points[i], rules[1].points[j],
                                dim == 3 ? rules[2].points[k] : 0.0};
                const auto g = collapsed_jacobian(shape, eta);
                const int l = i + n0 * (j + n1 * k);
                for (int a = 0; a < dim; ++a)
                {
                    for (int b = 0; b < dim; ++b)
                    {
                        map.g[(l * dim + a) * dim + b] = (fault && a != b) ? -g[a][b] : g[a][b];
                    }
                }
            }
        }
    }
    return map;
}

double eval_mode(ShapeType shape, int order, const ModeIndex &mode, const Point &eta)
{
    const auto f = mode_factors(shape, order, mode, eta);
    return f[0].v * f[1].v * f[2].v;
}

double eval_mode_derivative(ShapeType shape, int order, const ModeIndex &mode, const Point &eta,
                            int direction)
{
    const auto f = mode_factors(shape, order, mode, eta);
    double out = 1.0;
    for (int d = 0; d < 3; ++d)
    {
        out *= d == direction ? f[d].d : f[d].v;
    }
    return out;
}

namespace
{

SumFacPlan build_plan(const ShapeBasis &sb)
{
    const ShapeType shape = sb.shape;
    const int P = sb.order;
    const int dim = sb.dim;
    const IndexSet &modes = sb.modes;
    const auto &z0 = sb.rules[0].points;
    const auto &z1 = sb.rules[1].points;
    const auto &zl = sb.rules[dim - 1].points;

    SumFacPlan plan;
    plan.dim = dim;
    plan.num_outer = P + 1;

    // Lines: contiguous runs of modes sharing p (2D) or (p,q) (3D).
    std::vector<std::array<int, 2>> line_keys;
    for (int m = 0; m < modes.size(); ++m)
    {
        const std::array<int, 2> key{modes[m].p, dim == 3 ? modes[m].q : 0};
        if (line_keys.empty() || line_keys.back() != key)
        {
            line_keys.push_back(key);
            plan.line_begin.push_back(m);
        }
    }
    plan.num_lines = static_cast<int>(line_keys.size());
    plan.line_begin.push_back(modes.size());
    plan.outer_begin.assign(plan.num_outer + 1, 0);
    plan.line_outer.resize(plan.num_lines);
    for (int l = 0; l < plan.num_lines; ++l)
    {
        plan.line_outer[l] = line_keys[l][0];
        plan.outer_begin[line_keys[l][0] + 1] = l + 1;
    }
    for (int p = 1; p <= plan.num_outer; ++p)
    {
        plan.outer_begin[p] = std::max(plan.outer_begin[p], plan.outer_begin[p - 1]);
    }

    auto line_of = [&](int p, int q) {
        for (int l = 0; l < plan.num_lines; ++l)
        {
            if (line_keys[l][0] == p && line_keys[l][1] == q)
            {
                return l;
            }
        }
        throw ConfigError("sum-factorisation line missing");
    };

    const int ql = static_cast<int>(zl.size());
    plan.inner = Matrix(modes.size(), ql);
    plan.inner_d = Matrix(modes.size(), ql);
    for (int m = 0; m < modes.size(); ++m)
    {
        const auto [p, q, r] = modes[m];
        for (int k = 0; k < ql; ++k)
        {
            Factor f;
            switch (shape)
            {
            case ShapeType::Quad:
                f = fa(P, q, zl[k]);
                break;
            case ShapeType::Tri:
                f = fb(P, p, q, zl[k]);
                break;
            case ShapeType::Hex:
                f = fa(P, r, zl[k]);
                break;
            case ShapeType::Prism:
                f = fb(P, p, r, zl[k]);
                break;
            case ShapeType::Pyr:
                f = fb(P, std::max(p, q), r, zl[k]);
                break;
            case ShapeType::Tet:
                f = fc(P, p, q, r, zl[k]);
                break;
            }
            plan.inner(m, k) = f.v;
            plan.inner_d(m, k) = f.d;
        }
    }

    if (dim == 3)
    {
        const int q1 = static_cast<int>(z1.size());
        plan.middle = Matrix(plan.num_lines, q1);
        plan.middle_d = Matrix(plan.num_lines, q1);
        for (int l = 0; l < plan.num_lines; ++l)
        {
            const auto [p, q] = line_keys[l];
            for (int j = 0; j < q1; ++j)
            {
                const Factor f = shape == ShapeType::Tet ? fb(P, p, q, z1[j]) : fa(P, q, z1[j]);
                plan.middle(l, j) = f.v;
                plan.middle_d(l, j) = f.d;
            }
        }
    }

    const int q0 = static_cast<int>(z0.size());
    plan.outer = Matrix(plan.num_outer, q0);
    plan.outer_d = Matrix(plan.num_outer, q0);
    for (int p = 0; p < plan.num_outer; ++p)
    {
        for (int i = 0; i < q0; ++i)
        {
            plan.outer(p, i) = modified_a(P, p, z0[i]);
            plan.outer_d(p, i) = modified_a_derivative(P, p, z0[i]);
        }
    }

    switch (shape)
    {
    case ShapeType::Quad:
    case ShapeType::Hex:
        break;
    case ShapeType::Tri:
        plan.mode_fixes.push_back({modes.linear(0, 1), line_of(1, 0)});
        break;
    case ShapeType::Prism:
        for (int q = 0; q <= P; ++q)
        {
            plan.mode_fixes.push_back({modes.linear(0, q, 1), line_of(1, q)});
        }
        break;
    case ShapeType::Pyr:
    {
        const int apex = modes.linear(0, 0, 1);
        plan.mode_fixes.push_back({apex, line_of(0, 1)});
        plan.mode_fixes.push_back({apex, line_of(1, 0)});
        plan.mode_fixes.push_back({apex, line_of(1, 1)});
        break;
    }
    case ShapeType::Tet:
    {
        const int apex = modes.linear(0, 0, 1);
        plan.mode_fixes.push_back({apex, line_of(0, 1)});
        plan.mode_fixes.push_back({apex, line_of(1, 0)});
        plan.line_fixes.push_back({line_of(0, 1), 1});
        break;
    }
    }
    return plan;
}

} // namespace

std::shared_ptr<const ShapeBasis> build_shape_basis(ShapeType shape, int order,
                                                    std::optional<std::array<int, 3>> qpoints)
{
    check_order(order);
    auto sb = std::make_shared<ShapeBasis>();
    sb->shape = shape;
    sb->order = order;
    sb->dim = dimension(shape);
    sb->nq = qpoints ? *qpoints : quad_point_count(shape, order);
    for (int d = sb->dim; d < 3; ++d)
    {
        sb->nq[d] = 1;
    }
    for (int d = 0; d < sb->dim; ++d)
    {
        if (sb->nq[d] < order + 1)
        {
            throw ConfigError("quadrature needs at least P+1 points per direction");
        }
        sb->rules[d] = compute_rule(direction_rule_kind(shape, d), sb->nq[d]);
        sb->diff[d] = build_diff_matrix(sb->rules[d]);
    }
    sb->num_points = sb->nq[0] * sb->nq[1] * sb->nq[2];
    sb->modes = IndexSet(shape, order);
    sb->num_modes = sb->modes.size();

    double collapse = 1.0;
    switch (shape)
    {
    case ShapeType::Tri:
    case ShapeType::Prism:
        collapse = 0.5;
        break;
    case ShapeType::Pyr:
        collapse = 0.25;
        break;
    case ShapeType::Tet:
        collapse = 0.125;
        break;
    default:
        break;
    }

    sb->ref_weights.resize(sb->num_points);
    sb->eta.resize(sb->num_points);
    for (int k = 0; k < sb->nq[2]; ++k)
    {
        for (int j = 0; j < sb->nq[1]; ++j)
        {
            for (int i = 0; i < sb->nq[0]; ++i)
            {
                const int l = sb->point_index(i, j, k);
                const bool three = sb->dim == 3;
                sb->eta[l] = {sb->rules[0].points[i], sb->rules[1].points[j],
                              three ? sb->rules[2].points[k] : 0.0};
                sb->ref_weights[l] = collapse * sb->rules[0].weights[i] * sb->rules[1].weights[j] *
                                     (three ? sb->rules[2].weights[k] : 1.0);
            }
        }
    }
    sb->collapsed = build_collapsed_metric(shape, sb->rules);

    sb->b = Matrix(sb->num_points, sb->num_modes);
    for (int d = 0; d < sb->dim; ++d)
    {
        sb->db[d] = Matrix(sb->num_points, sb->num_modes);
    }
    for (int l = 0; l < sb->num_points; ++l)
    {
        for (int m = 0; m < sb->num_modes; ++m)
        {
            const auto f = mode_factors(shape, order, sb->modes[m], sb->eta[l]);
            sb->b(l, m) = f[0].v * f[1].v * f[2].v;
            for (int d = 0; d < sb->dim; ++d)
            {
                double v = 1.0;
                for (int e = 0; e < 3; ++e)
                {
                    v *= e == d ? f[e].d : f[e].v;
                }
                sb->db[d](l, m) = v;
            }
        }
    }
    sb->bt = sb->b.transposed();
    for (int d = 0; d < sb->dim; ++d)
    {
        sb->dbt[d] = sb->db[d].transposed();
    }
    sb->plan = build_plan(*sb);
    return sb;
}

void ShapeBasis::build_dense_collocation() const
{
    const std::array<int, 3> stride{1, nq[0], nq[0] * nq[1]};
    for (int d = 0; d < dim; ++d)
    {
        Matrix m(num_points, num_points);
        for (int l = 0; l < num_points; ++l)
        {
            const int idx[3] = {l % nq[0], (l / nq[0]) % nq[1], l / (nq[0] * nq[1])};
            const int base = l - idx[d] * stride[d];
            for (int a = 0; a < nq[d]; ++a)
            {
                m(l, base + a * stride[d]) = diff[d].d(idx[d], a);
            }
        }
        m_dense_t[d] = m.transposed();
        m_dense[d] = std::move(m);
    }
}

const std::array<Matrix, 3> &ShapeBasis::dense_collocation() const
{
    std::call_once(m_dense_once, [this] { build_dense_collocation(); });
    return m_dense;
}

const std::array<Matrix, 3> &ShapeBasis::dense_collocation_transposed() const
{
    std::call_once(m_dense_once, [this] { build_dense_collocation(); });
    return m_dense_t;
}

namespace testing
{
void set_collapsed_metric_fault(bool enabled) { g_metric_fault.store(enabled); }
bool collapsed_metric_fault() { return g_metric_fault.load(); }
} // namespace testing

} // namespace speckern
