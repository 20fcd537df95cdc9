#include "speckern/operators.hpp"

#include "speckern/error.hpp"

#include <algorithm>
#include <string>

namespace speckern
{

std::string_view to_string(Strategy s)
{
    switch (s)
    {
    case Strategy::StdMat:
        return "StdMat";
    case Strategy::StdMatGrouped:
        return "StdMatGrouped";
    case Strategy::SumFac:
        return "SumFac";
    case Strategy::SumFacTOP:
        return "SumFacTOP";
    }
    return "?";
}

std::string_view to_string(OperatorKind k)
{
    switch (k)
    {
    case OperatorKind::BwdTrans:
        return "BwdTrans";
    case OperatorKind::IProductWRTBase:
        return "IProductWRTBase";
    case OperatorKind::PhysDeriv:
        return "PhysDeriv";
    case OperatorKind::IProductWRTDerivBase:
        return "IProductWRTDerivBase";
    case OperatorKind::Mass:
        return "Mass";
    case OperatorKind::HelmholtzNonColl:
        return "HelmholtzNonColl";
    case OperatorKind::HelmholtzColl:
        return "HelmholtzColl";
    }
    return "?";
}

std::string_view to_string(HelmholtzForm f)
{
    return f == HelmholtzForm::Collocated ? "coll" : "noncoll";
}

Strategy parse_strategy(std::string_view name)
{
    for (Strategy s : {Strategy::StdMat, Strategy::StdMatGrouped, Strategy::SumFac,
                       Strategy::SumFacTOP})
    {
        if (to_string(s) == name)
        {
            return s;
        }
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

HelmholtzForm parse_form(std::string_view name)
{
    if (name == "coll" || name == "collocated")
    {
        return HelmholtzForm::Collocated;
    }
    if (name == "noncoll" || name == "non-collocated")
    {
        return HelmholtzForm::NonCollocated;
    }
    throw ConfigError("unknown Helmholtz form '" + std::string(name) + "'");
}

HelmholtzForm default_form(Strategy s)
{
    return s == Strategy::SumFac ? HelmholtzForm::Collocated : HelmholtzForm::NonCollocated;
}

namespace
{

constexpr int kMaxLanes = 64;

void check_strategy(Strategy s)
{
    if (s == Strategy::SumFacTOP)
    {
        throw UnsupportedStrategy("SumFacTOP needs a device work-group hierarchy and is not "
                                  "available on the host execution space");
    }
}

} // namespace

int kernel_width(Strategy s, int storage_width)
{
    check_strategy(s);
    if (storage_width < 1 || storage_width > kMaxLanes)
    {
        throw ConfigError("interleave width must lie in [1, 64]");
    }
    return s == Strategy::StdMat ? 1 : storage_width;
}

namespace
{

enum class Op
{
    Bwd,
    IProd,
    Deriv,
    IProdDeriv,
    Mass,
    HelmNonColl,
    HelmColl,
};

template <int WT>
struct Lanes
{
    int w;
    constexpr int n() const
    {
        if constexpr (WT > 0)
        {
            return WT;
        }
        else
        {
            return w;
        }
    }
};

struct GeomView
{
    bool deformed;
    const double *metric;
    const double *weight;
};

struct Ctx
{
    const ShapeBasis &sb;
    bool dense;
    bool collapsed;
    double lambda;
};

// y[r] (+)= sum_c A(r,c) x[c], lane-major operands.
template <int WT>
void dense_apply(Lanes<WT> L, const Matrix &a, const double *x, double *y, bool acc)
{
    const int W = L.n();
    const int rows = static_cast<int>(a.rows());
    const int cols = static_cast<int>(a.cols());
    alignas(64) double t[kMaxLanes];
    for (int r = 0; r < rows; ++r)
    {
        for (int v = 0; v < W; ++v)
        {
            t[v] = acc ? y[r * W + v] : 0.0;
        }
        const double *ar = a.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c)
        {
            const double s = ar[c];
            const double *xc = x + c * W;
            for (int v = 0; v < W; ++v)
            {
                t[v] += s * xc[v];
            }
        }
        for (int v = 0; v < W; ++v)
        {
            y[r * W + v] = t[v];
        }
    }
}

struct Tables
{
    const Matrix &inner;
    const Matrix *middle;
    const Matrix &outer;
};

Tables select(const SumFacPlan &plan, int dir)
{
    const int last = plan.dim - 1;
    return {dir == last ? plan.inner_d : plan.inner,
            plan.dim == 3 ? (dir == 1 ? &plan.middle_d : &plan.middle) : nullptr,
            dir == 0 ? plan.outer_d : plan.outer};
}

std::size_t sumfac_scratch(const ShapeBasis &sb)
{
    const auto &plan = sb.plan;
    const int ql = sb.nq[sb.dim - 1];
    if (sb.dim == 2)
    {
        return static_cast<std::size_t>(plan.num_outer) * ql;
    }
    return static_cast<std::size_t>(plan.num_lines) * ql +
           static_cast<std::size_t>(plan.num_outer) * ql * sb.nq[1];
}

// Coefficients to points, contracting the innermost mode index first so the
// warped (triangular) ranges are handled before the tensor directions.
template <int WT>
void sumfac_bwd(Lanes<WT> L, const ShapeBasis &sb, int dir, const double *x, double *y,
                double *scratch)
{
    const int W = L.n();
    const SumFacPlan &plan = sb.plan;
    const Tables t = select(plan, dir);
    const int q0 = sb.nq[0];
    const int ql = sb.nq[sb.dim - 1];

    double *t1 = scratch;
    std::fill(t1, t1 + static_cast<std::size_t>(plan.num_lines) * ql * W, 0.0);
    for (int line = 0; line < plan.num_lines; ++line)
    {
        double *tl = t1 + static_cast<std::size_t>(line) * ql * W;
        for (int m = plan.line_begin[line]; m < plan.line_begin[line + 1]; ++m)
        {
            const double *xm = x + m * W;
            const double *im = t.inner.data() + static_cast<std::size_t>(m) * ql;
            for (int k = 0; k < ql; ++k)
            {
                const double c = im[k];
                for (int v = 0; v < W; ++v)
                {
                    tl[k * W + v] += c * xm[v];
                }
            }
        }
    }
    for (const auto &fix : plan.mode_fixes)
    {
        double *tl = t1 + static_cast<std::size_t>(fix.dst_line) * ql * W;
        const double *xm = x + fix.src_mode * W;
        for (int k = 0; k < ql; ++k)
        {
            const double c = t.inner(fix.src_mode, k);
            for (int v = 0; v < W; ++v)
            {
                tl[k * W + v] += c * xm[v];
            }
        }
    }

    const double *src = t1;
    int rows = ql; // rows of the intermediate per outer index
    if (sb.dim == 3)
    {
        const int q1 = sb.nq[1];
        rows = ql * q1;
        double *t2 = t1 + static_cast<std::size_t>(plan.num_lines) * ql * W;
        std::fill(t2, t2 + static_cast<std::size_t>(plan.num_outer) * rows * W, 0.0);
        auto contract = [&](int line, int p) {
            const double *tl = t1 + static_cast<std::size_t>(line) * ql * W;
            double *tp = t2 + static_cast<std::size_t>(p) * rows * W;
            const double *mid = t.middle->data() + static_cast<std::size_t>(line) * q1;
            for (int k = 0; k < ql; ++k)
            {
                const double *tk = tl + k * W;
                double *out = tp + static_cast<std::size_t>(k) * q1 * W;
                for (int j = 0; j < q1; ++j)
                {
                    const double c = mid[j];
                    for (int v = 0; v < W; ++v)
                    {
                        out[j * W + v] += c * tk[v];
                    }
                }
            }
        };
        for (int line = 0; line < plan.num_lines; ++line)
        {
            contract(line, plan.line_outer[line]);
        }
        for (const auto &fix : plan.line_fixes)
        {
            contract(fix.src_line, fix.dst_outer);
        }
        src = t2;
    }

    alignas(64) double acc[kMaxLanes];
    for (int r = 0; r < rows; ++r)
    {
        for (int i = 0; i < q0; ++i)
        {
            for (int v = 0; v < W; ++v)
            {
                acc[v] = 0.0;
            }
            for (int p = 0; p < plan.num_outer; ++p)
            {
                const double c = t.outer(p, i);
                const double *sp = src + (static_cast<std::size_t>(p) * rows + r) * W;
                for (int v = 0; v < W; ++v)
                {
                    acc[v] += c * sp[v];
                }
            }
            double *yo = y + (static_cast<std::size_t>(r) * q0 + i) * W;
            for (int v = 0; v < W; ++v)
            {
                yo[v] = acc[v];
            }
        }
    }
}

// Points to coefficients: the transpose of sumfac_bwd.
template <int WT>
void sumfac_tr(Lanes<WT> L, const ShapeBasis &sb, int dir, const double *g, double *f, bool accumulate,
               double *scratch)
{
    const int W = L.n();
    const SumFacPlan &plan = sb.plan;
    const Tables t = select(plan, dir);
    const int q0 = sb.nq[0];
    const int ql = sb.nq[sb.dim - 1];
    const int q1 = sb.nq[1];
    const int rows = sb.dim == 3 ? ql * q1 : ql;

    // s2[p][r] = sum_i outer(p,i) g[r][i]; stored after the line buffer.
    double *s1 = scratch;
    double *s2 = sb.dim == 3 ? scratch + static_cast<std::size_t>(plan.num_lines) * ql * W : scratch;
    alignas(64) double acc[kMaxLanes];
    for (int r = 0; r < rows; ++r)
    {
        const double *gr = g + static_cast<std::size_t>(r) * q0 * W;
        for (int p = 0; p < plan.num_outer; ++p)
        {
            const double *op = t.outer.data() + static_cast<std::size_t>(p) * q0;
            for (int v = 0; v < W; ++v)
            {
                acc[v] = 0.0;
            }
            for (int i = 0; i < q0; ++i)
            {
                const double c = op[i];
                for (int v = 0; v < W; ++v)
                {
                    acc[v] += c * gr[i * W + v];
                }
            }
            double *sp = s2 + (static_cast<std::size_t>(p) * rows + r) * W;
            for (int v = 0; v < W; ++v)
            {
                sp[v] = acc[v];
            }
        }
    }

    if (sb.dim == 3)
    {
        auto contract = [&](int line, int p, bool add) {
            double *sl = s1 + static_cast<std::size_t>(line) * ql * W;
            const double *sp = s2 + static_cast<std::size_t>(p) * rows * W;
            const double *mid = t.middle->data() + static_cast<std::size_t>(line) * q1;
            for (int k = 0; k < ql; ++k)
            {
                const double *sk = sp + static_cast<std::size_t>(k) * q1 * W;
                for (int v = 0; v < W; ++v)
                {
                    acc[v] = add ? sl[k * W + v] : 0.0;
                }
                for (int j = 0; j < q1; ++j)
                {
                    const double c = mid[j];
                    for (int v = 0; v < W; ++v)
                    {
                        acc[v] += c * sk[j * W + v];
                    }
                }
                for (int v = 0; v < W; ++v)
                {
                    sl[k * W + v] = acc[v];
                }
            }
        };
        for (int line = 0; line < plan.num_lines; ++line)
        {
            contract(line, plan.line_outer[line], false);
        }
        for (const auto &fix : plan.line_fixes)
        {
            contract(fix.src_line, fix.dst_outer, true);
        }
    }

    auto reduce = [&](int m, int line, bool add) {
        const double *sl = s1 + static_cast<std::size_t>(line) * ql * W;
        const double *im = t.inner.data() + static_cast<std::size_t>(m) * ql;
        for (int v = 0; v < W; ++v)
        {
            acc[v] = add ? f[m * W + v] : 0.0;
        }
        for (int k = 0; k < ql; ++k)
        {
            const double c = im[k];
            for (int v = 0; v < W; ++v)
            {
                acc[v] += c * sl[k * W + v];
            }
        }
        for (int v = 0; v < W; ++v)
        {
            f[m * W + v] = acc[v];
        }
    };
    for (int line = 0; line < plan.num_lines; ++line)
    {
        for (int m = plan.line_begin[line]; m < plan.line_begin[line + 1]; ++m)
        {
            reduce(m, line, accumulate);
        }
    }
    for (const auto &fix : plan.mode_fixes)
    {
        reduce(fix.src_mode, fix.dst_line, true);
    }
}

// Collocation derivative along one direction of the tensor point grid.
template <int WT>
void colloc_tensor(Lanes<WT> L, const ShapeBasis &sb, int dir, bool transpose, const double *x,
                   double *y, bool accumulate)
{
    const int W = L.n();
    const int n = sb.nq[dir];
    const int stride = dir == 0 ? 1 : (dir == 1 ? sb.nq[0] : sb.nq[0] * sb.nq[1]);
    const int outer = sb.num_points / (n * stride);
    const Matrix &d = sb.diff[dir].d;
    alignas(64) double acc[kMaxLanes];
    for (int hi = 0; hi < outer; ++hi)
    {
        for (int lo = 0; lo < stride; ++lo)
        {
            const int base = hi * n * stride + lo;
            for (int i = 0; i < n; ++i)
            {
                double *yo = y + static_cast<std::size_t>(base + i * stride) * W;
                for (int v = 0; v < W; ++v)
                {
                    acc[v] = accumulate ? yo[v] : 0.0;
                }
                for (int a = 0; a < n; ++a)
                {
                    const double c = transpose ? d(a, i) : d(i, a);
                    const double *xa = x + static_cast<std::size_t>(base + a * stride) * W;
                    for (int v = 0; v < W; ++v)
                    {
                        acc[v] += c * xa[v];
                    }
                }
                for (int v = 0; v < W; ++v)
                {
                    yo[v] = acc[v];
                }
            }
        }
    }
}

template <int WT>
class GroupKernel
{
public:
    GroupKernel(const Ctx &ctx, Lanes<WT> lanes, double *sumfac) : c(ctx), L(lanes), sf(sumfac) {}

    void bwd(const double *x, double *y, int dir = -1) const
    {
        if (c.dense)
        {
            dense_apply(L, dir < 0 ? c.sb.b : c.sb.db[dir], x, y, false);
        }
        else
        {
            sumfac_bwd(L, c.sb, dir, x, y, sf);
        }
    }

    void tr(const double *x, double *y, int dir, bool acc) const
    {
        if (c.dense)
        {
            dense_apply(L, dir < 0 ? c.sb.bt : c.sb.dbt[dir], x, y, acc);
        }
        else
        {
            sumfac_tr(L, c.sb, dir, x, y, acc, sf);
        }
    }

    void colloc(const double *x, double *y, int dir, bool transpose, bool acc) const
    {
        if (c.dense)
        {
            const auto &m = transpose ? c.sb.dense_collocation_transposed()
                                      : c.sb.dense_collocation();
            dense_apply(L, m[dir], x, y, acc);
        }
        else
        {
            colloc_tensor(L, c.sb, dir, transpose, x, y, acc);
        }
    }

private:
    const Ctx &c;
    Lanes<WT> L;
    double *sf;
};

// Regular elements: lambda_ij = |J| sum_m dxi_i/dx_m dxi_j/dx_m per lane.
template <int D, int WT>
void regular_laplacian_metric(Lanes<WT> L, const GeomView &geo, double *lam)
{
    const int W = L.n();
    for (int i = 0; i < D; ++i)
    {
        for (int j = 0; j < D; ++j)
        {
            for (int v = 0; v < W; ++v)
            {
                double s = 0.0;
                for (int m = 0; m < D; ++m)
                {
                    s += geo.metric[(i * D + m) * W + v] * geo.metric[(j * D + m) * W + v];
                }
                lam[(i * D + j) * W + v] = geo.weight[v] * s;
            }
        }
    }
}

// Gradient in eta -> weighted, metric-contracted flux in eta, plus
// lambda W u in `u` when given. In place on ge.
template <int D, int WT>
void apply_helmholtz_metric(Lanes<WT> L, const Ctx &c, const GeomView &geo, double *const *ge,
                            double *u, double *lam)
{
    const int W = L.n();
    const ShapeBasis &sb = c.sb;
    if (!geo.deformed)
    {
        regular_laplacian_metric<D>(L, geo, lam);
    }
    for (int l = 0; l < sb.num_points; ++l)
    {
        const double *g = c.collapsed ? sb.collapsed.at(l) : nullptr;
        const double wl = sb.ref_weights[l];
        const double *ml = geo.deformed ? geo.metric + static_cast<std::size_t>(l) * D * D * W : nullptr;
        for (int v = 0; v < W; ++v)
        {
            double ek[D];
            double xi[D];
            double f[D];
            for (int k = 0; k < D; ++k)
            {
                ek[k] = ge[k][l * W + v];
            }
            for (int i = 0; i < D; ++i)
            {
                if (g)
                {
                    double s = 0.0;
                    for (int k = 0; k < D; ++k)
                    {
                        s += g[i * D + k] * ek[k];
                    }
                    xi[i] = s;
                }
                else
                {
                    xi[i] = ek[i];
                }
            }
            double w;
            if (geo.deformed)
            {
                w = geo.weight[l * W + v];
                double x[D];
                for (int j = 0; j < D; ++j)
                {
                    double s = 0.0;
                    for (int i = 0; i < D; ++i)
                    {
                        s += ml[(i * D + j) * W + v] * xi[i];
                    }
                    x[j] = w * s;
                }
                for (int i = 0; i < D; ++i)
                {
                    double s = 0.0;
                    for (int j = 0; j < D; ++j)
                    {
                        s += ml[(i * D + j) * W + v] * x[j];
                    }
                    f[i] = s;
                }
            }
            else
            {
                w = wl * geo.weight[v];
                for (int i = 0; i < D; ++i)
                {
                    double s = 0.0;
                    for (int j = 0; j < D; ++j)
                    {
                        s += lam[(i * D + j) * W + v] * xi[j];
                    }
                    f[i] = wl * s;
                }
            }
            for (int k = 0; k < D; ++k)
            {
                if (g)
                {
                    double s = 0.0;
                    for (int i = 0; i < D; ++i)
                    {
                        s += g[i * D + k] * f[i];
                    }
                    ge[k][l * W + v] = s;
                }
                else
                {
                    ge[k][l * W + v] = f[k];
                }
            }
            if (u)
            {
                u[l * W + v] *= c.lambda * w;
            }
        }
    }
}

template <int WT>
void apply_weights(Lanes<WT> L, const Ctx &c, const GeomView &geo, double *u)
{
    const int W = L.n();
    for (int l = 0; l < c.sb.num_points; ++l)
    {
        for (int v = 0; v < W; ++v)
        {
            const double w = geo.deformed ? geo.weight[l * W + v] : c.sb.ref_weights[l] * geo.weight[v];
            u[l * W + v] *= w;
        }
    }
}

// eta gradient -> Cartesian gradient.
template <int D, int WT>
void apply_deriv_metric(Lanes<WT> L, const Ctx &c, const GeomView &geo, double *const *ge,
                        double *const *out)
{
    const int W = L.n();
    const ShapeBasis &sb = c.sb;
    for (int l = 0; l < sb.num_points; ++l)
    {
        const double *g = c.collapsed ? sb.collapsed.at(l) : nullptr;
        const double *ml = geo.deformed ? geo.metric + static_cast<std::size_t>(l) * D * D * W
                                        : geo.metric;
        for (int v = 0; v < W; ++v)
        {
            double xi[D];
            for (int i = 0; i < D; ++i)
            {
                double s = 0.0;
                if (g)
                {
                    for (int k = 0; k < D; ++k)
                    {
                        s += g[i * D + k] * ge[k][l * W + v];
                    }
                }
                else
                {
                    s = ge[i][l * W + v];
                }
                xi[i] = s;
            }
            for (int j = 0; j < D; ++j)
            {
                double s = 0.0;
                for (int i = 0; i < D; ++i)
                {
                    s += ml[(i * D + j) * W + v] * xi[i];
                }
                out[j][l * W + v] = s;
            }
        }
    }
}

// Reference-direction components v_i -> weighted eta components.
template <int D, int WT>
void apply_deriv_weights(Lanes<WT> L, const Ctx &c, const GeomView &geo, const double *const *vin,
                         double *const *ge)
{
    const int W = L.n();
    const ShapeBasis &sb = c.sb;
    for (int l = 0; l < sb.num_points; ++l)
    {
        const double *g = c.collapsed ? sb.collapsed.at(l) : nullptr;
        for (int v = 0; v < W; ++v)
        {
            const double w = geo.deformed ? geo.weight[l * W + v] : sb.ref_weights[l] * geo.weight[v];
            for (int k = 0; k < D; ++k)
            {
                double s = 0.0;
                if (g)
                {
                    for (int i = 0; i < D; ++i)
                    {
                        s += g[i * D + k] * vin[i][l * W + v];
                    }
                }
                else
                {
                    s = vin[k][l * W + v];
                }
                ge[k][l * W + v] = w * s;
            }
        }
    }
}

std::size_t group_scratch(const ShapeBasis &sb, int W)
{
    return (sumfac_scratch(sb) + 5 * static_cast<std::size_t>(sb.num_points) + 9) * W;
}

template <int D, int WT>
void run_group_dim(Op op, const Ctx &c, Lanes<WT> L, const double *const *in, double *const *out,
                   const GeomView &geo, double *scratch)
{
    const int W = L.n();
    const ShapeBasis &sb = c.sb;
    const std::size_t nqw = static_cast<std::size_t>(sb.num_points) * W;
    double *sf = scratch;
    double *u = sf + sumfac_scratch(sb) * W;
    double *ge[3] = {u + nqw, u + 2 * nqw, u + 3 * nqw};
    double *ut = u + 4 * nqw;
    double *lam = u + 5 * nqw;
    const GroupKernel<WT> k(c, L, sf);

    switch (op)
    {
    case Op::Bwd:
        k.bwd(in[0], out[0]);
        break;
    case Op::IProd:
        std::copy(in[0], in[0] + nqw, u);
        apply_weights(L, c, geo, u);
        k.tr(u, out[0], -1, false);
        break;
    case Op::Mass:
        k.bwd(in[0], u);
        apply_weights(L, c, geo, u);
        k.tr(u, out[0], -1, false);
        break;
    case Op::Deriv:
        for (int d = 0; d < D; ++d)
        {
            k.colloc(in[0], ge[d], d, false, false);
        }
        apply_deriv_metric<D>(L, c, geo, ge, out);
        break;
    case Op::IProdDeriv:
        apply_deriv_weights<D>(L, c, geo, in, ge);
        for (int d = 0; d < D; ++d)
        {
            k.tr(ge[d], out[0], d, d > 0);
        }
        break;
    case Op::HelmNonColl:
        k.bwd(in[0], u);
        for (int d = 0; d < D; ++d)
        {
            k.bwd(in[0], ge[d], d);
        }
        apply_helmholtz_metric<D>(L, c, geo, ge, u, lam);
        k.tr(u, out[0], -1, false);
        for (int d = 0; d < D; ++d)
        {
            k.tr(ge[d], out[0], d, true);
        }
        break;
    case Op::HelmColl:
        k.bwd(in[0], u);
        for (int d = 0; d < D; ++d)
        {
            k.colloc(u, ge[d], d, false, false);
        }
        apply_helmholtz_metric<D>(L, c, geo, ge, u, lam);
        std::copy(u, u + nqw, ut);
        for (int d = 0; d < D; ++d)
        {
            k.colloc(ge[d], ut, d, true, true);
        }
        k.tr(ut, out[0], -1, false);
        break;
    }
}

struct OpShape
{
    FieldState in_state;
    FieldState out_state;
    bool in_vector;
    bool out_vector;
};

OpShape op_shape(Op op)
{
    switch (op)
    {
    case Op::Bwd:
        return {FieldState::Coeff, FieldState::Phys, false, false};
    case Op::IProd:
        return {FieldState::Phys, FieldState::Coeff, false, false};
    case Op::Deriv:
        return {FieldState::Phys, FieldState::Phys, false, true};
    case Op::IProdDeriv:
        return {FieldState::Phys, FieldState::Coeff, true, false};
    default:
        return {FieldState::Coeff, FieldState::Coeff, false, false};
    }
}

void validate(Op op, const Block &in, const Block &out, Strategy s)
{
    check_strategy(s);
    if (&in.basis() != &out.basis() || &in.geometry() != &out.geometry() ||
        in.width() != out.width())
    {
        throw StateError("output block must share basis, geometry and width with the input");
    }
    const OpShape sh = op_shape(op);
    if (in.state() != sh.in_state)
    {
        throw StateError(std::string("input block is in ") + std::string(to_string(in.state())) +
                         " state, expected " + std::string(to_string(sh.in_state)));
    }
    if (out.state() != sh.out_state)
    {
        throw StateError(std::string("output block is in ") + std::string(to_string(out.state())) +
                         " state, expected " + std::string(to_string(sh.out_state)));
    }
    const int d = in.dim();
    if (in.components() != (sh.in_vector ? d : 1))
    {
        throw StateError("input block has " + std::to_string(in.components()) +
                         " components, expected " + std::to_string(sh.in_vector ? d : 1));
    }
    if (out.components() != (sh.out_vector ? d : 1))
    {
        throw StateError("output block has " + std::to_string(out.components()) +
                         " components, expected " + std::to_string(sh.out_vector ? d : 1));
    }
}

template <int WT>
void drive(Op op, const Block &in, Block &out, Strategy s, double lambda, ThreadPool *pool)
{
    const ShapeBasis &sb = in.basis();
    const int ws = in.width();
    const int wk = kernel_width(s, ws);
    const Lanes<WT> L{wk};
    const Ctx ctx{sb, s != Strategy::SumFac, is_collapsed(sb.shape), lambda};
    const PackedGeometry &pg = in.packed_geometry();
    const bool deformed = pg.cls == GeometryClass::Deformed;
    const int dd = sb.dim * sb.dim;

    if (ctx.dense && (op == Op::HelmColl || op == Op::Deriv))
    {
        sb.dense_collocation();
    }

    auto rin = in.region().access(MemorySpace::Host, Access::ReadOnly);
    auto rout = out.region().access(MemorySpace::Host, Access::WriteOnly);
    const double *src = rin.read().data();
    double *dst = rout.write().data();

    const int nin = in.points_per_element();
    const int nout = out.points_per_element();
    const int cin = in.components();
    const int cout = out.components();
    const std::size_t sin = in.component_stride();
    const std::size_t sout = out.component_stride();
    const bool direct = wk == ws;
    const int units = direct ? in.num_groups() : in.num_elements();
    const std::size_t geo_sites = deformed ? static_cast<std::size_t>(sb.num_points) : 1;

    auto body = [&](int begin, int end, int) {
        thread_local std::vector<double> buffer;
        const std::size_t work = group_scratch(sb, wk);
        const std::size_t staging =
            direct ? 0
                   : static_cast<std::size_t>(cin) * nin + static_cast<std::size_t>(cout) * nout +
                         geo_sites * (dd + 1);
        if (buffer.size() < work + staging)
        {
            buffer.resize(work + staging);
        }
        double *scratch = buffer.data();
        const double *ip[3] = {nullptr, nullptr, nullptr};
        double *op_[3] = {nullptr, nullptr, nullptr};
        for (int unit = begin; unit < end; ++unit)
        {
            GeomView geo{deformed, nullptr, nullptr};
            if (direct)
            {
                const std::size_t g = unit;
                for (int ci = 0; ci < cin; ++ci)
                {
                    ip[ci] = src + ci * sin + g * nin * ws;
                }
                for (int co = 0; co < cout; ++co)
                {
                    op_[co] = dst + co * sout + g * nout * ws;
                }
                geo.metric = pg.metric.data() + g * geo_sites * dd * ws;
                geo.weight = pg.weight.data() + g * geo_sites * ws;
            }
            else
            {
                // One element pulled out of its interleaved group.
                const std::size_t g = unit / ws;
                const int lane = unit % ws;
                double *stage = scratch + work;
                for (int ci = 0; ci < cin; ++ci)
                {
                    const double *from = src + ci * sin + g * nin * ws + lane;
                    double *to = stage + static_cast<std::size_t>(ci) * nin;
                    for (int p = 0; p < nin; ++p)
                    {
                        to[p] = from[p * ws];
                    }
                    ip[ci] = to;
                }
                stage += static_cast<std::size_t>(cin) * nin;
                for (int co = 0; co < cout; ++co)
                {
                    op_[co] = stage + static_cast<std::size_t>(co) * nout;
                }
                stage += static_cast<std::size_t>(cout) * nout;
                double *gm = stage;
                double *gw = stage + geo_sites * dd;
                for (std::size_t site = 0; site < geo_sites; ++site)
                {
                    const std::size_t at = g * geo_sites + site;
                    for (int k = 0; k < dd; ++k)
                    {
                        gm[site * dd + k] = pg.metric[(at * dd + k) * ws + lane];
                    }
                    gw[site] = pg.weight[at * ws + lane];
                }
                geo.metric = gm;
                geo.weight = gw;
            }

            if (sb.dim == 2)
            {
                run_group_dim<2>(op, ctx, L, ip, op_, geo, scratch);
            }
            else
            {
                run_group_dim<3>(op, ctx, L, ip, op_, geo, scratch);
            }

            if (!direct)
            {
                const std::size_t g = unit / ws;
                const int lane = unit % ws;
                for (int co = 0; co < cout; ++co)
                {
                    double *to = dst + co * sout + g * nout * ws + lane;
                    for (int p = 0; p < nout; ++p)
                    {
                        to[p * ws] = op_[co][p];
                    }
                }
            }
        }
    };

    if (pool && pool->size() > 1)
    {
        pool->parallel_for(units, body);
    }
    else
    {
        body(0, units, 0);
    }
}

void dispatch(Op op, const Block &in, Block &out, Strategy s, double lambda, ThreadPool *pool)
{
    validate(op, in, out, s);
    switch (kernel_width(s, in.width()))
    {
    case 1:
        return drive<1>(op, in, out, s, lambda, pool);
    case 2:
        return drive<2>(op, in, out, s, lambda, pool);
    case 4:
        return drive<4>(op, in, out, s, lambda, pool);
    case 8:
        return drive<8>(op, in, out, s, lambda, pool);
    case 16:
        return drive<16>(op, in, out, s, lambda, pool);
    default:
        return drive<0>(op, in, out, s, lambda, pool);
    }
}

void check_lambda(double lambda)
{
    if (!(lambda >= 0.0))
    {
        throw ConfigError("Helmholtz lambda must be non-negative");
    }
}

} // namespace

void bwd_trans(const Block &in, Block &out, Strategy s, ThreadPool *pool)
{
    dispatch(Op::Bwd, in, out, s, 0.0, pool);
}

void iproduct_wrt_base(const Block &in, Block &out, Strategy s, ThreadPool *pool)
{
    dispatch(Op::IProd, in, out, s, 0.0, pool);
}

void phys_deriv(const Block &in, Block &out, Strategy s, ThreadPool *pool)
{
    dispatch(Op::Deriv, in, out, s, 0.0, pool);
}

void iproduct_wrt_deriv_base(const Block &in, Block &out, Strategy s, ThreadPool *pool)
{
    dispatch(Op::IProdDeriv, in, out, s, 0.0, pool);
}

void mass_apply(const Block &in, Block &out, Strategy s, ThreadPool *pool)
{
    dispatch(Op::Mass, in, out, s, 0.0, pool);
}

void helmholtz_apply(const Block &in, Block &out, double lambda, Strategy s, HelmholtzForm form,
                     ThreadPool *pool)
{
    check_lambda(lambda);
    dispatch(form == HelmholtzForm::Collocated ? Op::HelmColl : Op::HelmNonColl, in, out, s, lambda,
             pool);
}

void helmholtz_apply_noncoll(const Block &in, Block &out, double lambda, Strategy s,
                             ThreadPool *pool)
{
    helmholtz_apply(in, out, lambda, s, HelmholtzForm::NonCollocated, pool);
}

void helmholtz_apply_coll(const Block &in, Block &out, double lambda, Strategy s, ThreadPool *pool)
{
    helmholtz_apply(in, out, lambda, s, HelmholtzForm::Collocated, pool);
}

void Operator::apply(const Field &in, Field &out) const
{
    if (in.state() != input_state() || out.state() != output_state())
    {
        throw StateError(std::string(to_string(kind())) + " expects a " +
                         std::string(to_string(input_state())) + " field and produces a " +
                         std::string(to_string(output_state())) + " field");
    }
    if (in.size() != out.size())
    {
        throw StateError("input and output fields have different block counts");
    }
    for (std::size_t b = 0; b < in.size(); ++b)
    {
        apply(in[b], out[b]);
    }
}

Block Operator::make_output(const Block &in) const
{
    return in.like(output_state(), output_components(in.dim()));
}

Field Operator::make_output(const Field &in) const
{
    Field f(output_state());
    for (const Block &b : in.blocks())
    {
        f.add_block(make_output(b));
    }
    return f;
}

namespace
{

class BwdTransOp final : public Operator
{
public:
    using Operator::Operator;
    OperatorKind kind() const override { return OperatorKind::BwdTrans; }
    FieldState input_state() const override { return FieldState::Coeff; }
    FieldState output_state() const override { return FieldState::Phys; }
    void apply(const Block &in, Block &out) const override
    {
        bwd_trans(in, out, config().strategy, config().pool);
    }
    using Operator::apply;
};

class IProductOp final : public Operator
{
public:
    using Operator::Operator;
    OperatorKind kind() const override { return OperatorKind::IProductWRTBase; }
    FieldState input_state() const override { return FieldState::Phys; }
    FieldState output_state() const override { return FieldState::Coeff; }
    void apply(const Block &in, Block &out) const override
    {
        iproduct_wrt_base(in, out, config().strategy, config().pool);
    }
    using Operator::apply;
};

class PhysDerivOp final : public Operator
{
public:
    using Operator::Operator;
    OperatorKind kind() const override { return OperatorKind::PhysDeriv; }
    FieldState input_state() const override { return FieldState::Phys; }
    FieldState output_state() const override { return FieldState::Phys; }
    int output_components(int dim) const override { return dim; }
    void apply(const Block &in, Block &out) const override
    {
        phys_deriv(in, out, config().strategy, config().pool);
    }
    using Operator::apply;
};

class IProductDerivOp final : public Operator
{
public:
    using Operator::Operator;
    OperatorKind kind() const override { return OperatorKind::IProductWRTDerivBase; }
    FieldState input_state() const override { return FieldState::Phys; }
    FieldState output_state() const override { return FieldState::Coeff; }
    int input_components(int dim) const override { return dim; }
    void apply(const Block &in, Block &out) const override
    {
        iproduct_wrt_deriv_base(in, out, config().strategy, config().pool);
    }
    using Operator::apply;
};

class MassOp final : public Operator
{
public:
    using Operator::Operator;
    OperatorKind kind() const override { return OperatorKind::Mass; }
    FieldState input_state() const override { return FieldState::Coeff; }
    FieldState output_state() const override { return FieldState::Coeff; }
    void apply(const Block &in, Block &out) const override
    {
        mass_apply(in, out, config().strategy, config().pool);
    }
    using Operator::apply;
};

class HelmholtzOp final : public Operator
{
public:
    HelmholtzOp(OperatorConfig config, HelmholtzForm form) : Operator(config), m_form(form)
    {
        check_lambda(config.lambda);
    }
    OperatorKind kind() const override
    {
        return m_form == HelmholtzForm::Collocated ? OperatorKind::HelmholtzColl
                                                   : OperatorKind::HelmholtzNonColl;
    }
    FieldState input_state() const override { return FieldState::Coeff; }
    FieldState output_state() const override { return FieldState::Coeff; }
    void apply(const Block &in, Block &out) const override
    {
        helmholtz_apply(in, out, config().lambda, config().strategy, m_form, config().pool);
    }
    using Operator::apply;

private:
    HelmholtzForm m_form;
};

} // namespace

std::unique_ptr<Operator> make_operator(OperatorKind kind, const OperatorConfig &config)
{
    check_strategy(config.strategy);
    switch (kind)
    {
    case OperatorKind::BwdTrans:
        return std::make_unique<BwdTransOp>(config);
    case OperatorKind::IProductWRTBase:
        return std::make_unique<IProductOp>(config);
    case OperatorKind::PhysDeriv:
        return std::make_unique<PhysDerivOp>(config);
    case OperatorKind::IProductWRTDerivBase:
        return std::make_unique<IProductDerivOp>(config);
    case OperatorKind::Mass:
        return std::make_unique<MassOp>(config);
    case OperatorKind::HelmholtzNonColl:
        return std::make_unique<HelmholtzOp>(config, HelmholtzForm::NonCollocated);
    case OperatorKind::HelmholtzColl:
        return std::make_unique<HelmholtzOp>(config, HelmholtzForm::Collocated);
    }
    throw ConfigError("unknown operator kind");
}

} // namespace speckern
