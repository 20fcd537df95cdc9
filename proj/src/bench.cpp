#include "speckern/bench.hpp"

#include "speckern/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace speckern
{

std::string_view to_string(BenchOp op)
{
    switch (op)
    {
    case BenchOp::Mass:
        return "mass";
    case BenchOp::Helmholtz:
        return "helmholtz";
    case BenchOp::BwdTrans:
        return "bwdtrans";
    }
    return "?";
}

BenchOp parse_bench_op(std::string_view name)
{
    for (BenchOp op : {BenchOp::Mass, BenchOp::Helmholtz, BenchOp::BwdTrans})
    {
        if (to_string(op) == name)
        {
            return op;
        }
    }
    throw ConfigError("unknown op '" + std::string(name) + "' (mass, helmholtz, bwdtrans)");
}

std::string_view to_string(CompareAxis axis)
{
    switch (axis)
    {
    case CompareAxis::Geometry:
        return "geometry";
    case CompareAxis::Form:
        return "form";
    case CompareAxis::Strategy:
        return "strategy";
    }
    return "?";
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::vector<double> v(n);
    for (double &x : v)
    {
        x = 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
    }
    return v;
}

void validate(const BenchConfig &c)
{
    if (c.shapes.empty() || c.nelem.empty() || c.strategies.empty())
    {
        throw ConfigError("shape, nelem and strategy lists must be nonempty");
    }
    if (c.order_min < 1 || c.order_max < c.order_min)
    {
        throw ConfigError("order range must satisfy 1 <= a <= b");
    }
    if (std::any_of(c.nelem.begin(), c.nelem.end(), [](int n) { return n < 1; }))
    {
        throw ConfigError("element counts must be positive");
    }
    if (c.reps < 3)
    {
        throw ConfigError("at least 3 repetitions are required");
    }
    if (c.warmup < 1)
    {
        throw ConfigError("at least 1 warmup batch is required");
    }
    if (c.simd_width < 0 || c.simd_width > 64)
    {
        throw ConfigError("simd width must lie in [0, 64]");
    }
    if (!(c.lambda >= 0.0))
    {
        throw ConfigError("lambda must be non-negative");
    }
    if (!(c.amplitude >= 0.0) || c.amplitude > kMaxDeformationAmplitude)
    {
        throw ConfigError("deformation amplitude must lie in [0, 0.1]");
    }
    if (c.form && c.op != BenchOp::Helmholtz)
    {
        throw ConfigError("--form only applies to the helmholtz op");
    }
    for (Strategy s : c.strategies)
    {
        kernel_width(s, 1);
    }
    if (c.qpoints)
    {
        for (int q : *c.qpoints)
        {
            if (q < 2)
            {
                throw ConfigError("quadrature point counts must be at least 2");
            }
        }
    }
}

namespace
{

std::string fmt(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

std::string fmt_err(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 2);
    return std::string(buf, res.ptr);
}

double max_rel_diff(std::span<const double> a, std::span<const double> ref)
{
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
    {
        scale = std::max(scale, std::abs(ref[i]));
        diff = std::max(diff, std::abs(a[i] - ref[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

struct Setup
{
    std::shared_ptr<const ShapeBasis> basis;
    SyntheticMesh mesh;
    std::shared_ptr<const GeometricFactors> geom;
};

Setup make_setup(ShapeType shape, int order, int nelem, GeometryClass cls, std::uint64_t seed,
                 double amplitude, const std::optional<std::array<int, 3>> &qpoints)
{
    Setup s;
    s.basis = build_shape_basis(shape, order, qpoints);
    s.mesh = make_synthetic_mesh(shape, nelem, seed, cls == GeometryClass::Deformed ? amplitude : 0.0);
    s.geom = std::make_shared<const GeometricFactors>(build_geometry(s.mesh, cls, *s.basis));
    return s;
}

FieldState output_state(BenchOp op) { return op == BenchOp::BwdTrans ? FieldState::Phys : FieldState::Coeff; }

void apply_op(BenchOp op, const Block &in, Block &out, Strategy s, double lambda,
              std::optional<HelmholtzForm> form, ThreadPool *pool)
{
    switch (op)
    {
    case BenchOp::Mass:
        mass_apply(in, out, s, pool);
        break;
    case BenchOp::BwdTrans:
        bwd_trans(in, out, s, pool);
        break;
    case BenchOp::Helmholtz:
        helmholtz_apply(in, out, lambda, s, form.value_or(default_form(s)), pool);
        break;
    }
}

OperatorKind operator_kind(BenchOp op, HelmholtzForm form)
{
    switch (op)
    {
    case BenchOp::Mass:
        return OperatorKind::Mass;
    case BenchOp::BwdTrans:
        return OperatorKind::BwdTrans;
    case BenchOp::Helmholtz:
        break;
    }
    return form == HelmholtzForm::Collocated ? OperatorKind::HelmholtzColl
                                             : OperatorKind::HelmholtzNonColl;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::string csv_header()
{
    return "op,shape,P,strategy,geometry,form,nelem,ndof,seconds,dof_per_s,flops_per_elem";
}

std::string csv_row(const BenchRecord &r)
{
    std::string s;
    s += to_string(r.op);
    s += ',';
    s += to_string(r.shape);
    s += ',' + std::to_string(r.order) + ',';
    s += to_string(r.strategy);
    s += ',';
    s += to_string(r.geometry);
    s += ',';
    s += r.form ? std::string(to_string(*r.form)) : std::string("none");
    s += ',' + std::to_string(r.nelem) + ',' + std::to_string(r.ndof) + ',' + fmt(r.seconds) + ',' +
         fmt(r.dof_per_s) + ',' + std::to_string(r.flops_per_elem);
    return s;
}

std::vector<BenchRecord> run_bench(const BenchConfig &c, ThreadPool *pool, std::ostream *progress)
{
    validate(c);
    using Clock = std::chrono::steady_clock;
    const int width = c.simd_width > 0 ? c.simd_width : default_simd_width();
    std::vector<BenchRecord> records;
    for (ShapeType shape : c.shapes)
    {
        for (int P = c.order_min; P <= c.order_max; ++P)
        {
            for (int nelem : c.nelem)
            {
                const Setup setup = make_setup(shape, P, nelem, c.geometry, c.seed, c.amplitude, c.qpoints);
                Block in(setup.basis, setup.geom, FieldState::Coeff, 1, width);
                in.from_canonical(random_values(static_cast<std::size_t>(nelem) * setup.basis->num_modes,
                                                element_seed(c.seed, 0x5eed)));

                for (Strategy s : c.strategies)
                {
                    const std::optional<HelmholtzForm> form =
                        c.op == BenchOp::Helmholtz ? std::optional(c.form.value_or(default_form(s)))
                                                   : std::nullopt;
                    Block out = in.like(output_state(c.op));
                    Block ref = in.like(output_state(c.op));
                    const Strategy other = s == Strategy::StdMat ? Strategy::SumFac : Strategy::StdMat;
                    apply_op(c.op, in, out, s, c.lambda, form, pool);
                    apply_op(c.op, in, ref, other, c.lambda, form, pool);
                    {
                        const auto a = out.to_canonical();
                        const auto b = ref.to_canonical();
                        const double err = max_rel_diff(a, b);
                        if (!(err <= 1e-10))
                        {
                            throw VerificationError(
                                std::string(to_string(c.op)) + " " + std::string(to_string(shape)) +
                                " P=" + std::to_string(P) + ": " + std::string(to_string(s)) + " and " +
                                std::string(to_string(other)) + " differ by " + fmt_err(err) +
                                " (relative)");
                        }
                    }

                    auto batch = [&](int iters) {
                        const auto t0 = Clock::now();
                        for (int i = 0; i < iters; ++i)
                        {
                            apply_op(c.op, in, out, s, c.lambda, form, pool);
                        }
                        return std::chrono::duration<double>(Clock::now() - t0).count();
                    };

                    // Grow the batch until it spans the minimum timed region.
                    int iters = 1;
                    for (;;)
                    {
                        const double t = batch(iters);
                        if (t >= c.min_batch_seconds || iters >= (1 << 24))
                        {
                            break;
                        }
                        const double grow = t > 0.0 ? 1.2 * c.min_batch_seconds / t : 16.0;
                        iters = static_cast<int>(std::min<double>(1 << 24, std::ceil(iters * std::clamp(grow, 2.0, 16.0))));
                    }
                    for (int w = 0; w < c.warmup; ++w)
                    {
                        batch(iters);
                    }
                    BenchRecord r;
                    r.op = c.op;
                    r.shape = shape;
                    r.order = P;
                    r.strategy = s;
                    r.geometry = c.geometry;
                    r.form = form;
                    r.nelem = nelem;
                    r.ndof = static_cast<std::uint64_t>(nelem) * setup.basis->num_modes;
                    r.iterations = iters;
                    for (int k = 0; k < c.reps; ++k)
                    {
                        r.batch_seconds.push_back(batch(iters));
                    }
                    r.seconds = median(r.batch_seconds) / iters;
                    r.dof_per_s = static_cast<double>(r.ndof) / r.seconds;
                    r.flops_per_elem = operator_flops(operator_kind(c.op, form.value_or(HelmholtzForm::NonCollocated)),
                                                      shape, P, s, c.geometry, c.qpoints);
                    const PackedGeometry &pg = in.packed_geometry();
                    r.bytes_estimate = 8 * (in.component_stride() + out.component_stride() +
                                            pg.metric.size() + pg.weight.size());
                    if (progress)
                    {
                        *progress << csv_row(r) << '\n';
                    }
                    records.push_back(std::move(r));
                }
            }
        }
    }
    return records;
}

int VerifyReport::failures() const
{
    return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const VerifyCase &c) { return !c.passed; }));
}

VerifyReport run_verify(const VerifyScope &scope, std::ostream *out)
{
    if (scope.order_min < 1 || scope.order_max < scope.order_min)
    {
        throw ConfigError("order range must satisfy 1 <= a <= b");
    }
    if (scope.nelem < 1)
    {
        throw ConfigError("verify needs at least one element");
    }
    for (Strategy s : scope.strategies)
    {
        kernel_width(s, 1);
    }
    const int width = scope.simd_width > 0 ? scope.simd_width : default_simd_width();
    VerifyReport report;
    auto record = [&](std::string label, double err) {
        VerifyCase vc{std::move(label), err, err <= scope.tolerance};
        if (out)
        {
            *out << (vc.passed ? "PASS " : "FAIL ") << vc.label << " max_rel_err=" << fmt_err(err) << '\n';
        }
        report.cases.push_back(std::move(vc));
    };

    std::uint64_t case_seed = scope.seed;
    for (ShapeType shape : scope.shapes)
    {
        for (int P = scope.order_min; P <= scope.order_max; ++P)
        {
            for (GeometryClass cls : scope.geometries)
            {
                const Setup setup =
                    make_setup(shape, P, scope.nelem, cls, element_seed(scope.seed, case_seed++), 0.05, {});
                const int np = setup.basis->num_modes;
                const int nq = setup.basis->num_points;
                Block in(setup.basis, setup.geom, FieldState::Coeff, 1, width);
                const auto coeffs = random_values(static_cast<std::size_t>(scope.nelem) * np,
                                                  element_seed(scope.seed, case_seed++));
                in.from_canonical(coeffs);

                auto spec = [&](int e) {
                    return oracle::ElementSpec{shape, P,
                                               [&setup, e](const Point &xi) { return setup.mesh.map(e, xi); },
                                               {}};
                };
                auto oracle_action = [&](const auto &assemble, int rows) {
                    std::vector<double> y;
                    y.reserve(static_cast<std::size_t>(scope.nelem) * rows);
                    for (int e = 0; e < scope.nelem; ++e)
                    {
                        const auto m = assemble(spec(e));
                        const auto ye = oracle::apply_dense(
                            m, std::span<const double>(coeffs.data() + static_cast<std::size_t>(e) * np, np));
                        y.insert(y.end(), ye.begin(), ye.end());
                    }
                    return y;
                };
                const std::string where = std::string(to_string(shape)) + " P=" + std::to_string(P) + " " +
                                          std::string(to_string(cls));

                for (BenchOp op : scope.ops)
                {
                    if (op == BenchOp::Helmholtz)
                    {
                        for (double lambda : scope.lambdas)
                        {
                            const auto ref = oracle_action(
                                [&](const oracle::ElementSpec &es) { return oracle::assemble_helmholtz(es, lambda); }, np);
                            for (Strategy s : scope.strategies)
                            {
                                std::vector<double> results[2];
                                for (HelmholtzForm f : {HelmholtzForm::NonCollocated, HelmholtzForm::Collocated})
                                {
                                    Block o = in.like(FieldState::Coeff);
                                    helmholtz_apply(in, o, lambda, s, f);
                                    results[f == HelmholtzForm::Collocated] = o.to_canonical();
                                    record(where + " helmholtz " + std::string(to_string(s)) + " " +
                                               std::string(to_string(f)) + " lambda=" + fmt(lambda) + " vs oracle",
                                           max_rel_diff(results[f == HelmholtzForm::Collocated], ref));
                                }
                                record(where + " helmholtz " + std::string(to_string(s)) + " coll vs noncoll lambda=" +
                                           fmt(lambda),
                                       max_rel_diff(results[1], results[0]));
                            }
                        }
                        continue;
                    }
                    const bool bwd = op == BenchOp::BwdTrans;
                    const auto ref =
                        bwd ? oracle_action([](const oracle::ElementSpec &es) { return oracle::assemble_bwd(es); }, nq)
                            : oracle_action([](const oracle::ElementSpec &es) { return oracle::assemble_mass(es); }, np);
                    for (Strategy s : scope.strategies)
                    {
                        Block o = in.like(output_state(op));
                        apply_op(op, in, o, s, 0.0, std::nullopt, nullptr);
                        record(where + " " + std::string(to_string(op)) + " " + std::string(to_string(s)) + " vs oracle",
                               max_rel_diff(o.to_canonical(), ref));
                    }
                }
            }
        }
    }
    return report;
}

CompareAxis compare_axis(const BenchConfig &a, const BenchConfig &b)
{
    validate(a);
    validate(b);
    const bool same_rest = a.op == b.op && a.shapes == b.shapes && a.order_min == b.order_min &&
                           a.order_max == b.order_max && a.nelem == b.nelem && a.lambda == b.lambda &&
                           a.simd_width == b.simd_width && a.qpoints == b.qpoints && a.reps == b.reps &&
                           a.warmup == b.warmup && a.seed == b.seed && a.amplitude == b.amplitude;
    if (!same_rest)
    {
        throw ConfigError("compared configurations may only differ in geometry, form or strategy");
    }
    if (a.strategies.size() != 1 || b.strategies.size() != 1)
    {
        throw ConfigError("compare needs exactly one strategy per configuration");
    }
    std::vector<CompareAxis> axes;
    if (a.geometry != b.geometry)
    {
        axes.push_back(CompareAxis::Geometry);
    }
    if (a.form != b.form)
    {
        axes.push_back(CompareAxis::Form);
    }
    if (a.strategies != b.strategies)
    {
        axes.push_back(CompareAxis::Strategy);
    }
    if (axes.empty())
    {
        throw ConfigError("compared configurations are equal on geometry, form and strategy");
    }
    if (axes.size() > 1)
    {
        throw ConfigError("compared configurations differ in more than one of geometry, form and strategy");
    }
    return axes.front();
}

std::vector<CompareRow> run_compare(const BenchConfig &a, const BenchConfig &b, ThreadPool *pool,
                                    std::ostream *progress)
{
    const CompareAxis axis = compare_axis(a, b);
    auto label = [axis](const BenchConfig &c) -> std::string {
        switch (axis)
        {
        case CompareAxis::Geometry:
            return std::string(to_string(c.geometry));
        case CompareAxis::Form:
            return std::string(to_string(c.form.value_or(default_form(c.strategies.front()))));
        case CompareAxis::Strategy:
            return std::string(to_string(c.strategies.front()));
        }
        return "?";
    };
    const auto ra = run_bench(a, pool, progress);
    const auto rb = run_bench(b, pool, progress);
    std::vector<CompareRow> rows;
    for (std::size_t i = 0; i < ra.size(); ++i)
    {
        CompareRow row;
        row.shape = ra[i].shape;
        row.order = ra[i].order;
        row.nelem = ra[i].nelem;
        row.axis = axis;
        row.a_label = label(a);
        row.b_label = label(b);
        row.a_dof_per_s = ra[i].dof_per_s;
        row.b_dof_per_s = rb[i].dof_per_s;
        row.ratio = rb[i].dof_per_s / ra[i].dof_per_s;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string compare_csv_header() { return "axis,shape,P,nelem,a,b,a_dof_per_s,b_dof_per_s,ratio_b_over_a"; }

std::string compare_csv_row(const CompareRow &r)
{
    std::ostringstream s;
    s << to_string(r.axis) << ',' << to_string(r.shape) << ',' << r.order << ',' << r.nelem << ',' << r.a_label
      << ',' << r.b_label << ',' << fmt(r.a_dof_per_s) << ',' << fmt(r.b_dof_per_s) << ',' << fmt(r.ratio);
    return s.str();
}

} // namespace speckern
