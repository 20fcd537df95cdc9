#include "speckern/operators.hpp"

namespace speckern
{

namespace
{

std::uint64_t sumfac_sweep(const ShapeBasis &sb)
{
    const SumFacPlan &plan = sb.plan;
    const std::uint64_t q0 = sb.nq[0];
    const std::uint64_t ql = sb.nq[sb.dim - 1];
    std::uint64_t n = (static_cast<std::uint64_t>(sb.num_modes) + plan.mode_fixes.size()) * ql;
    if (sb.dim == 3)
    {
        const std::uint64_t q1 = sb.nq[1];
        n += (static_cast<std::uint64_t>(plan.num_lines) + plan.line_fixes.size()) * ql * q1;
        n += static_cast<std::uint64_t>(plan.num_outer) * ql * q1 * q0;
    }
    else
    {
        n += static_cast<std::uint64_t>(plan.num_outer) * ql * q0;
    }
    return 2 * n;
}

} // namespace

std::uint64_t operator_flops(OperatorKind kind, ShapeType shape, int order, Strategy s,
                             GeometryClass geometry, std::optional<std::array<int, 3>> qpoints)
{
    kernel_width(s, 1);
    const auto basis = build_shape_basis(shape, order, qpoints);
    const ShapeBasis &sb = *basis;
    const std::uint64_t nq = sb.num_points;
    const std::uint64_t np = sb.num_modes;
    const std::uint64_t d = sb.dim;
    const bool dense = s != Strategy::SumFac;
    const bool deformed = geometry == GeometryClass::Deformed;
    const bool collapsed = is_collapsed(shape);

    const std::uint64_t sweep = dense ? 2 * nq * np : sumfac_sweep(sb);
    std::uint64_t colloc = 0;
    for (int k = 0; k < sb.dim; ++k)
    {
        colloc += dense ? 2 * nq * nq : 2 * nq * static_cast<std::uint64_t>(sb.nq[k]);
    }
    const std::uint64_t weights = nq * (deformed ? 1 : 2);
    const std::uint64_t g = collapsed ? 2 * d * d * nq : 0;

    // eta gradient -> weighted flux in eta, plus the lambda W u term.
    std::uint64_t metric = 2 * g + (deformed ? (4 * d * d + d) * nq : (2 * d * d + d) * nq +
                                                                          d * d * (2 * d + 1));
    metric += 3 * nq;

    switch (kind)
    {
    case OperatorKind::BwdTrans:
        return sweep;
    case OperatorKind::IProductWRTBase:
        return sweep + weights;
    case OperatorKind::Mass:
        return 2 * sweep + weights;
    case OperatorKind::PhysDeriv:
        return colloc + g + 2 * d * d * nq;
    case OperatorKind::IProductWRTDerivBase:
        return d * sweep + g + weights + d * nq;
    case OperatorKind::HelmholtzNonColl:
        return 2 * (1 + d) * sweep + metric;
    case OperatorKind::HelmholtzColl:
        return 2 * sweep + 2 * colloc + metric;
    }
    return 0;
}

} // namespace speckern
