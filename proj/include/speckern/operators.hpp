#pragma once

#include "speckern/field.hpp"
#include "speckern/geometry.hpp"
#include "speckern/thread_pool.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

namespace speckern
{

enum class Strategy
{
    StdMat,        ///< dense reference matrices, one element at a time
    StdMatGrouped, ///< dense reference matrices on interleaved element groups
    SumFac,        ///< per-direction contractions on interleaved element groups
    SumFacTOP,     ///< reserved for a thread-per-output-point device kernel
};

enum class OperatorKind
{
    BwdTrans,
    IProductWRTBase,
    PhysDeriv,
    IProductWRTDerivBase,
    Mass,
    HelmholtzNonColl,
    HelmholtzColl,
};

enum class HelmholtzForm
{
    NonCollocated,
    Collocated,
};

std::string_view to_string(Strategy s);
std::string_view to_string(OperatorKind k);
std::string_view to_string(HelmholtzForm f);
Strategy parse_strategy(std::string_view name);
HelmholtzForm parse_form(std::string_view name);

/// Non-collocated for the dense strategies, collocated for sum-factorisation.
HelmholtzForm default_form(Strategy s);

/// Lane count the strategy works with on a block of the given storage width.
int kernel_width(Strategy s, int storage_width);

// Block-level operators. `out` must be created with Block::like from the
// input (same basis, geometry and width) in the state and component count
// the operator produces. Work is split over element groups when a pool is
// given.

/// Coeff -> Phys: u = B u_hat.
void bwd_trans(const Block &in, Block &out, Strategy s, ThreadPool *pool = nullptr);
/// Phys -> Coeff: f_hat = B^T W u.
void iproduct_wrt_base(const Block &in, Block &out, Strategy s, ThreadPool *pool = nullptr);
/// Phys -> Phys (d components): Cartesian gradient by collocation
/// differentiation in the collapsed coordinates.
void phys_deriv(const Block &in, Block &out, Strategy s = Strategy::SumFac,
                ThreadPool *pool = nullptr);
/// Phys (d components, reference directions) -> Coeff:
/// f_hat = sum_i (d phi / d xi_i)^T W v_i.
void iproduct_wrt_deriv_base(const Block &in, Block &out, Strategy s, ThreadPool *pool = nullptr);
/// Coeff -> Coeff: M u_hat.
void mass_apply(const Block &in, Block &out, Strategy s, ThreadPool *pool = nullptr);
/// Coeff -> Coeff: (L + lambda M) u_hat with L the weak Laplacian.
void helmholtz_apply(const Block &in, Block &out, double lambda, Strategy s, HelmholtzForm form,
                     ThreadPool *pool = nullptr);
void helmholtz_apply_noncoll(const Block &in, Block &out, double lambda, Strategy s,
                             ThreadPool *pool = nullptr);
void helmholtz_apply_coll(const Block &in, Block &out, double lambda,
                          Strategy s = Strategy::SumFac, ThreadPool *pool = nullptr);

/// Floating-point operations per element of the kernel as implemented, with
/// a multiply-add counted as two.
std::uint64_t operator_flops(OperatorKind kind, ShapeType shape, int order, Strategy s,
                             GeometryClass geometry = GeometryClass::Regular,
                             std::optional<std::array<int, 3>> qpoints = {});

struct OperatorConfig
{
    Strategy strategy = Strategy::SumFac;
    double lambda = 0.0;
    ThreadPool *pool = nullptr;
};

/// Operator acting block by block on fields.
class Operator
{
public:
    explicit Operator(OperatorConfig config) : m_config(config) {}
    virtual ~Operator() = default;

    virtual OperatorKind kind() const = 0;
    virtual FieldState input_state() const = 0;
    virtual FieldState output_state() const = 0;
    virtual int input_components(int /*dim*/) const { return 1; }
    virtual int output_components(int /*dim*/) const { return 1; }

    virtual void apply(const Block &in, Block &out) const = 0;
    void apply(const Field &in, Field &out) const;

    Block make_output(const Block &in) const;
    Field make_output(const Field &in) const;

    const OperatorConfig &config() const { return m_config; }

private:
    OperatorConfig m_config;
};

/// Throws UnsupportedStrategy for SumFacTOP and for a collocated Helmholtz
/// request outside the supported strategies.
std::unique_ptr<Operator> make_operator(OperatorKind kind, const OperatorConfig &config);

} // namespace speckern
