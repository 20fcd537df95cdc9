#pragma once

#include "speckern/error.hpp"
#include "speckern/operators.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace speckern
{

/// Numerical disagreement found while verifying or before timing.
class VerificationError : public Error
{
public:
    using Error::Error;
};

enum class BenchOp
{
    Mass,
    Helmholtz,
    BwdTrans,
};

std::string_view to_string(BenchOp op);
BenchOp parse_bench_op(std::string_view name);

struct BenchConfig
{
    BenchOp op = BenchOp::Helmholtz;
    std::vector<ShapeType> shapes{ShapeType::Hex};
    int order_min = 1;
    int order_max = 4;
    std::vector<int> nelem{1024};
    std::vector<Strategy> strategies{Strategy::SumFac};
    GeometryClass geometry = GeometryClass::Regular;
    std::optional<HelmholtzForm> form; ///< per-strategy default when empty
    double lambda = 1.0;
    int simd_width = 0; ///< 0 selects the target default
    std::optional<std::array<int, 3>> qpoints;
    int reps = 5;
    int warmup = 1;
    std::uint64_t seed = 1;
    double amplitude = 0.05;
    double min_batch_seconds = 0.05;
};

/// Throws ConfigError on empty ranges, fewer than 3 repetitions and similar.
void validate(const BenchConfig &config);

struct BenchRecord
{
    BenchOp op = BenchOp::Helmholtz;
    ShapeType shape = ShapeType::Hex;
    int order = 1;
    Strategy strategy = Strategy::SumFac;
    GeometryClass geometry = GeometryClass::Regular;
    std::optional<HelmholtzForm> form;
    int nelem = 0;
    std::uint64_t ndof = 0;     ///< nelem * N_P, output coefficients
    double seconds = 0.0;       ///< median time of one application
    double dof_per_s = 0.0;
    std::uint64_t flops_per_elem = 0;
    std::uint64_t bytes_estimate = 0;
    int iterations = 0;                ///< applications per timed batch
    std::vector<double> batch_seconds; ///< raw batch timings
};

std::string csv_header();
std::string csv_row(const BenchRecord &r);

/// Times every (shape, P, nelem, strategy) combination. Each combination is
/// checked against a second strategy at 1e-10 before timing.
std::vector<BenchRecord> run_bench(const BenchConfig &config, ThreadPool *pool = nullptr,
                                   std::ostream *progress = nullptr);

struct VerifyScope
{
    std::vector<ShapeType> shapes{kAllShapes.begin(), kAllShapes.end()};
    std::vector<BenchOp> ops{BenchOp::Mass, BenchOp::Helmholtz};
    std::vector<GeometryClass> geometries{GeometryClass::Regular, GeometryClass::Deformed};
    std::vector<Strategy> strategies{Strategy::StdMat, Strategy::StdMatGrouped, Strategy::SumFac};
    int order_min = 1;
    int order_max = 4;
    std::vector<double> lambdas{0.0, 1.0, 2.5};
    int nelem = 3;
    int simd_width = 0;
    std::uint64_t seed = 1;
    double tolerance = 1e-11;
};

struct VerifyCase
{
    std::string label;
    double max_rel_error = 0.0;
    bool passed = false;
};

struct VerifyReport
{
    std::vector<VerifyCase> cases;
    int failures() const;
};

/// Operator actions against the dense oracle, and collocated against
/// non-collocated Helmholtz. One line per case goes to `out` when given.
VerifyReport run_verify(const VerifyScope &scope, std::ostream *out = nullptr);

enum class CompareAxis
{
    Geometry,
    Form,
    Strategy,
};

std::string_view to_string(CompareAxis axis);

struct CompareRow
{
    ShapeType shape = ShapeType::Hex;
    int order = 1;
    int nelem = 0;
    CompareAxis axis = CompareAxis::Strategy;
    std::string a_label;
    std::string b_label;
    double a_dof_per_s = 0.0;
    double b_dof_per_s = 0.0;
    double ratio = 0.0; ///< b / a
};

/// The configurations must differ in exactly one of geometry, Helmholtz form
/// and strategy, and agree on everything else.
CompareAxis compare_axis(const BenchConfig &a, const BenchConfig &b);

std::vector<CompareRow> run_compare(const BenchConfig &a, const BenchConfig &b,
                                    ThreadPool *pool = nullptr, std::ostream *progress = nullptr);

std::string compare_csv_header();
std::string compare_csv_row(const CompareRow &r);

/// Uniform [-1, 1) values from a seeded generator.
std::vector<double> random_values(std::size_t n, std::uint64_t seed);

} // namespace speckern
