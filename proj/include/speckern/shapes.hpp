#pragma once

#include "speckern/bases.hpp"
#include "speckern/matrix.hpp"

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace speckern
{

enum class ShapeType
{
    Quad,
    Tri,
    Hex,
    Prism,
    Pyr,
    Tet,
};

inline constexpr std::array<ShapeType, 6> kAllShapes = {ShapeType::Quad,  ShapeType::Tri,
                                                         ShapeType::Hex,   ShapeType::Prism,
                                                         ShapeType::Pyr,   ShapeType::Tet};

int dimension(ShapeType shape);
bool is_collapsed(ShapeType shape);
std::string_view to_string(ShapeType shape);
ShapeType parse_shape(std::string_view name);

/// Reference volume of the standard element.
double reference_volume(ShapeType shape);

using Point = std::array<double, 3>;

struct ModeIndex
{
    int p = 0;
    int q = 0;
    int r = 0;
    friend bool operator==(const ModeIndex &, const ModeIndex &) = default;
};

/// Admissible mode tuples in lexicographic order, p slowest.
class IndexSet
{
public:
    IndexSet(ShapeType shape, int order);

    ShapeType shape() const { return m_shape; }
    int order() const { return m_order; }
    int size() const { return static_cast<int>(m_modes.size()); }
    const ModeIndex &operator[](int m) const { return m_modes[m]; }
    const std::vector<ModeIndex> &modes() const { return m_modes; }

    /// Linear index of an admissible tuple, or -1.
    int linear(int p, int q, int r = 0) const;

    static bool admissible(ShapeType shape, int order, int p, int q, int r);

private:
    ShapeType m_shape;
    int m_order;
    std::vector<ModeIndex> m_modes;
    std::vector<int> m_lookup;
};

int mode_count(ShapeType shape, int order);

/// Default quadrature point counts per direction: P+2 Gauss-Lobatto points in
/// tensor directions, P+1 Gauss-Radau-Jacobi points in collapsed ones.
/// Unused directions report 1.
std::array<int, 3> quad_point_count(ShapeType shape, int order);
int total_quad_points(ShapeType shape, int order);

QuadratureKind direction_rule_kind(ShapeType shape, int direction);

/// Standard-element coordinates xi to collapsed coordinates eta. Throws
/// GeometryError at the collapsed singularity.
Point duffy_forward(ShapeType shape, const Point &xi);
Point duffy_inverse(ShapeType shape, const Point &eta);

/// Chain-rule factors of the collapsed coordinates at every tensor
/// quadrature point: g(l)[i][k] = d eta_k / d xi_i, so grad_xi = G grad_eta.
struct CollapsedMap
{
    ShapeType shape = ShapeType::Quad;
    int dim = 2;
    int num_points = 0;
    std::vector<double> g; ///< num_points * dim * dim

    double operator()(int point, int i, int k) const { return g[(point * dim + i) * dim + k]; }
    const double *at(int point) const { return g.data() + point * dim * dim; }
};

/// G at a single collapsed point.
std::array<std::array<double, 3>, 3> collapsed_jacobian(ShapeType shape, const Point &eta);

CollapsedMap build_collapsed_metric(ShapeType shape, const std::array<QuadratureRule, 3> &rules);

/// Value of mode m at collapsed coordinates eta (the vertex modes at a
/// collapsed edge are the ones with the extra split terms).
double eval_mode(ShapeType shape, int order, const ModeIndex &mode, const Point &eta);
/// Derivative of mode m with respect to eta_direction.
double eval_mode_derivative(ShapeType shape, int order, const ModeIndex &mode, const Point &eta,
                            int direction);

/// Factored representation used by the sum-factorisation kernels.
///
/// Modes are grouped into lines (the innermost index range): in 2D a line is
/// one p; in 3D a line is one (p,q) pair. `inner` is indexed by mode and holds
/// the last-direction factor; `middle` (3D only) is indexed by line; `outer`
/// is indexed by p. Mode and line fixes add the split contributions of modes
/// sitting on a collapsed vertex or edge.
struct SumFacPlan
{
    struct ModeFix
    {
        int src_mode;
        int dst_line;
    };
    struct LineFix
    {
        int src_line;
        int dst_outer;
    };

    int dim = 2;
    int num_outer = 0;
    int num_lines = 0;
    std::vector<int> line_begin;  ///< num_lines + 1 mode offsets
    std::vector<int> outer_begin; ///< num_outer + 1 line offsets (3D); equals line index in 2D
    std::vector<int> line_outer;  ///< p of each line
    Matrix inner, inner_d;        ///< num_modes x Q_last
    Matrix middle, middle_d;      ///< num_lines x Q_1 (3D)
    Matrix outer, outer_d;        ///< num_outer x Q_0
    std::vector<ModeFix> mode_fixes;
    std::vector<LineFix> line_fixes;
};

/// Everything needed to apply operators on one reference shape.
struct ShapeBasis
{
    ShapeType shape = ShapeType::Quad;
    int order = 1;
    int dim = 2;
    std::array<int, 3> nq{1, 1, 1};
    int num_points = 0;
    int num_modes = 0;
    IndexSet modes{ShapeType::Quad, 1};

    std::array<QuadratureRule, 3> rules;  ///< per direction (dim used)
    std::array<DiffMatrix, 3> diff;       ///< collocation derivative per direction
    std::vector<double> ref_weights;      ///< tensor weights incl. collapse factors
    std::vector<Point> eta;               ///< collapsed coordinates of each point
    CollapsedMap collapsed;

    Matrix b;                 ///< N_Q x N_P basis values
    std::array<Matrix, 3> db; ///< N_Q x N_P derivatives with respect to eta_d
    Matrix bt;                ///< N_P x N_Q transpose of b
    std::array<Matrix, 3> dbt;

    SumFacPlan plan;

    /// Dense N_Q x N_Q collocation derivative along each direction, and the
    /// transposes, built on first use.
    const std::array<Matrix, 3> &dense_collocation() const;
    const std::array<Matrix, 3> &dense_collocation_transposed() const;

    int point_index(int i, int j, int k = 0) const { return i + nq[0] * (j + nq[1] * k); }

private:
    void build_dense_collocation() const;

    mutable std::once_flag m_dense_once;
    mutable std::array<Matrix, 3> m_dense;
    mutable std::array<Matrix, 3> m_dense_t;
};

/// Builds the basis on the default quadrature (or `qpoints` when given).
/// Every direction must have at least P+1 points.
std::shared_ptr<const ShapeBasis> build_shape_basis(ShapeType shape, int order,
                                                    std::optional<std::array<int, 3>> qpoints = {});

namespace testing
{
/// Fault-injection hook for verification tests: when set, collapsed metrics
/// built afterwards carry a sign error in their off-diagonal entries.
void set_collapsed_metric_fault(bool enabled);
bool collapsed_metric_fault();
} // namespace testing

} // namespace speckern
