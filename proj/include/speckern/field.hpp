#pragma once

#include "speckern/geometry.hpp"
#include "speckern/memory_region.hpp"
#include "speckern/shapes.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace speckern
{

enum class FieldState
{
    Coeff,
    Phys,
};

std::string_view to_string(FieldState state);

/// Number of doubles in the widest vector register of the target.
int default_simd_width();

/// Canonical order is component, element, point (point fastest). Stored order
/// groups `width` elements and puts their lanes innermost:
///   c * (padded * npts) + g * (npts * width) + p * width + lane
/// Lanes past the last element are zero.
std::vector<double> interleave(std::span<const double> canonical, int num_elements, int num_points,
                               int num_components, int width);
std::vector<double> deinterleave(std::span<const double> stored, int num_elements, int num_points,
                                 int num_components, int width);

/// Geometric factors rearranged to the block's grouped layout.
///   Regular : metric[(g * d*d + k) * W + lane], weight[g * W + lane] = |J|
///   Deformed: metric[((g * N_Q + l) * d*d + k) * W + lane],
///             weight[(g * N_Q + l) * W + lane] = w_l |J_l|
/// Padded lanes carry an identity metric and unit weight.
struct PackedGeometry
{
    GeometryClass cls = GeometryClass::Regular;
    int dim = 2;
    int width = 1;
    int num_groups = 0;
    int num_points = 0;
    std::vector<double> metric;
    std::vector<double> weight;
};

PackedGeometry pack_geometry(const GeometricFactors &geom, int width);

/// Homogeneous set of elements sharing a shape, order, quadrature and
/// geometry class.
class Block
{
public:
    Block(std::shared_ptr<const ShapeBasis> basis, std::shared_ptr<const GeometricFactors> geometry,
          FieldState state, int components = 1, int width = 1);

    /// Same elements and geometry, different state or component count.
    Block like(FieldState state, int components = 1) const;

    ShapeType shape() const { return m_basis->shape; }
    int order() const { return m_basis->order; }
    int dim() const { return m_basis->dim; }
    const ShapeBasis &basis() const { return *m_basis; }
    const std::shared_ptr<const ShapeBasis> &basis_ptr() const { return m_basis; }
    const GeometricFactors &geometry() const { return *m_geometry; }
    const PackedGeometry &packed_geometry() const { return *m_packed; }

    FieldState state() const { return m_state; }
    int components() const { return m_components; }
    int width() const { return m_width; }
    int num_elements() const { return m_geometry->num_elements; }
    int num_groups() const { return (num_elements() + m_width - 1) / m_width; }
    int padded_elements() const { return num_groups() * m_width; }
    int points_per_element() const;
    std::size_t component_stride() const
    {
        return static_cast<std::size_t>(padded_elements()) * points_per_element();
    }
    std::size_t index(int component, int element, int point) const
    {
        const int g = element / m_width;
        const int lane = element % m_width;
        return component * component_stride() +
               (static_cast<std::size_t>(g) * points_per_element() + point) * m_width + lane;
    }

    MemoryRegion &region() const { return m_data; }

    /// Host copy in canonical order (padding dropped).
    std::vector<double> to_canonical() const;
    /// Overwrites the host data from canonical order.
    void from_canonical(std::span<const double> values);

private:
    Block(std::shared_ptr<const ShapeBasis> basis, std::shared_ptr<const GeometricFactors> geometry,
          FieldState state, int components, int width,
          std::shared_ptr<const PackedGeometry> packed);

    std::shared_ptr<const ShapeBasis> m_basis;
    std::shared_ptr<const GeometricFactors> m_geometry;
    std::shared_ptr<const PackedGeometry> m_packed;
    FieldState m_state;
    int m_components;
    int m_width;
    mutable MemoryRegion m_data;
};

class Field
{
public:
    explicit Field(FieldState state) : m_state(state) {}

    FieldState state() const { return m_state; }
    void add_block(Block block);
    std::vector<Block> &blocks() { return m_blocks; }
    const std::vector<Block> &blocks() const { return m_blocks; }
    std::size_t size() const { return m_blocks.size(); }
    Block &operator[](std::size_t i) { return m_blocks[i]; }
    const Block &operator[](std::size_t i) const { return m_blocks[i]; }

    /// Same blocks in another state.
    Field like(FieldState state, int components = 1) const;

private:
    FieldState m_state;
    std::vector<Block> m_blocks;
};

struct BlockSpec
{
    ShapeType shape = ShapeType::Hex;
    int num_elements = 1;
};

struct FieldOptions
{
    int width = 0; ///< 0 selects default_simd_width()
    std::uint64_t seed = 1;
    double amplitude = 0.05;
    std::optional<std::array<int, 3>> qpoints;
};

/// Builds the blocks on synthetic meshes with precomputed geometry; data is
/// zero-initialised through a host WriteOnly access.
Field make_field(std::span<const BlockSpec> blocks, int order, GeometryClass geometry,
                 FieldState state, const FieldOptions &options = {});

/// Flat binary dump: a header per block followed by little-endian doubles in
/// canonical order.
struct BlockDump
{
    ShapeType shape = ShapeType::Quad;
    int order = 1;
    FieldState state = FieldState::Coeff;
    std::array<int, 3> nq{1, 1, 1};
    int num_elements = 0;
    int num_components = 0;
    int points_per_element = 0;
    int width = 1;
    std::vector<double> values;
};

void write_field_dump(const Field &field, std::ostream &out);
std::vector<BlockDump> read_field_dump(std::istream &in);

} // namespace speckern
