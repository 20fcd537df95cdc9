#include "speckern/field.hpp"

#include "speckern/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace speckern
{

std::string_view to_string(FieldState state) { return state == FieldState::Coeff ? "coeff" : "phys"; }

int default_simd_width()
{
#if defined(__AVX512F__)
    return 8;
#elif defined(__AVX__)
    return 4;
#elif defined(__SSE2__) || defined(__ARM_NEON)
    return 2;
#else
    return 1;
#endif
}

namespace
{

void check_layout(std::size_t size, int num_elements, int num_points, int num_components,
                  int width, bool canonical)
{
    if (num_elements < 1 || num_points < 1 || num_components < 1 || width < 1)
    {
        throw ConfigError("layout sizes must be positive");
    }
    const std::size_t groups = (num_elements + width - 1) / width;
    const std::size_t elems = canonical ? num_elements : groups * width;
    if (size != elems * num_points * num_components)
    {
        throw ConfigError("buffer size does not match the layout");
    }
}

} // namespace

std::vector<double> interleave(std::span<const double> canonical, int num_elements, int num_points,
                               int num_components, int width)
{
    check_layout(canonical.size(), num_elements, num_points, num_components, width, true);
    const std::size_t groups = (num_elements + width - 1) / width;
    const std::size_t stride = groups * width * num_points;
    std::vector<double> out(stride * num_components, 0.0);
    for (int c = 0; c < num_components; ++c)
    {
        for (int e = 0; e < num_elements; ++e)
        {
            const std::size_t g = e / width;
            const int lane = e % width;
            const double *src =
                canonical.data() + (static_cast<std::size_t>(c) * num_elements + e) * num_points;
            double *dst = out.data() + c * stride + g * num_points * width + lane;
            for (int p = 0; p < num_points; ++p)
            {
                dst[p * width] = src[p];
            }
        }
    }
    return out;
}

std::vector<double> deinterleave(std::span<const double> stored, int num_elements, int num_points,
                                 int num_components, int width)
{
    check_layout(stored.size(), num_elements, num_points, num_components, width, false);
    const std::size_t groups = (num_elements + width - 1) / width;
    const std::size_t stride = groups * width * num_points;
    std::vector<double> out(static_cast<std::size_t>(num_elements) * num_points * num_components);
    for (int c = 0; c < num_components; ++c)
    {
        for (int e = 0; e < num_elements; ++e)
        {
            const std::size_t g = e / width;
            const int lane = e % width;
            const double *src = stored.data() + c * stride + g * num_points * width + lane;
            double *dst = out.data() + (static_cast<std::size_t>(c) * num_elements + e) * num_points;
            for (int p = 0; p < num_points; ++p)
            {
                dst[p] = src[p * width];
            }
        }
    }
    return out;
}

PackedGeometry pack_geometry(const GeometricFactors &geom, int width)
{
    PackedGeometry pg;
    pg.cls = geom.cls;
    pg.dim = geom.dim;
    pg.width = width;
    pg.num_groups = (geom.num_elements + width - 1) / width;
    pg.num_points = geom.cls == GeometryClass::Regular ? 1 : geom.num_points;
    const int dd = geom.dim * geom.dim;
    const std::size_t sites = static_cast<std::size_t>(pg.num_groups) * pg.num_points;
    pg.metric.assign(sites * dd * width, 0.0);
    pg.weight.assign(sites * width, 1.0);
    for (std::size_t g = 0; g < static_cast<std::size_t>(pg.num_groups); ++g)
    {
        for (int lane = 0; lane < width; ++lane)
        {
            const int e = static_cast<int>(g) * width + lane;
            for (int l = 0; l < pg.num_points; ++l)
            {
                const std::size_t site = g * pg.num_points + l;
                for (int k = 0; k < dd; ++k)
                {
                    const double v = e < geom.num_elements
                                         ? geom.metric(e, l, k / geom.dim, k % geom.dim)
                                         : (k / geom.dim == k % geom.dim ? 1.0 : 0.0);
                    pg.metric[(site * dd + k) * width + lane] = v;
                }
                if (e < geom.num_elements)
                {
                    pg.weight[site * width + lane] =
                        geom.cls == GeometryClass::Regular
                            ? geom.jac[e]
                            : geom.wj[static_cast<std::size_t>(e) * geom.num_points + l];
                }
            }
        }
    }
    return pg;
}

Block::Block(std::shared_ptr<const ShapeBasis> basis, std::shared_ptr<const GeometricFactors> geometry,
             FieldState state, int components, int width)
    : Block(std::move(basis), std::move(geometry), state, components, width, nullptr)
{
}

Block::Block(std::shared_ptr<const ShapeBasis> basis, std::shared_ptr<const GeometricFactors> geometry,
             FieldState state, int components, int width,
             std::shared_ptr<const PackedGeometry> packed)
    : m_basis(std::move(basis)), m_geometry(std::move(geometry)), m_packed(std::move(packed)),
      m_state(state), m_components(components), m_width(width)
{
    if (!m_basis || !m_geometry)
    {
        throw ConfigError("block needs a basis and geometry");
    }
    if (m_geometry->shape != m_basis->shape || m_geometry->dim != m_basis->dim)
    {
        throw ConfigError("geometry does not belong to the block's shape");
    }
    if (m_geometry->cls == GeometryClass::Deformed && m_geometry->num_points != m_basis->num_points)
    {
        throw ConfigError("deformed geometry was built on a different quadrature");
    }
    if (components < 1 || width < 1 || m_geometry->num_elements < 1)
    {
        throw ConfigError("block sizes must be positive");
    }
    if (!m_packed)
    {
        m_packed = std::make_shared<const PackedGeometry>(pack_geometry(*m_geometry, m_width));
    }
    m_data = MemoryRegion(component_stride() * m_components);
    m_data.access(MemorySpace::Host, Access::WriteOnly);
}

Block Block::like(FieldState state, int components) const
{
    return Block(m_basis, m_geometry, state, components, m_width, m_packed);
}

int Block::points_per_element() const
{
    return m_state == FieldState::Coeff ? m_basis->num_modes : m_basis->num_points;
}

std::vector<double> Block::to_canonical() const
{
    auto h = m_data.access(MemorySpace::Host, Access::ReadOnly);
    return deinterleave(h.read(), num_elements(), points_per_element(), m_components, m_width);
}

void Block::from_canonical(std::span<const double> values)
{
    auto stored = interleave(values, num_elements(), points_per_element(), m_components, m_width);
    auto h = m_data.access(MemorySpace::Host, Access::WriteOnly);
    std::copy(stored.begin(), stored.end(), h.write().begin());
}

void Field::add_block(Block block)
{
    if (block.state() != m_state)
    {
        throw StateError("block state differs from the field state");
    }
    m_blocks.push_back(std::move(block));
}

Field Field::like(FieldState state, int components) const
{
    Field f(state);
    for (const Block &b : m_blocks)
    {
        f.add_block(b.like(state, components));
    }
    return f;
}

Field make_field(std::span<const BlockSpec> blocks, int order, GeometryClass geometry,
                 FieldState state, const FieldOptions &options)
{
    if (blocks.empty())
    {
        throw ConfigError("a field needs at least one block");
    }
    const int width = options.width > 0 ? options.width : default_simd_width();
    Field field(state);
    std::uint64_t block_index = 0;
    for (const BlockSpec &spec : blocks)
    {
        if (spec.num_elements < 1)
        {
            throw ConfigError("a block needs at least one element");
        }
        auto basis = build_shape_basis(spec.shape, order, options.qpoints);
        const SyntheticMesh mesh = make_synthetic_mesh(
            spec.shape, spec.num_elements, element_seed(options.seed, block_index++),
            geometry == GeometryClass::Deformed ? options.amplitude : 0.0);
        auto geom = std::make_shared<const GeometricFactors>(build_geometry(mesh, geometry, *basis));
        field.add_block(Block(std::move(basis), std::move(geom), state, 1, width));
    }
    return field;
}

namespace
{

constexpr char kMagic[4] = {'S', 'K', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream &out, std::uint32_t v)
{
    unsigned char b[4];
    for (int i = 0; i < 4; ++i)
    {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(b), 4);
}

void put_f64(std::ostream &out, double d)
{
    const auto v = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
    {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(b), 8);
}

std::uint32_t get_u32(std::istream &in)
{
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char *>(b), 4))
    {
        throw ConfigError("truncated field dump");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
    {
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    }
    return v;
}

double get_f64(std::istream &in)
{
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char *>(b), 8))
    {
        throw ConfigError("truncated field dump");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
    {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return std::bit_cast<double>(v);
}

} // namespace

void write_field_dump(const Field &field, std::ostream &out)
{
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(field.size()));
    for (const Block &b : field.blocks())
    {
        put_u32(out, static_cast<std::uint32_t>(b.shape()));
        put_u32(out, b.order());
        put_u32(out, static_cast<std::uint32_t>(b.state()));
        for (int d = 0; d < 3; ++d)
        {
            put_u32(out, b.basis().nq[d]);
        }
        put_u32(out, b.num_elements());
        put_u32(out, b.components());
        put_u32(out, b.points_per_element());
        put_u32(out, b.width());
        for (double v : b.to_canonical())
        {
            put_f64(out, v);
        }
    }
}

std::vector<BlockDump> read_field_dump(std::istream &in)
{
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    {
        throw ConfigError("not a field dump");
    }
    if (get_u32(in) != kVersion)
    {
        throw ConfigError("unsupported field dump version");
    }
    const std::uint32_t count = get_u32(in);
    std::vector<BlockDump> blocks(count);
    for (BlockDump &b : blocks)
    {
        const std::uint32_t shape = get_u32(in);
        if (shape >= kAllShapes.size())
        {
            throw ConfigError("bad shape in field dump");
        }
        b.shape = static_cast<ShapeType>(shape);
        b.order = static_cast<int>(get_u32(in));
        b.state = get_u32(in) == 0 ? FieldState::Coeff : FieldState::Phys;
        for (int d = 0; d < 3; ++d)
        {
            b.nq[d] = static_cast<int>(get_u32(in));
        }
        b.num_elements = static_cast<int>(get_u32(in));
        b.num_components = static_cast<int>(get_u32(in));
        b.points_per_element = static_cast<int>(get_u32(in));
        b.width = static_cast<int>(get_u32(in));
        const std::size_t n =
            static_cast<std::size_t>(b.num_elements) * b.num_components * b.points_per_element;
        b.values.resize(n);
        for (double &v : b.values)
        {
            v = get_f64(in);
        }
    }
    return blocks;
}

} // namespace speckern
