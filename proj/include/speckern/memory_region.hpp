#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>

namespace speckern
{

enum class MemorySpace
{
    Host,
    Device,
};

enum class Access
{
    ReadOnly,
    WriteOnly,
    ReadWrite,
};

std::string_view to_string(MemorySpace space);
std::string_view to_string(Access access);

class MemoryRegion;

/// Scoped view of one space of a region. A write-capable handle is exclusive;
/// read-only handles may coexist.
class RegionHandle
{
public:
    RegionHandle() = default;
    RegionHandle(RegionHandle &&other) noexcept;
    RegionHandle &operator=(RegionHandle &&other) noexcept;
    RegionHandle(const RegionHandle &) = delete;
    RegionHandle &operator=(const RegionHandle &) = delete;
    ~RegionHandle();

    MemorySpace space() const { return m_space; }
    Access access() const { return m_access; }
    std::size_t size() const { return m_size; }

    std::span<const double> read() const { return {m_data, m_size}; }
    /// Throws StateError on a read-only handle.
    std::span<double> write() const;

    void release();

private:
    friend class MemoryRegion;
    RegionHandle(MemoryRegion *region, MemorySpace space, Access access, double *data,
                 std::size_t size);

    MemoryRegion *m_region = nullptr;
    MemorySpace m_space = MemorySpace::Host;
    Access m_access = Access::ReadOnly;
    double *m_data = nullptr;
    std::size_t m_size = 0;
};

/// Host/device pair of buffers kept coherent through access qualifiers.
///
///   ReadOnly  : copy in if the target is stale; target valid; other unchanged
///   WriteOnly : allocate if needed, no copy; target valid; other invalid
///   ReadWrite : copy in if the target is stale; target valid; other invalid
///
/// The device space is a separate host allocation standing in for a
/// discrete memory space, so the transfer bookkeeping is observable.
class MemoryRegion
{
public:
    explicit MemoryRegion(std::size_t length = 0);
    MemoryRegion(MemoryRegion &&other) noexcept;
    MemoryRegion &operator=(MemoryRegion &&other) noexcept;
    MemoryRegion(const MemoryRegion &) = delete;
    MemoryRegion &operator=(const MemoryRegion &) = delete;
    ~MemoryRegion();

    std::size_t size() const { return m_length; }

    /// Throws InitialisationError for ReadOnly/ReadWrite before any WriteOnly
    /// access, StateError if it would violate the single-writer rule.
    RegionHandle access(MemorySpace space, Access access);

    bool initialised() const { return m_initialised; }
    bool allocated(MemorySpace space) const { return buffer(space) != nullptr; }
    bool valid(MemorySpace space) const;
    std::size_t transfers() const { return m_transfers; }
    std::size_t transfers_to(MemorySpace space) const;

private:
    friend class RegionHandle;

    const double *buffer(MemorySpace space) const;
    double *ensure(MemorySpace space);
    void release_handle(Access access);

    std::size_t m_length = 0;
    std::unique_ptr<double[]> m_host;
    std::unique_ptr<double[]> m_device;
    bool m_host_valid = false;
    bool m_device_valid = false;
    bool m_initialised = false;
    std::size_t m_transfers = 0;
    std::size_t m_to_host = 0;
    std::size_t m_to_device = 0;
    int m_readers = 0;
    bool m_writer = false;
};

} // namespace speckern
