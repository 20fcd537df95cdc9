#include "speckern/memory_region.hpp"

#include "speckern/error.hpp"

#include <algorithm>
#include <utility>

namespace speckern
{

std::string_view to_string(MemorySpace space)
{
    return space == MemorySpace::Host ? "host" : "device";
}

std::string_view to_string(Access access)
{
    switch (access)
    {
    case Access::ReadOnly:
        return "ReadOnly";
    case Access::WriteOnly:
        return "WriteOnly";
    case Access::ReadWrite:
        return "ReadWrite";
    }
    return "?";
}

RegionHandle::RegionHandle(MemoryRegion *region, MemorySpace space, Access access, double *data,
                           std::size_t size)
    : m_region(region), m_space(space), m_access(access), m_data(data), m_size(size)
{
}

RegionHandle::RegionHandle(RegionHandle &&other) noexcept
    : m_region(std::exchange(other.m_region, nullptr)), m_space(other.m_space),
      m_access(other.m_access), m_data(std::exchange(other.m_data, nullptr)),
      m_size(std::exchange(other.m_size, 0))
{
}

RegionHandle &RegionHandle::operator=(RegionHandle &&other) noexcept
{
    if (this != &other)
    {
        release();
        m_region = std::exchange(other.m_region, nullptr);
        m_space = other.m_space;
        m_access = other.m_access;
        m_data = std::exchange(other.m_data, nullptr);
        m_size = std::exchange(other.m_size, 0);
    }
    return *this;
}

RegionHandle::~RegionHandle() { release(); }

std::span<double> RegionHandle::write() const
{
    if (m_access == Access::ReadOnly)
    {
        throw StateError("write through a ReadOnly handle");
    }
    return {m_data, m_size};
}

void RegionHandle::release()
{
    if (m_region)
    {
        m_region->release_handle(m_access);
        m_region = nullptr;
        m_data = nullptr;
        m_size = 0;
    }
}

MemoryRegion::MemoryRegion(std::size_t length) : m_length(length) {}

MemoryRegion::MemoryRegion(MemoryRegion &&other) noexcept
    : m_length(std::exchange(other.m_length, 0)), m_host(std::move(other.m_host)),
      m_device(std::move(other.m_device)), m_host_valid(std::exchange(other.m_host_valid, false)),
      m_device_valid(std::exchange(other.m_device_valid, false)),
      m_initialised(std::exchange(other.m_initialised, false)),
      m_transfers(std::exchange(other.m_transfers, 0)), m_to_host(std::exchange(other.m_to_host, 0)),
      m_to_device(std::exchange(other.m_to_device, 0))
{
}

MemoryRegion &MemoryRegion::operator=(MemoryRegion &&other) noexcept
{
    if (this != &other)
    {
        m_length = std::exchange(other.m_length, 0);
        m_host = std::move(other.m_host);
        m_device = std::move(other.m_device);
        m_host_valid = std::exchange(other.m_host_valid, false);
        m_device_valid = std::exchange(other.m_device_valid, false);
        m_initialised = std::exchange(other.m_initialised, false);
        m_transfers = std::exchange(other.m_transfers, 0);
        m_to_host = std::exchange(other.m_to_host, 0);
        m_to_device = std::exchange(other.m_to_device, 0);
        m_readers = 0;
        m_writer = false;
    }
    return *this;
}

MemoryRegion::~MemoryRegion() = default;

const double *MemoryRegion::buffer(MemorySpace space) const
{
    return space == MemorySpace::Host ? m_host.get() : m_device.get();
}

double *MemoryRegion::ensure(MemorySpace space)
{
    auto &buf = space == MemorySpace::Host ? m_host : m_device;
    if (!buf)
    {
        buf = std::make_unique<double[]>(m_length);
    }
    return buf.get();
}

bool MemoryRegion::valid(MemorySpace space) const
{
    return space == MemorySpace::Host ? m_host_valid : m_device_valid;
}

std::size_t MemoryRegion::transfers_to(MemorySpace space) const
{
    return space == MemorySpace::Host ? m_to_host : m_to_device;
}

RegionHandle MemoryRegion::access(MemorySpace space, Access access)
{
    if (space != MemorySpace::Host && space != MemorySpace::Device)
    {
        throw ConfigError("unknown memory space");
    }
    if (access != Access::WriteOnly && !m_initialised)
    {
        throw InitialisationError(std::string(to_string(access)) +
                                  " access to memory that has not been initialised");
    }
    const bool writes = access != Access::ReadOnly;
    if (m_writer || (writes && m_readers > 0))
    {
        throw StateError("memory region already has an active writer or readers");
    }

    const MemorySpace other = space == MemorySpace::Host ? MemorySpace::Device : MemorySpace::Host;
    bool &target_valid = space == MemorySpace::Host ? m_host_valid : m_device_valid;
    bool &other_valid = space == MemorySpace::Host ? m_device_valid : m_host_valid;

    double *data = ensure(space);
    if (access != Access::WriteOnly && !target_valid)
    {
        const double *src = buffer(other);
        std::copy(src, src + m_length, data);
        ++m_transfers;
        ++(space == MemorySpace::Host ? m_to_host : m_to_device);
    }
    target_valid = true;
    if (writes)
    {
        other_valid = false;
        m_writer = true;
    }
    else
    {
        ++m_readers;
    }
    m_initialised = true;
    return RegionHandle(this, space, access, data, m_length);
}

void MemoryRegion::release_handle(Access access)
{
    if (access == Access::ReadOnly)
    {
        m_readers = std::max(0, m_readers - 1);
    }
    else
    {
        m_writer = false;
    }
}

} // namespace speckern
