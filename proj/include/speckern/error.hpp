#pragma once

#include <stdexcept>
#include <string>

namespace speckern
{

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters: bad order, unknown shape, inconsistent sizes.
class ConfigError : public Error
{
public:
    using Error::Error;
};

/// Operand in the wrong field state (Coeff vs Phys) or wrong component count.
class StateError : public Error
{
public:
    using Error::Error;
};

/// Read access to a memory region that was never written.
class InitialisationError : public Error
{
public:
    using Error::Error;
};

class UnsupportedStrategy : public Error
{
public:
    using Error::Error;
};

/// Non-positive Jacobian or evaluation at a collapsed vertex.
class GeometryError : public Error
{
public:
    using Error::Error;
};

} // namespace speckern
