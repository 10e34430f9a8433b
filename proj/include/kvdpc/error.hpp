#pragma once

#include <stdexcept>
#include <string>

namespace kvdpc {

/// Invalid user-supplied configuration (bad scenario values, empty bands, ...).
class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical backend failed to produce a usable answer.
class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(bool ok, const std::string & what)
{
  if (!ok) { throw DimensionError(what); }
}

}  // namespace kvdpc
