#pragma once

#include <stdexcept>
#include <string>

namespace d2dcache {

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// A configuration value broke an invariant; `field` names the offender.
struct ValidationError : Error
{
  ValidationError(std::string field_name, const std::string& what)
    : Error(field_name + ": " + what), field(std::move(field_name))
  {}
  std::string field;
};

struct ParseError : Error
{
  using Error::Error;
};

}  // namespace d2dcache
