#pragma once

#include <stdexcept>
#include <string>

namespace fploc {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable or malformed input file.
class LoadError : public Error
{
public:
  using Error::Error;
};

/// Input violates a documented invariant.
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// The camera's optical axis is (near) vertical, so no planar field of view exists.
class DegenerateFrustumError : public Error
{
public:
  using Error::Error;
};

}  // namespace fploc
