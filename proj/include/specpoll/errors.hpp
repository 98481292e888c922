#pragma once

#include <stdexcept>
#include <string>

namespace specpoll
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A vector or block refers to a basis index the operator does not know about,
/// or blocks of two operators do not line up.
class StructuralError : public Error
{
  public:
    using Error::Error;
};

/// A functional-calculus shift or parameter is outside the admissible domain.
class DomainError : public Error
{
  public:
    using Error::Error;
};

/// The Gram matrix of a spanning set is too ill-conditioned to be trusted.
class ConditioningError : public Error
{
  public:
    using Error::Error;
};

/// Invalid user input: unknown example, out-of-range parameter, bad schedule.
class InvalidArgument : public Error
{
  public:
    using Error::Error;
};

} // namespace specpoll
