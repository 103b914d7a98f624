#pragma once

#include <stdexcept>
#include <string>

namespace vfbl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VFBL_DEFINE_ERROR(Name)                         \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

VFBL_DEFINE_ERROR(DiagonalSingularity);
VFBL_DEFINE_ERROR(DomainError);
VFBL_DEFINE_ERROR(QuadratureFailure);
VFBL_DEFINE_ERROR(FactorizationFailure);
VFBL_DEFINE_ERROR(IndexError);
VFBL_DEFINE_ERROR(SingularRegression);
VFBL_DEFINE_ERROR(LipschitzViolation);
VFBL_DEFINE_ERROR(DirectionSingularity);
VFBL_DEFINE_ERROR(ConfigError);
VFBL_DEFINE_ERROR(IoError);

#undef VFBL_DEFINE_ERROR

}  // namespace vfbl
