#pragma once

#include <stdexcept>
#include <string>

namespace aims {

/// Coarse error classes. The CLI maps them to process exit codes.
enum class ErrorKind {
  kConfig,     // exit 2
  kData,       // exit 3
  kNumerical,  // exit 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
      return 3;
    case ErrorKind::kNumerical:
      return 4;
  }
  return 1;
}

#define AIMS_DEFINE_ERROR(Name, Kind)                                               \
  class Name : public Error {                                                       \
   public:                                                                          \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name ": " + what) {} \
  }

// configuration
AIMS_DEFINE_ERROR(ParseError, kConfig);
AIMS_DEFINE_ERROR(ValidationError, kConfig);

// data / stream integrity
AIMS_DEFINE_ERROR(DataError, kData);
AIMS_DEFINE_ERROR(GapTooLarge, kData);
AIMS_DEFINE_ERROR(OutOfRange, kData);
AIMS_DEFINE_ERROR(EmptyBundle, kData);
AIMS_DEFINE_ERROR(NoSamples, kData);
AIMS_DEFINE_ERROR(InsufficientCoverage, kData);

// numerics
AIMS_DEFINE_ERROR(NonFinite, kNumerical);
AIMS_DEFINE_ERROR(SingularInnovation, kNumerical);
AIMS_DEFINE_ERROR(IllConditioned, kNumerical);

#undef AIMS_DEFINE_ERROR

}  // namespace aims
