#pragma once

#include <stdexcept>
#include <string>

namespace rbpn {

// Every failure raised by the library derives from Error. The `kind()` tag is
// what the CLI maps onto exit codes.
enum class ErrorKind {
  kUsage,    // bad configuration or arguments
  kData,     // missing/corrupt files, layout problems
  kNumeric,  // divergence, non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define RBPN_DEFINE_ERROR(Name, Kind)                                      \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(Kind, #Name ": " + what) {} \
  }

RBPN_DEFINE_ERROR(ConfigError, ErrorKind::kUsage);
RBPN_DEFINE_ERROR(ShapeError, ErrorKind::kUsage);
RBPN_DEFINE_ERROR(ArityError, ErrorKind::kUsage);
RBPN_DEFINE_ERROR(RangeError, ErrorKind::kUsage);
RBPN_DEFINE_ERROR(EmptyInputError, ErrorKind::kUsage);
RBPN_DEFINE_ERROR(PatchTooLargeError, ErrorKind::kUsage);
RBPN_DEFINE_ERROR(FormatError, ErrorKind::kData);
RBPN_DEFINE_ERROR(IoError, ErrorKind::kData);
RBPN_DEFINE_ERROR(MissingFlowError, ErrorKind::kData);
RBPN_DEFINE_ERROR(SubprocessError, ErrorKind::kData);
RBPN_DEFINE_ERROR(LayoutError, ErrorKind::kData);
RBPN_DEFINE_ERROR(EmptySequenceError, ErrorKind::kData);
RBPN_DEFINE_ERROR(DivergenceError, ErrorKind::kNumeric);

#undef RBPN_DEFINE_ERROR

}  // namespace rbpn
