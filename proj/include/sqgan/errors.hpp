#pragma once

#include <stdexcept>
#include <string>

namespace sqgan {

// Broad failure classes; the CLI maps each one to a process exit code.
enum class ErrorClass { Usage, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define SQGAN_DEFINE_ERROR(Name, Class)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, what) {} \
  }

SQGAN_DEFINE_ERROR(SizeError, Usage);
SQGAN_DEFINE_ERROR(IndexError, Usage);
SQGAN_DEFINE_ERROR(ArgumentError, Usage);
SQGAN_DEFINE_ERROR(UnsupportedError, Usage);
SQGAN_DEFINE_ERROR(ConfigError, Usage);
SQGAN_DEFINE_ERROR(CapacityError, Usage);
SQGAN_DEFINE_ERROR(RangeError, Data);
SQGAN_DEFINE_ERROR(GridError, Data);
SQGAN_DEFINE_ERROR(DegenerateDataError, Data);
SQGAN_DEFINE_ERROR(DataError, Data);
SQGAN_DEFINE_ERROR(DomainError, Numeric);
SQGAN_DEFINE_ERROR(NumericError, Numeric);
SQGAN_DEFINE_ERROR(MissingGradientError, Numeric);

#undef SQGAN_DEFINE_ERROR

}  // namespace sqgan
