#pragma once

#include <stdexcept>
#include <string>

namespace gpgc {

// Base class for every error raised by the library. The CLI maps any of
// these to exit code 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define GPGC_DEFINE_ERROR(Name)                                                \
  class Name : public Error {                                                  \
  public:                                                                      \
    using Error::Error;                                                        \
  }

GPGC_DEFINE_ERROR(DataFormatError);
GPGC_DEFINE_ERROR(LabelError);
GPGC_DEFINE_ERROR(NumericError);
GPGC_DEFINE_ERROR(BalanceError);
GPGC_DEFINE_ERROR(DimensionError);
GPGC_DEFINE_ERROR(DomainError);
GPGC_DEFINE_ERROR(SingularityError);
GPGC_DEFINE_ERROR(StaleCacheError);
GPGC_DEFINE_ERROR(InitializationError);
GPGC_DEFINE_ERROR(SizeError);
GPGC_DEFINE_ERROR(ProtocolError);
GPGC_DEFINE_ERROR(WorkerLostError);
GPGC_DEFINE_ERROR(TimeoutError);

#undef GPGC_DEFINE_ERROR

} // namespace gpgc
