#pragma once

#include <stdexcept>
#include <string>

namespace msf {

// Every failure raised by the library derives from Error so callers can catch
// one type; the subclasses let tests pin the exact category.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct LookupError : Error { using Error::Error; };
struct DegenerateDataError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct LengthError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct PartitionError : Error { using Error::Error; };
struct EmptyInputError : Error { using Error::Error; };

// Raised by the training loop; carries the last epoch whose loss was finite.
struct TrainingDivergedError : NumericError {
  TrainingDivergedError(const std::string& what, long last_good_epoch)
      : NumericError(what), last_good_epoch(last_good_epoch) {}
  long last_good_epoch;  // -1 when the first epoch already diverged
};

}  // namespace msf
