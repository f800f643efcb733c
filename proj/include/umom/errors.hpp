#pragma once

#include <stdexcept>

namespace umom {

// Error taxonomy aligned with the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, CapacityError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data (unparseable file, empty sequence, non-finite value).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requested exact design is larger than the enumeration cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace umom
