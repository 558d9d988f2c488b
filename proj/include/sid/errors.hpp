#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sid {

enum class ErrorKind {
  kDecode,
  kUnsupportedFormat,
  kParameter,
  kEmptyPairs,
  kLoad,
  kVersion,
  kContractViolation,
  kEmptyDataset,
  kDegenerateClass,
  kUndefinedValue,
  kValidation,
  kIo,
};

std::string_view error_kind_name(ErrorKind kind);

/// Every failure raised by the toolkit carries a machine-readable kind so the
/// CLI can map it onto an exit status and an error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace sid
