#ifndef AQE_ERROR_HPP
#define AQE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace aqe {

enum class ErrorKind {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kParse,
  kIo,
  kCorrupt,
  kVersionMismatch,
  kInfeasible,
  kMissingGroup,
  kUnsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace aqe

#endif  // AQE_ERROR_HPP
