#pragma once

#include <stdexcept>
#include <string>

namespace lq {

enum class ErrorCode {
  invalid_argument,
  parse,
  invalid_model,
  pole_proximity,
  root_clustering,
  partition,
  residual_exceeded,
  derivative_mismatch,
  small_q,
  oscillation,
  unknown_formula,
  io,
  internal,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C API can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lq
