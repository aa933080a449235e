#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace amz {

enum class ErrorKind {
  reject_out_of_region,
  domain,
  consistency,
  infeasible,
  invalid_field,
  size,
  grid_mismatch,
  no_certificate,
  parameter,
  empty_input,
  degenerate_fit,
  parse,
  validation,
  io,
  malformed_series,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::reject_out_of_region: return "reject-out-of-region";
    case ErrorKind::domain: return "domain-error";
    case ErrorKind::consistency: return "consistency-error";
    case ErrorKind::infeasible: return "infeasible-error";
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::size: return "size-error";
    case ErrorKind::grid_mismatch: return "grid-mismatch";
    case ErrorKind::no_certificate: return "no-certificate-found";
    case ErrorKind::parameter: return "parameter-error";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::degenerate_fit: return "degenerate-fit";
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::validation: return "validation-error";
    case ErrorKind::io: return "io-error";
    case ErrorKind::malformed_series: return "malformed-series";
  }
  return "error";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace amz
