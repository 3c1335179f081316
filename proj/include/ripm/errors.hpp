#ifndef RIPM_ERRORS_HPP
#define RIPM_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ripm {

enum class ErrorKind {
  Structural,
  SingularBlock,
  FactorizationFailure,
  UpdateSingular,
  OutOfDomain,
  MissingAnalyticCenter,
  CertificateInvalid,
  UnsupportedLoss,
  IterationLimit,
  NumericalBreakdown,
  Infeasible,
  Unbounded,
  InvalidArgument,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Structural: return "Structural";
    case ErrorKind::SingularBlock: return "SingularBlock";
    case ErrorKind::FactorizationFailure: return "FactorizationFailure";
    case ErrorKind::UpdateSingular: return "UpdateSingular";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::MissingAnalyticCenter: return "MissingAnalyticCenter";
    case ErrorKind::CertificateInvalid: return "CertificateInvalid";
    case ErrorKind::UnsupportedLoss: return "UnsupportedLoss";
    case ErrorKind::IterationLimit: return "IterationLimit";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure raised by the library. `block()` is set when the failure
/// is attributable to one block of the partition.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<std::size_t> block = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        block_(block) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> block() const noexcept { return block_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> block_;
};

namespace detail {
inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}
}  // namespace detail

}  // namespace ripm

#endif  // RIPM_ERRORS_HPP
