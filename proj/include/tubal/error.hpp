#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tubal {

enum class Errc {
  dimension_mismatch,
  imaginary_residue_too_large,
  index_out_of_bounds,
  numerical_failure,
  invalid_rank,
  invalid_rate,
  invalid_config,
  invalid_spec,
  zero_tensor,
  zero_reference,
  empty_set,
  identical_inputs,
  non_finite_iterate,
  bad_magic,
  truncated_payload,
  dim_overflow,
  unsupported_format,
  io_error,
};

constexpr std::string_view to_string(Errc e) noexcept {
  switch (e) {
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::imaginary_residue_too_large: return "ImaginaryResidueTooLarge";
    case Errc::index_out_of_bounds: return "IndexOutOfBounds";
    case Errc::numerical_failure: return "NumericalFailure";
    case Errc::invalid_rank: return "InvalidRank";
    case Errc::invalid_rate: return "InvalidRate";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::zero_tensor: return "ZeroTensor";
    case Errc::zero_reference: return "ZeroReference";
    case Errc::empty_set: return "EmptySet";
    case Errc::identical_inputs: return "IdenticalInputs";
    case Errc::non_finite_iterate: return "NonFiniteIterate";
    case Errc::bad_magic: return "BadMagic";
    case Errc::truncated_payload: return "TruncatedPayload";
    case Errc::dim_overflow: return "DimOverflow";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::io_error: return "IOError";
  }
  return "Unknown";
}

/// Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
constexpr bool is_numerical(Errc e) noexcept {
  return e == Errc::numerical_failure || e == Errc::non_finite_iterate ||
         e == Errc::imaginary_residue_too_large;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tubal
