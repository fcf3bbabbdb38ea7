#pragma once

#include <stdexcept>
#include <string>

namespace mfgnet {

  enum class NumericalErrc {
    StepTooCoarse,
    ZeroMass,
    CflViolation,
    NonpositivePhi,
    InvalidArgument,
  };

  inline const char* to_string(NumericalErrc code) {
    switch (code) {
      case NumericalErrc::StepTooCoarse:
        return "StepTooCoarse";
      case NumericalErrc::ZeroMass:
        return "ZeroMass";
      case NumericalErrc::CflViolation:
        return "CflViolation";
      case NumericalErrc::NonpositivePhi:
        return "NonpositivePhi";
      case NumericalErrc::InvalidArgument:
        return "InvalidArgument";
    }
    return "Unknown";
  }

  class NumericalError : public std::runtime_error {
  public:
    NumericalError(NumericalErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), m_code(code) {}
    NumericalErrc code() const noexcept { return m_code; }

  private:
    NumericalErrc m_code;
  };

}  // namespace mfgnet
