#pragma once

#include <stdexcept>
#include <string>

namespace kwlab {

// Base class for all library errors so callers can catch the whole family.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The log term of the functional is undefined: \int h e^u dv_g <= 0.
struct NonpositiveMassError : Error {
  explicit NonpositiveMassError(double mass)
      : Error("nonpositive weighted mass: int h e^u dv_g = " + std::to_string(mass)),
        mass(mass) {}
  double mass;
};

struct NonpositiveWeightError : Error {
  using Error::Error;
};

struct AlphaTooSmallError : Error {
  explicit AlphaTooSmallError(double alpha)
      : Error("int e^{alpha phi0} diverges for alpha <= 1/2, got alpha = " +
              std::to_string(alpha)) {}
};

struct ConstantFieldError : Error {
  ConstantFieldError() : Error("field is constant") {}
};

struct AnnulusTooThinError : Error {
  explicit AnnulusTooThinError(std::size_t count)
      : Error("annulus holds only " + std::to_string(count) + " nodes (need >= 50)") {}
};

struct CoreContaminationError : Error {
  using Error::Error;
};

struct DistanceRangeError : Error {
  using Error::Error;
};

struct InadmissibleInitError : Error {
  using Error::Error;
};

struct LineSearchStallError : Error {
  using Error::Error;
};

struct InvalidScheduleError : Error {
  using Error::Error;
};

struct WindowTooLargeError : Error {
  using Error::Error;
};

struct NeckEmptyError : Error {
  using Error::Error;
};

struct ScaleTooLargeError : Error {
  using Error::Error;
};

struct EmptyPositiveSetError : Error {
  EmptyPositiveSetError() : Error("weight is nonpositive on the whole sampling lattice") {}
};

struct MissingArtifactsError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace kwlab
