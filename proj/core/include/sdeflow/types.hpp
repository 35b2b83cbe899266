#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdeflow {

// Flow state lives in small fixed-capacity storage so the inner loop never
// touches the heap. Quadrature beyond d = 3 is not supported anyway.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model, config, or mismatched dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Index outside [0, K] or [0, d).
class IndexError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during time stepping.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

/// det(J) <= 0: the discrete flow stopped being orientation preserving.
class DeterminantSignError : public Error {
 public:
  using Error::Error;
};

/// A closed form was requested for a model outside its hypotheses.
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

/// A CLI stage was invoked before the stage whose output it reads.
class StageDependencyError : public Error {
 public:
  using Error::Error;
};

inline Vec zero_vec(int d) { return Vec::Zero(d); }
inline Mat zero_mat(int d) { return Mat::Zero(d, d); }
inline Mat identity_mat(int d) { return Mat::Identity(d, d); }

}  // namespace sdeflow
