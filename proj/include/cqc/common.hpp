#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cqc {

inline constexpr const char* kVersion = "cqcsim 0.1.0";

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr Complex kImag{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Input that violates a documented precondition: bad configuration values,
// non-Hermitian matrices, mismatched dimensions, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation that cannot meet its accuracy contract: overflow, step-size
// rejection, a series that fails to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

inline void require_numeric(bool cond, const std::string& msg) {
  if (!cond) throw NumericalError(msg);
}

}  // namespace cqc
