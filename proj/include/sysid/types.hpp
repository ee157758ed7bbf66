#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sysid {

// Dense column-major types. Everything downstream computes in double; the
// scalar-templated aliases exist for callers that want another precision.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;
using Index = Eigen::Index;

// Error taxonomy shared by all modules. The CLI maps SingularGramError to
// exit code 3 and every other category below to exit code 2.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Weighted Gram matrix Z Q Z* not positive definite at the rank tolerance.
// Carries the offending minimum eigenvalue and the column count of the batch
// so callers can report how far the data was from identifiable.
class SingularGramError : public std::runtime_error {
 public:
  SingularGramError(const std::string& what, double min_eig, Index columns)
      : std::runtime_error(what), min_eig_(min_eig), columns_(columns) {}

  double min_eig() const { return min_eig_; }
  Index columns() const { return columns_; }

 private:
  double min_eig_;
  Index columns_;
};

}  // namespace sysid
